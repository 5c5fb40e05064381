//! Steiner triple systems and their nonincident point/block sets.
//!
//! A nonincident set in an STS(v) is `s` points and `s` blocks with no point
//! on any of the blocks; `f(v)` is the largest such `s` over all STS(v). The
//! crate provides:
//!
//! - [`design`]: the incidence structure, STS validation and the predicates
//!   behind the counting argument (disjoint-block counts, coverage profiles,
//!   subsystems, maximal arcs);
//! - [`constructions`]: Bose, doubling and hill-climbing embeddings of a
//!   prescribed subsystem;
//! - [`bounds`]: exact integer bounds on `f(v)` and the four families of
//!   orders where the bound is attained;
//! - [`search`]: exact branch-and-bound and greedy search for a given design;
//! - [`certificate`]: digest-bound witnesses and their verification.

pub mod bitset;
pub mod bounds;
pub mod certificate;
pub mod constructions;
pub mod design;
pub mod error;
pub mod par;
pub mod search;

pub use bounds::{
    classify_equality_order, disjoint_block_bound, enumerate_equality_orders, fv_upper_bound,
    intersection_curve_data, subsystem_complement_count, CurveData, EqualityFamilyRecord, Family,
};
pub use certificate::{verify_certificate, CertificateCheck, NonincidenceCertificate};
pub use constructions::{
    bose, doubling, embed_subsystem, one_factorization, random_sts, steiner_triple_system,
    subsystem_complement_certificate, EffortBudget, EmbeddedDesign, OneFactorization,
};
pub use design::{is_admissible, CoverageProfile, Design, ValidityReport};
pub use error::{Error, Result};
pub use search::{
    brute_force_oracle, exact_max_nonincident, greedy_from, greedy_max_nonincident, SearchOptions,
    SearchReport,
};
