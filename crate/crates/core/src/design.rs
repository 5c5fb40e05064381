//! Incidence structures on points `0..v` with 3-point blocks, plus the
//! predicates used throughout the toolkit: STS validity, disjoint-block
//! counts, coverage profiles, subsystems and maximal arcs.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bitset::BitSet;
use crate::error::{Error, Result};

pub type Block = [usize; 3];

/// Name recorded alongside every design digest.
pub const DIGEST_ALGORITHM: &str = "sha256";

/// `v ≡ 1, 3 (mod 6)`.
pub fn is_admissible(v: u64) -> bool {
    v % 6 == 1 || v % 6 == 3
}

/// A set of 3-point blocks on `0..v`, canonically ordered.
///
/// Construction only checks that every block is a 3-set of in-range points;
/// whether the blocks form a Steiner triple system is decided by
/// [`Design::validate`]. Blocks are sorted internally and the block list is
/// sorted lexicographically, so block indices are stable for a given design.
#[derive(Clone, PartialEq, Eq)]
pub struct Design {
    v: usize,
    blocks: Vec<Block>,
    /// For each point, the blocks through it.
    point_incidence: Vec<BitSet>,
    /// For each block, its points.
    block_mask: Vec<BitSet>,
}

#[derive(Serialize, Deserialize)]
struct DesignFile {
    v: usize,
    blocks: Vec<Block>,
}

impl std::fmt::Debug for Design {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Design")
            .field("v", &self.v)
            .field("blocks", &self.blocks)
            .finish()
    }
}

impl Design {
    pub fn new<I: IntoIterator<Item = Block>>(v: usize, blocks: I) -> Result<Design> {
        let mut blocks: Vec<Block> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                if let Some(&p) = b.iter().find(|&&p| p >= v) {
                    return Err(Error::PointOutOfRange { point: p, v });
                }
                if b[0] == b[1] || b[1] == b[2] {
                    return Err(Error::MalformedBlock {
                        block: b.to_vec(),
                        reason: "repeated point",
                    });
                }
                Ok(b)
            })
            .collect::<Result<_>>()?;
        blocks.sort_unstable();

        let nb = blocks.len();
        let mut point_incidence = vec![BitSet::new(nb); v];
        let mut block_mask = Vec::with_capacity(nb);
        for (i, b) in blocks.iter().enumerate() {
            for &p in b {
                point_incidence[p].insert(i);
            }
            block_mask.push(BitSet::from_indices(v, b.iter().copied()));
        }
        Ok(Design {
            v,
            blocks,
            point_incidence,
            block_mask,
        })
    }

    /// Builds a design and rejects it unless it is an STS(v).
    pub fn new_sts<I: IntoIterator<Item = Block>>(v: usize, blocks: I) -> Result<Design> {
        let d = Design::new(v, blocks)?;
        d.ensure_sts()?;
        Ok(d)
    }

    pub fn ensure_sts(&self) -> Result<()> {
        let report = self.validate();
        if report.is_sts() {
            Ok(())
        } else {
            Err(Error::InvalidDesign(report.summary()))
        }
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, index: usize) -> Block {
        self.blocks[index]
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Replication number `(v-1)/2` of an STS on this many points.
    pub fn replication(&self) -> usize {
        self.v.saturating_sub(1) / 2
    }

    pub fn point_incidence(&self, point: usize) -> &BitSet {
        &self.point_incidence[point]
    }

    pub fn block_mask(&self, block: usize) -> &BitSet {
        &self.block_mask[block]
    }

    /// Checks indices and packs a point list into a width-`v` mask.
    pub fn point_mask(&self, points: &[usize]) -> Result<BitSet> {
        let mut mask = BitSet::new(self.v);
        for &p in points {
            if p >= self.v {
                return Err(Error::PointOutOfRange {
                    point: p,
                    v: self.v,
                });
            }
            mask.insert(p);
        }
        Ok(mask)
    }

    /// `{"v":..,"blocks":[[a,b,c],..]}` with the canonical block order.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(&DesignFile {
            v: self.v,
            blocks: self.blocks.clone(),
        })
        .expect("design serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Design> {
        let file: DesignFile = serde_json::from_str(text)?;
        Design::new(file.v, file.blocks)
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_canonical_json().as_bytes()))
    }

    pub fn validate(&self) -> ValidityReport {
        let v = self.v;
        let mut pair_count = vec![0u32; v * v];
        for b in &self.blocks {
            for (x, y) in [(b[0], b[1]), (b[0], b[2]), (b[1], b[2])] {
                pair_count[x * v + y] += 1;
            }
        }
        let mut uncovered_pairs = Vec::new();
        let mut repeated_pairs = Vec::new();
        for x in 0..v {
            for y in x + 1..v {
                match pair_count[x * v + y] {
                    0 => uncovered_pairs.push((x, y)),
                    1 => {}
                    n => repeated_pairs.push(((x, y), n as usize)),
                }
            }
        }

        let expected_replication = (v % 2 == 1).then(|| (v - 1) / 2);
        let replication_violations = (0..v)
            .filter_map(|p| {
                let r = self.point_incidence[p].count();
                (Some(r) != expected_replication).then_some((p, r))
            })
            .collect();

        ValidityReport {
            v,
            admissible_order: is_admissible(v as u64),
            block_count: self.blocks.len(),
            expected_block_count: (v * v.saturating_sub(1)) / 6,
            expected_replication,
            uncovered_pairs,
            repeated_pairs,
            replication_violations,
        }
    }

    /// Number of blocks avoiding every point of `y`.
    pub fn disjoint_block_count(&self, y: &[usize]) -> Result<usize> {
        let mask = self.point_mask(y)?;
        Ok(self.disjoint_count_of_mask(&mask))
    }

    pub fn disjoint_count_of_mask(&self, y: &BitSet) -> usize {
        self.disjoint_blocks_of_mask(y).count()
    }

    /// Blocks avoiding `y`, as a mask over block indices.
    pub fn disjoint_blocks_of_mask(&self, y: &BitSet) -> BitSet {
        let mut alive = BitSet::full(self.blocks.len());
        for p in y.iter() {
            alive.difference_with(&self.point_incidence[p]);
        }
        alive
    }

    pub fn coverage_profile(&self, y: &[usize]) -> Result<CoverageProfile> {
        let mask = self.point_mask(y)?;
        let mut profile = CoverageProfile {
            s: mask.count(),
            ..CoverageProfile::default()
        };
        for bm in &self.block_mask {
            let k = bm.intersection_count(&mask);
            if k > 0 {
                profile.c += 1;
                profile.sum_sizes += k;
                profile.sum_pairs += k * (k - 1) / 2;
                profile.sum_squares += k * k;
            }
        }
        Ok(profile)
    }

    /// Whether the blocks inside `z` form an STS(|z|) on `z`; also returns
    /// those interior blocks.
    pub fn is_subsystem(&self, z: &[usize]) -> Result<(bool, Vec<usize>)> {
        let mask = self.point_mask(z)?;
        let mut interior = Vec::new();
        let mut closed = true;
        for (i, bm) in self.block_mask.iter().enumerate() {
            match bm.intersection_count(&mask) {
                3 => interior.push(i),
                2 => closed = false,
                _ => {}
            }
        }
        Ok((closed && is_admissible(mask.count() as u64), interior))
    }

    /// `|y| = (v+1)/2` and every block meets `y` in 0 or 2 points.
    pub fn is_maximal_arc(&self, y: &[usize]) -> Result<bool> {
        let mask = self.point_mask(y)?;
        if self.v.is_multiple_of(2) || mask.count() != self.v.div_ceil(2) {
            return Ok(false);
        }
        Ok(self
            .block_mask
            .iter()
            .all(|bm| matches!(bm.intersection_count(&mask), 0 | 2)))
    }

    /// Smallest subsystem containing `seed`: repeatedly adds the third point
    /// of the block through any two members. Gives up once the closure grows
    /// past `limit` points.
    pub fn closure(&self, seed: &[usize], limit: usize) -> Result<Option<BitSet>> {
        let seed = self.point_mask(seed)?;
        Ok(closure_with(
            &self.third_point_table(),
            self.v,
            &seed,
            limit,
        ))
    }

    /// Pair-to-third-point lookup table, `v*v` entries, `usize::MAX` where a
    /// pair is uncovered.
    pub fn third_point_table(&self) -> Vec<usize> {
        let v = self.v;
        let mut third = vec![usize::MAX; v * v];
        for &[x, y, z] in &self.blocks {
            third[x * v + y] = z;
            third[y * v + x] = z;
            third[x * v + z] = y;
            third[z * v + x] = y;
            third[y * v + z] = x;
            third[z * v + y] = x;
        }
        third
    }
}

pub(crate) fn closure_with(
    third: &[usize],
    v: usize,
    seed: &BitSet,
    limit: usize,
) -> Option<BitSet> {
    let mut members: Vec<usize> = seed.to_vec();
    let mut inside = seed.clone();
    if members.len() > limit {
        return None;
    }
    let mut next = 0;
    while next < members.len() {
        let p = members[next];
        for i in 0..next {
            let q = third[p * v + members[i]];
            if q != usize::MAX && !inside.contains(q) {
                if members.len() == limit {
                    return None;
                }
                inside.insert(q);
                members.push(q);
            }
        }
        next += 1;
    }
    Some(inside)
}

/// Outcome of checking a candidate design against the STS(v) axioms. Every
/// violation is listed; nothing short-circuits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidityReport {
    pub v: usize,
    pub admissible_order: bool,
    pub block_count: usize,
    pub expected_block_count: usize,
    pub expected_replication: Option<usize>,
    pub uncovered_pairs: Vec<(usize, usize)>,
    pub repeated_pairs: Vec<((usize, usize), usize)>,
    /// `(point, replication)` for every point whose replication is wrong.
    pub replication_violations: Vec<(usize, usize)>,
}

impl ValidityReport {
    pub fn pair_coverage_ok(&self) -> bool {
        self.uncovered_pairs.is_empty() && self.repeated_pairs.is_empty()
    }

    pub fn block_count_ok(&self) -> bool {
        self.block_count == self.expected_block_count
    }

    pub fn replication_ok(&self) -> bool {
        self.expected_replication.is_some() && self.replication_violations.is_empty()
    }

    pub fn is_sts(&self) -> bool {
        self.admissible_order
            && self.pair_coverage_ok()
            && self.block_count_ok()
            && self.replication_ok()
    }

    /// One line per failed invariant.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.admissible_order {
            out.push(format!(
                "inadmissible order: v = {} is {} mod 6, expected 1 or 3",
                self.v,
                self.v % 6
            ));
        }
        if !self.uncovered_pairs.is_empty() {
            let shown: Vec<String> = self
                .uncovered_pairs
                .iter()
                .take(10)
                .map(|(x, y)| format!("{{{x},{y}}}"))
                .collect();
            out.push(format!(
                "pair coverage: {} pairs uncovered ({}{})",
                self.uncovered_pairs.len(),
                shown.join(", "),
                if self.uncovered_pairs.len() > 10 {
                    ", ..."
                } else {
                    ""
                }
            ));
        }
        if !self.repeated_pairs.is_empty() {
            out.push(format!(
                "pair coverage: {} pairs covered more than once",
                self.repeated_pairs.len()
            ));
        }
        if !self.block_count_ok() {
            out.push(format!(
                "block count: {} blocks, expected {}",
                self.block_count, self.expected_block_count
            ));
        }
        if !self.replication_ok() {
            match self.expected_replication {
                Some(r) => out.push(format!(
                    "replication: {} points not on exactly {r} blocks",
                    self.replication_violations.len()
                )),
                None => {
                    out.push("replication: even order has no integral replication number".into())
                }
            }
        }
        out
    }

    pub fn summary(&self) -> String {
        let failures = self.failures();
        if failures.is_empty() {
            format!("STS({}) ok", self.v)
        } else {
            failures.join("; ")
        }
    }
}

/// Intersection statistics of the blocks meeting a point set `Y`.
///
/// For an STS(v) with replication `r` these satisfy `sum_sizes = r·s`,
/// `sum_pairs = s(s-1)/2` and `sum_squares = s(s+r-1)` for every `Y`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CoverageProfile {
    pub s: usize,
    pub c: usize,
    pub sum_sizes: usize,
    pub sum_pairs: usize,
    pub sum_squares: usize,
}

impl CoverageProfile {
    /// Checks the three counting identities for replication `r`.
    pub fn identities_hold(&self, r: usize) -> bool {
        let s = self.s;
        self.sum_sizes == r * s
            && self.sum_pairs == s * s.saturating_sub(1) / 2
            && self.sum_squares == s * (s + r).saturating_sub(1)
    }
}
