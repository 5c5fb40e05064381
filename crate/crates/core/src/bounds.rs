//! Exact bounds on nonincident sets in an STS(v) and the orders at which the
//! upper bound on `f(v)` is attained.
//!
//! Everything here is integer arithmetic. The square root `√(24v+25)` is
//! never rounded: comparisons against it are made by squaring.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::design::is_admissible;
use crate::error::{Error, Result};

/// `⌊√n⌋` by Newton iteration from an overestimate; no floating point.
pub fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    // 2^ceil(bits/2) > √n
    let bits = 128 - n.leading_zeros();
    let mut x = 1u128 << bits.div_ceil(2);
    loop {
        let y = (x + n / x) / 2;
        if y >= x {
            return x;
        }
        x = y;
    }
}

/// `⌈√n⌉`.
pub fn ceil_sqrt(n: u128) -> u128 {
    let r = isqrt(n);
    if r * r == n {
        r
    } else {
        r + 1
    }
}

/// `Some(√n)` when `n` is a perfect square.
pub fn exact_sqrt(n: u128) -> Option<u128> {
    let r = isqrt(n);
    (r * r == n).then_some(r)
}

fn check_order(v: u64) -> Result<()> {
    if is_admissible(v) {
        Ok(())
    } else {
        Err(Error::InadmissibleOrder { v })
    }
}

/// Numerator `v(v-1) + s² - s(2v-1)` of the disjoint-block bound. It is
/// not always divisible by 6. It factors as `(v-s)(v-s-1)`, so it vanishes at
/// `s ∈ {v-1, v}` and is never negative for integral `s ≤ v`.
pub fn disjoint_bound_numerator(v: u64, s: u64) -> Result<i128> {
    check_order(v)?;
    if s > v {
        return Err(Error::InvalidParameters(format!("s = {s} exceeds v = {v}")));
    }
    let (v, s) = (v as i128, s as i128);
    Ok(v * (v - 1) + s * s - s * (2 * v - 1))
}

/// Upper bound on the number of blocks disjoint from any `s` points of an
/// STS(v): `⌊(v(v-1) + s² - s(2v-1)) / 6⌋`.
pub fn disjoint_block_bound(v: u64, s: u64) -> Result<i128> {
    Ok(disjoint_bound_numerator(v, s)?.div_euclid(6))
}

/// Upper bound on `f(v)`: the largest `s` with `2s ≤ 2v+5` and
/// `(2v+5-2s)² ≥ 24v+25`, which is `⌊(2v+5-√(24v+25))/2⌋`.
pub fn fv_upper_bound(v: u64) -> Result<u64> {
    check_order(v)?;
    let disc = 24 * v as u128 + 25;
    let top = 2 * v as u128 + 5;
    // top > √disc for all v ≥ 0 since top² - disc = 4v² - 4v ≥ 0
    Ok(((top - ceil_sqrt(disc)) / 2) as u64)
}

/// `disjoint_block_bound(v, v-w)`, which must equal `w(w-1)/6` when a sub-STS(w)
/// is removed from an STS(v).
pub fn subsystem_complement_count(v: u64, w: u64) -> Result<u64> {
    check_order(v)?;
    check_order(w)?;
    if w > v {
        return Err(Error::InvalidParameters(format!("w = {w} exceeds v = {v}")));
    }
    let numerator = disjoint_bound_numerator(v, v - w)?;
    let expected = (w as i128) * (w as i128 - 1);
    if numerator != expected {
        return Err(Error::Invariant(format!(
            "converse count for (v, w) = ({v}, {w}): numerator {numerator} != w(w-1) = {expected}"
        )));
    }
    Ok((expected / 6) as u64)
}

/// One of the four polynomial families of orders attaining the `f(v)` bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Family {
    /// `u = 12z+1`, `t = 6u+1`: `v = 216z² + 42z + 1`.
    One = 1,
    /// `u = 12z+5`, `t = 6u+1`: `v = 216z² + 186z + 39`.
    Two = 2,
    /// `u = 12z+4`, `t = 6u-1`: `v = 216z² + 138z + 21`.
    Three = 3,
    /// `u = 12z+8`, `t = 6u-1`: `v = 216z² + 282z + 91`.
    Four = 4,
}

impl From<Family> for u8 {
    fn from(f: Family) -> u8 {
        f as u8
    }
}

impl TryFrom<u8> for Family {
    type Error = String;

    fn try_from(n: u8) -> std::result::Result<Self, String> {
        match n {
            1 => Ok(Family::One),
            2 => Ok(Family::Two),
            3 => Ok(Family::Three),
            4 => Ok(Family::Four),
            _ => Err(format!("no equality family {n}")),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as u8)
    }
}

impl Family {
    pub const ALL: [Family; 4] = [Family::One, Family::Two, Family::Three, Family::Four];

    /// `(v, s)` at parameter `z`.
    pub fn order_at(self, z: u64) -> (u64, u64) {
        let zz = 216 * z * z;
        match self {
            Family::One => (zz + 42 * z + 1, zz + 6 * z),
            Family::Two => (zz + 186 * z + 39, zz + 150 * z + 26),
            Family::Three => (zz + 138 * z + 21, zz + 102 * z + 12),
            Family::Four => (zz + 282 * z + 91, zz + 246 * z + 70),
        }
    }

    pub fn u_at(self, z: u64) -> u64 {
        12 * z
            + match self {
                Family::One => 1,
                Family::Two => 5,
                Family::Three => 4,
                Family::Four => 8,
            }
    }

    /// `t = √(24v+25)` in terms of `u`.
    pub fn t_from_u(self, u: u64) -> u64 {
        match self {
            Family::One | Family::Two => 6 * u + 1,
            Family::Three | Family::Four => 6 * u - 1,
        }
    }

    /// Recovers `(family, z)` from `t`, if `t` lands on one of the residues.
    pub fn from_t(t: u64) -> Option<(Family, u64)> {
        let (u, families) = match t % 6 {
            1 => ((t - 1) / 6, [(1, Family::One), (5, Family::Two)]),
            5 => ((t + 1) / 6, [(4, Family::Three), (8, Family::Four)]),
            _ => return None,
        };
        families
            .into_iter()
            .find(|&(r, _)| u % 12 == r)
            .map(|(r, f)| (f, (u - r) / 12))
    }
}

/// An order `v` at which `f(v)` meets its upper bound, with the subsystem
/// order `w = v - s` that realizes it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EqualityFamilyRecord {
    pub family: Family,
    pub z: u64,
    pub v: u64,
    pub s: u64,
    pub w: u64,
    pub t: u64,
    pub u: u64,
    /// `v < 2w+1`. Only `v = 1` (family 1, `z = 0`), where the "subsystem"
    /// is the whole single-point design.
    pub degenerate: bool,
}

impl EqualityFamilyRecord {
    fn new(family: Family, z: u64) -> Self {
        let (v, s) = family.order_at(z);
        let u = family.u_at(z);
        let w = v - s;
        EqualityFamilyRecord {
            family,
            z,
            v,
            s,
            w,
            t: family.t_from_u(u),
            u,
            degenerate: v < 2 * w + 1,
        }
    }
}

/// All family records for `z = 0..=z_max`, sorted by `v`.
pub fn enumerate_equality_orders(z_max: u64) -> Vec<EqualityFamilyRecord> {
    let mut out: Vec<_> = (0..=z_max)
        .flat_map(|z| {
            Family::ALL
                .into_iter()
                .map(move |f| EqualityFamilyRecord::new(f, z))
        })
        .collect();
    out.sort_by_key(|r| r.v);
    out
}

/// Decides whether the `f(v)` bound can be met with equality at `v`: `24v+25`
/// must be a square `t²`, `v` and `w = v - (2v+5-t)/2` admissible, and
/// `v ≥ 2w+1`. The single-point order `v = 1` is returned flagged
/// `degenerate` so that classification agrees with enumeration.
pub fn classify_equality_order(v: u64) -> Option<EqualityFamilyRecord> {
    let t = exact_sqrt(24 * v as u128 + 25)? as u64;
    let top = 2 * v + 5;
    if top < t || !(top - t).is_multiple_of(2) {
        return None;
    }
    let s = (top - t) / 2;
    let w = v.checked_sub(s)?;
    if !is_admissible(v) || !is_admissible(w) {
        return None;
    }
    let degenerate = v < 2 * w + 1;
    if degenerate && v != 1 {
        return None;
    }
    let (family, z) = Family::from_t(t)?;
    let record = EqualityFamilyRecord::new(family, z);
    debug_assert_eq!((record.v, record.s, record.w, record.t), (v, s, w, t));
    Some(record)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CurveRow {
    pub s: u64,
    pub bound: i128,
    pub diagonal: u64,
}

/// The disjoint-block bound as a function of `s` against the diagonal `s`,
/// for one order `v`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CurveData {
    pub v: u64,
    pub rows: Vec<CurveRow>,
    /// Largest `s` at or left of the crossing, i.e. `fv_upper_bound(v)`.
    pub crossing_s: u64,
    /// Whether the curves meet at the lattice point `(crossing_s, crossing_s)`.
    pub crossing_exact: bool,
}

impl CurveData {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,bound,diagonal\n");
        for row in &self.rows {
            out.push_str(&format!("{},{},{}\n", row.s, row.bound, row.diagonal));
        }
        out
    }

    pub fn describe_crossing(&self) -> String {
        if self.crossing_exact {
            format!("curves cross at ({0},{0})", self.crossing_s)
        } else {
            format!(
                "curves cross strictly between s={} and s={}",
                self.crossing_s,
                self.crossing_s + 1
            )
        }
    }
}

pub fn intersection_curve_data(v: u64) -> Result<CurveData> {
    let rows = (0..=v)
        .map(|s| {
            Ok(CurveRow {
                s,
                bound: disjoint_block_bound(v, s)?,
                diagonal: s,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let crossing_s = fv_upper_bound(v)?;
    // the crossing is a lattice point iff the rational bound equals s there
    let crossing_exact = disjoint_bound_numerator(v, crossing_s)? == 6 * crossing_s as i128;
    Ok(CurveData {
        v,
        rows,
        crossing_s,
        crossing_exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_integer::Roots;
    use proptest::prelude::*;

    #[test]
    fn isqrt_edges() {
        for n in 0u128..100_000 {
            let r = isqrt(n);
            assert!(r * r <= n && (r + 1) * (r + 1) > n, "n = {n}");
        }
        let big = u64::MAX as u128;
        assert_eq!(isqrt(big * big), big);
        assert_eq!(isqrt(big * big - 1), big - 1);
        assert_eq!(isqrt(u128::MAX), u64::MAX as u128);
    }

    proptest! {
        #[test]
        fn isqrt_matches_num_integer(n in any::<u128>()) {
            prop_assert_eq!(isqrt(n), n.sqrt());
        }
    }

    #[test]
    fn disjoint_bound_examples() {
        assert_eq!(disjoint_block_bound(39, 26).unwrap(), 26);
        assert_eq!(disjoint_block_bound(9, 3).unwrap(), 5);
        for v in [7u64, 9, 13, 15, 19, 21, 91] {
            assert_eq!(
                disjoint_block_bound(v, 0).unwrap(),
                (v * (v - 1) / 6) as i128
            );
        }
        // (72 + 1 - 17) / 6 = 56/6
        assert_eq!(disjoint_bound_numerator(9, 1).unwrap().rem_euclid(6), 2);
        assert_eq!(disjoint_block_bound(9, 1).unwrap(), 9);
        assert_eq!(disjoint_block_bound(9, 9).unwrap(), 0);
        assert_eq!(disjoint_block_bound(9, 8).unwrap(), 0);
        for s in 0..=21u64 {
            let w = 21 - s as i128;
            assert_eq!(disjoint_bound_numerator(21, s).unwrap(), w * (w - 1));
        }
        assert!(disjoint_block_bound(9, 10).is_err());
        assert!(disjoint_block_bound(11, 1).is_err());
    }

    #[test]
    fn fv_bound_examples() {
        assert_eq!(fv_upper_bound(39).unwrap(), 26);
        assert_eq!(fv_upper_bound(21).unwrap(), 12);
        assert_eq!(fv_upper_bound(91).unwrap(), 70);
        assert_eq!(fv_upper_bound(7).unwrap(), 2);
        assert_eq!(fv_upper_bound(3).unwrap(), 0);
        assert_eq!(fv_upper_bound(1).unwrap(), 0);
        assert!(matches!(
            fv_upper_bound(11),
            Err(Error::InadmissibleOrder { v: 11 })
        ));
    }

    #[test]
    fn fv_bound_is_the_crossing_for_admissible_orders() {
        // defining property: bound(v,s) ≥ s and bound(v,s+1) < s+1
        let mut v = 1u64;
        while v <= 1_000_000 {
            if is_admissible(v) {
                let s = fv_upper_bound(v).unwrap();
                assert!(disjoint_block_bound(v, s).unwrap() >= s as i128, "v = {v}");
                if s < v {
                    assert!(
                        disjoint_block_bound(v, s + 1).unwrap() < (s + 1) as i128,
                        "v = {v}"
                    );
                }
            }
            v += 2;
        }
    }

    #[test]
    fn converse_count_examples() {
        assert_eq!(subsystem_complement_count(21, 9).unwrap(), 12);
        assert_eq!(subsystem_complement_count(91, 21).unwrap(), 70);
        for w in [1u64, 3, 7, 9, 13, 15] {
            assert_eq!(
                subsystem_complement_count(2 * w + 1, w).unwrap(),
                w * (w - 1) / 6
            );
        }
        assert!(subsystem_complement_count(9, 13).is_err());
    }

    #[test]
    fn smallest_family_records() {
        let recs = enumerate_equality_orders(0);
        let vs: Vec<(u64, u64)> = recs.iter().map(|r| (r.v, r.s)).collect();
        assert_eq!(vs, vec![(1, 0), (21, 12), (39, 26), (91, 70)]);
        assert!(recs[0].degenerate);
        assert!(recs[1..].iter().all(|r| !r.degenerate && r.v > 2 * r.w));

        let recs = enumerate_equality_orders(1);
        let r = recs.iter().find(|r| r.v == 259).unwrap();
        assert_eq!((r.family, r.z, r.s, r.w), (Family::One, 1, 222, 37));
    }

    #[test]
    fn family_polynomials_agree_with_t_parametrization() {
        // v = (t²-25)/24 and s = v - (t-5)/2, independently of the polynomials
        for r in enumerate_equality_orders(50) {
            let t = r.t as u128;
            assert_eq!((t * t - 25) % 24, 0);
            assert_eq!(r.v as u128, (t * t - 25) / 24);
            assert_eq!(r.s as u128, r.v as u128 - (t - 5) / 2);
            assert!(is_admissible(r.v) && is_admissible(r.w));
        }
    }

    #[test]
    fn classify_examples() {
        let r = classify_equality_order(91).unwrap();
        assert_eq!((r.family, r.z, r.s, r.w), (Family::Four, 0, 70, 21));
        // t = 25, s = 15, w = 10 ≡ 4 (mod 6)
        assert_eq!(classify_equality_order(25), None);
        assert_eq!(classify_equality_order(13), None);
        assert_eq!(classify_equality_order(15), None);
        assert!(classify_equality_order(1).unwrap().degenerate);
    }

    #[test]
    fn classification_matches_enumeration() {
        let enumerated: std::collections::BTreeMap<u64, EqualityFamilyRecord> =
            enumerate_equality_orders(70)
                .into_iter()
                .map(|r| (r.v, r))
                .collect();
        let limit = 1_000_000u64;
        for v in 0..=limit {
            let classified = classify_equality_order(v);
            assert_eq!(classified.as_ref(), enumerated.get(&v), "v = {v}");
            if let Some(r) = classified {
                assert_eq!(fv_upper_bound(v).unwrap(), r.s);
                assert_eq!(subsystem_complement_count(v, r.w).unwrap(), r.s);
                assert_eq!(r.degenerate, v == 1);
            }
        }
    }

    /// Brute-force restatement of the four conditions, independent of
    /// `exact_sqrt`: test `s` exhaustively around the real crossing.
    #[test]
    fn conditions_brute_force_small() {
        for v in 1u64..5000 {
            if !is_admissible(v) {
                continue;
            }
            let hits: Vec<u64> = (0..=v)
                .filter(|&s| {
                    let q = 2 * v as i128 + 5 - 2 * s as i128;
                    q >= 0 && q * q == 24 * v as i128 + 25
                })
                .filter(|&s| is_admissible(v - s) && v > 2 * (v - s))
                .collect();
            let classified = classify_equality_order(v).filter(|r| !r.degenerate);
            assert_eq!(classified.map(|r| r.s), hits.first().copied(), "v = {v}");
        }
    }

    #[test]
    fn curve_crossings() {
        let c = intersection_curve_data(39).unwrap();
        assert_eq!(c.rows.len(), 40);
        assert_eq!(
            c.rows[26],
            CurveRow {
                s: 26,
                bound: 26,
                diagonal: 26
            }
        );
        assert!(c.crossing_exact);
        assert_eq!(c.crossing_s, 26);

        let c = intersection_curve_data(21).unwrap();
        assert!(c.crossing_exact);
        assert_eq!(c.crossing_s, 12);

        let c = intersection_curve_data(7).unwrap();
        assert!(!c.crossing_exact);
        assert_eq!(c.crossing_s, 2);
        assert!(c.rows[2].bound > 2 && c.rows[3].bound < 3);
        assert_eq!(
            c.describe_crossing(),
            "curves cross strictly between s=2 and s=3"
        );

        let csv = intersection_curve_data(3).unwrap().to_csv();
        assert_eq!(csv, "s,bound,diagonal\n0,1,0\n1,0,1\n2,0,2\n3,0,3\n");
    }
}
