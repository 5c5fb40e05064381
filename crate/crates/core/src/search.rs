//! Largest nonincident set of `s` points and `s` blocks in a given design.
//!
//! Both searches use the reduction
//! `f_d = max { s : some Y with |Y| = s has t(Y) ≥ s }`, where `t(Y)` is the
//! number of blocks avoiding `Y`. It is valid because `t` can only drop as
//! points are added, and once `t(Y) ≥ s` any `s` of those blocks will do.

use std::collections::HashSet;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::bounds::{classify_equality_order, fv_upper_bound};
use crate::certificate::{verify_certificate, NonincidenceCertificate};
use crate::design::{closure_with, Design};
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMethod {
    Exact,
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub method: SearchMethod,
    pub v: usize,
    pub design_digest: String,
    pub best_s: usize,
    /// True only when no larger square exists in this design: the search
    /// refuted every larger size, or the witness already meets the bound.
    pub exact: bool,
    pub nodes_visited: u64,
    /// Upper bound on `f(v)` over all STS(v).
    pub bound_used: u64,
    /// `None` when `best_s = 0`.
    pub certificate: Option<NonincidenceCertificate>,
    pub note: String,
    /// Wall-clock time; kept out of the serialized report so that
    /// single-worker runs produce identical files.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl SearchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub max_nodes: u64,
    /// Workers for the top-level branches; 1 is sequential and reproducible,
    /// 0 uses every core.
    pub threads: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            max_nodes: 100_000_000,
            threads: 1,
        }
    }
}

fn scope_note(v: usize, bound: u64, best_s: usize, exact: bool) -> String {
    let per_design = if exact {
        format!("largest nonincident square in this design is {best_s}")
    } else {
        format!(
            "this design has a nonincident square of size {best_s}; larger ones were not ruled out"
        )
    };
    let global = match classify_equality_order(v as u64) {
        Some(r) if !r.degenerate => format!(
            "v = {v} is an equality order (family {}, z = {}): f({v}) = {bound}, attained by any STS({v}) with a sub-STS({})",
            r.family, r.z, r.w
        ),
        _ => format!(
            "per-design value only; f({v}) over all STS({v}) is at most {bound} and is not determined by this search"
        ),
    };
    format!("{per_design}; {global}")
}

fn certificate_for(
    d: &Design,
    y: &[usize],
    s: usize,
    method: &str,
) -> Option<NonincidenceCertificate> {
    if s == 0 {
        return None;
    }
    let mask = d
        .point_mask(y)
        .expect("search produced an out-of-range point");
    let blocks: Vec<usize> = d.disjoint_blocks_of_mask(&mask).iter().take(s).collect();
    let cert = NonincidenceCertificate::new(d, y.to_vec(), blocks).with_meta("search", method);
    debug_assert!(verify_certificate(d, &cert, true)
        .map(|c| c.accepted)
        .unwrap_or(false));
    Some(cert)
}

fn finish(
    d: &Design,
    method: SearchMethod,
    y: &[usize],
    exact: bool,
    nodes: u64,
    started: Instant,
) -> Result<SearchReport> {
    let bound = fv_upper_bound(d.v() as u64)?;
    let s = y.len();
    assert!(
        s as u64 <= bound,
        "nonincident square of size {s} exceeds the upper bound {bound} for v = {}",
        d.v()
    );
    let tag = match method {
        SearchMethod::Exact => "exact",
        SearchMethod::Greedy => "greedy",
    };
    Ok(SearchReport {
        method,
        v: d.v(),
        design_digest: d.digest(),
        best_s: s,
        exact,
        nodes_visited: nodes,
        bound_used: bound,
        certificate: certificate_for(d, y, s, tag),
        note: scope_note(d.v(), bound, s, exact),
        elapsed: started.elapsed(),
    })
}

/// Branch-and-bound over point subsets for one target size `s`.
struct Decision<'a> {
    d: &'a Design,
    target: usize,
    nodes: &'a AtomicU64,
    max_nodes: u64,
    aborted: &'a AtomicBool,
}

/// Branching order is recomputed down to this depth and inherited below it.
const REORDER_DEPTH: usize = 4;

impl Decision<'_> {
    fn kills(&self, alive: &BitSet, candidates: &[usize]) -> Vec<usize> {
        candidates
            .iter()
            .map(|&p| alive.intersection_count(self.d.point_incidence(p)))
            .collect()
    }

    /// Whether the node survives the counting bounds. Adding `need` more
    /// points removes at least `⌈Σ/m⌉` blocks, where `Σ` sums the `need`
    /// smallest kill counts and `m = min(need, 3)` caps how often one block
    /// can be counted.
    fn promising(&self, t: usize, need: usize, kills: &[usize]) -> bool {
        if need == 0 {
            return t >= self.target;
        }
        if kills.len() < need {
            return false;
        }
        let mut sorted = kills.to_vec();
        sorted.select_nth_unstable(need - 1);
        let sum: usize = sorted[..need].iter().sum();
        let lost = sum.div_ceil(need.min(3));
        t >= self.target + lost
    }

    /// Ascending kill count, ties by point index.
    fn order(&self, candidates: &[usize], kills: &[usize]) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..candidates.len()).collect();
        idx.sort_by_key(|&i| (kills[i], candidates[i]));
        idx.into_iter().map(|i| candidates[i]).collect()
    }

    fn tick(&self) -> bool {
        if self.aborted.load(Ordering::Relaxed) {
            return false;
        }
        if self.nodes.fetch_add(1, Ordering::Relaxed) >= self.max_nodes {
            self.aborted.store(true, Ordering::Relaxed);
            return false;
        }
        true
    }

    fn dfs(
        &self,
        chosen: &mut Vec<usize>,
        alive: &BitSet,
        candidates: &[usize],
    ) -> Option<Vec<usize>> {
        if !self.tick() {
            return None;
        }
        let t = alive.count();
        if t < self.target {
            return None;
        }
        let need = self.target - chosen.len();
        if need == 0 {
            return Some(chosen.clone());
        }
        if candidates.len() < need {
            return None;
        }
        let kills = self.kills(alive, candidates);
        if !self.promising(t, need, &kills) {
            return None;
        }
        let ordered;
        let candidates = if chosen.len() <= REORDER_DEPTH {
            ordered = self.order(candidates, &kills);
            &ordered[..]
        } else {
            candidates
        };
        let mut next = alive.clone();
        for i in 0..=candidates.len() - need {
            let p = candidates[i];
            next.clone_from(alive);
            next.difference_with(self.d.point_incidence(p));
            chosen.push(p);
            let found = self.dfs(chosen, &next, &candidates[i + 1..]);
            chosen.pop();
            if found.is_some() {
                return found;
            }
            if self.aborted.load(Ordering::Relaxed) {
                return None;
            }
        }
        None
    }

    /// Splits on the first point chosen; branches run on the worker pool
    /// and the leftmost success wins, independent of the worker count.
    fn run(&self, threads: usize) -> Option<Vec<usize>> {
        if !self.tick() {
            return None;
        }
        let v = self.d.v();
        let alive = BitSet::full(self.d.num_blocks());
        if self.target == 0 {
            return Some(Vec::new());
        }
        let all: Vec<usize> = (0..v).collect();
        let kills = self.kills(&alive, &all);
        if !self.promising(alive.count(), self.target, &kills) {
            return None;
        }
        let order = self.order(&all, &kills);
        let branches: Vec<usize> = (0..=v.saturating_sub(self.target)).collect();
        par::find_map_first(&branches, threads, |&i| {
            if self.aborted.load(Ordering::Relaxed) {
                return None;
            }
            let p = order[i];
            let mut next = alive.clone();
            next.difference_with(self.d.point_incidence(p));
            let mut chosen = vec![p];
            self.dfs(&mut chosen, &next, &order[i + 1..])
        })
    }
}

/// Exact maximum nonincident square in `d`.
///
/// Starts from the greedy lower bound and tries each larger size downward
/// from the `f(v)` upper bound; the first size that admits a witness is the
/// answer. If the node budget runs out the greedy witness is reported with
/// `exact = false`.
pub fn exact_max_nonincident(d: &Design, options: SearchOptions) -> Result<SearchReport> {
    d.ensure_sts()?;
    let started = Instant::now();
    let bound = fv_upper_bound(d.v() as u64)? as usize;
    let greedy = greedy_y(d, 0, options.threads);
    let nodes = AtomicU64::new(0);
    let aborted = AtomicBool::new(false);

    for target in (greedy.len() + 1..=bound).rev() {
        let decision = Decision {
            d,
            target,
            nodes: &nodes,
            max_nodes: options.max_nodes,
            aborted: &aborted,
        };
        // every larger target was refuted in full, so a witness here is
        // optimal even if a sibling branch ran out of budget
        if let Some(y) = decision.run(options.threads) {
            return finish(
                d,
                SearchMethod::Exact,
                &y,
                true,
                nodes.into_inner(),
                started,
            );
        }
        if aborted.load(Ordering::Relaxed) {
            log::info!(
                "node budget {} exhausted at target s = {target}",
                options.max_nodes
            );
            break;
        }
        log::debug!("no nonincident square of size {target}");
    }
    let exact = !aborted.load(Ordering::Relaxed);
    finish(
        d,
        SearchMethod::Exact,
        &greedy,
        exact,
        nodes.into_inner(),
        started,
    )
}

/// Heuristic lower bound on the largest nonincident square in `d`.
///
/// Greedily grows `Y`, each time adding the point that kills the fewest
/// still-disjoint blocks, and keeps the best prefix by `min(|Y|, t(Y))`.
/// Runs from several starts: the empty set under seeded tie-breaking, and
/// the complement of every small subsystem found as the closure of a
/// (seeded) sample of point triples. Deterministic for a given seed. The
/// result is marked exact only if it meets the `f(v)` bound.
pub fn greedy_max_nonincident(d: &Design, seed: u64) -> Result<SearchReport> {
    d.ensure_sts()?;
    let started = Instant::now();
    let y = greedy_y(d, seed, 1);
    let at_bound = y.len() as u64 == fv_upper_bound(d.v() as u64)?;
    finish(d, SearchMethod::Greedy, &y, at_bound, 0, started)
}

/// Greedy growth from a caller-supplied starting set.
pub fn greedy_from(d: &Design, start: &[usize], seed: u64) -> Result<SearchReport> {
    d.ensure_sts()?;
    let started = Instant::now();
    d.point_mask(start)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let priority = tie_break(d.v(), &mut rng);
    let y = grow(d, start, &priority);
    let at_bound = y.len() as u64 == fv_upper_bound(d.v() as u64)?;
    finish(d, SearchMethod::Greedy, &y, at_bound, 0, started)
}

const EMPTY_STARTS: usize = 8;
const TRIPLE_SAMPLE: usize = 20_000;

fn tie_break(v: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut priority: Vec<usize> = (0..v).collect();
    priority.shuffle(rng);
    priority
}

/// Complements of the distinct proper subsystems generated by point triples.
fn subsystem_starts(d: &Design, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let v = d.v();
    if v < 7 {
        return Vec::new();
    }
    let third = d.third_point_table();
    let triples: Vec<[usize; 3]> = if v * (v - 1) * (v - 2) / 6 <= TRIPLE_SAMPLE {
        let mut all = Vec::new();
        for x in 0..v {
            for y in x + 1..v {
                for z in y + 1..v {
                    all.push([x, y, z]);
                }
            }
        }
        all
    } else {
        (0..TRIPLE_SAMPLE)
            .map(|_| {
                let x = rng.random_range(0..v);
                let y = (x + rng.random_range(1..v)) % v;
                let z = rng.random_range(0..v);
                [x, y, z]
            })
            .collect()
    };
    // a proper subsystem has at most (v-1)/2 points
    let limit = (v - 1) / 2;
    let mut seen = HashSet::new();
    let mut starts = Vec::new();
    for [x, y, z] in triples {
        if x == z || y == z || third[x * v + y] == z {
            continue;
        }
        let seed = BitSet::from_indices(v, [x, y, z]);
        if let Some(closed) = closure_with(&third, v, &seed, limit) {
            if seen.insert(closed.clone()) {
                starts.push(closed.complement().to_vec());
            }
        }
    }
    starts
}

fn greedy_y(d: &Design, seed: u64, threads: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut runs: Vec<(Vec<usize>, Vec<usize>)> = (0..EMPTY_STARTS)
        .map(|i| {
            let priority = if i == 0 {
                (0..d.v()).collect()
            } else {
                tie_break(d.v(), &mut rng)
            };
            (Vec::new(), priority)
        })
        .collect();
    let priority: Vec<usize> = (0..d.v()).collect();
    runs.extend(
        subsystem_starts(d, &mut rng)
            .into_iter()
            .map(|s| (s, priority.clone())),
    );

    let results = par::map(&runs, threads, |(start, priority)| grow(d, start, priority));
    // earliest run wins ties
    results.into_iter().fold(
        Vec::new(),
        |best, y| if y.len() > best.len() { y } else { best },
    )
}

/// Adds `start` in order, then greedy points; returns the best prefix,
/// truncated to size `min(|Y|, t(Y))`.
fn grow(d: &Design, start: &[usize], priority: &[usize]) -> Vec<usize> {
    let v = d.v();
    let mut alive = BitSet::full(d.num_blocks());
    let mut in_y = BitSet::new(v);
    let mut y: Vec<usize> = Vec::with_capacity(v);
    let mut best = (0usize, 0usize); // (s, prefix length)

    let mut push = |p: usize, alive: &mut BitSet, in_y: &mut BitSet, y: &mut Vec<usize>| {
        alive.difference_with(d.point_incidence(p));
        in_y.insert(p);
        y.push(p);
        let s = y.len().min(alive.count());
        if s > best.0 {
            best = (s, y.len());
        }
    };

    for &p in start {
        if !in_y.contains(p) {
            push(p, &mut alive, &mut in_y, &mut y);
        }
    }
    while y.len() < v && alive.count() > y.len() {
        let p = (0..v)
            .filter(|&p| !in_y.contains(p))
            .min_by_key(|&p| {
                (
                    alive.intersection_count(d.point_incidence(p)),
                    priority[p],
                    p,
                )
            })
            .expect("a point remains outside Y");
        push(p, &mut alive, &mut in_y, &mut y);
    }
    // a shorter prefix only has more disjoint blocks
    let (s, len) = best;
    let mut out = y[..len].to_vec();
    out.truncate(s);
    out
}

/// Largest order the exhaustive oracle accepts.
pub const ORACLE_MAX_V: usize = 15;

/// Exhaustive `max over Y of min(|Y|, t(Y))`, for cross-checking.
pub fn brute_force_oracle(d: &Design) -> Result<usize> {
    let v = d.v();
    if v > ORACLE_MAX_V {
        return Err(Error::TooLarge {
            v,
            limit: ORACLE_MAX_V,
        });
    }
    let masks: Vec<u32> = d
        .blocks()
        .iter()
        .map(|b| b.iter().fold(0u32, |m, &p| m | 1 << p))
        .collect();
    let mut best = 0;
    for y in 0u32..(1 << v) {
        let s = y.count_ones() as usize;
        if s <= best {
            continue;
        }
        let t = masks.iter().filter(|&&m| m & y == 0).count();
        best = best.max(s.min(t));
    }
    Ok(best)
}
