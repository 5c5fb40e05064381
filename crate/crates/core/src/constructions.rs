//! Builders for Steiner triple systems.
//!
//! `bose` covers `v ≡ 3 (mod 6)` directly. Everything else, including every
//! STS with a prescribed subsystem, comes out of [`embed_subsystem`], which
//! freezes a sub-STS(w) on points `0..w` and completes the remaining pairs by
//! randomized hill-climbing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitset::BitSet;
use crate::certificate::NonincidenceCertificate;
use crate::design::{is_admissible, Block, Design};
use crate::error::{Error, Result};

/// Bose construction on `Z_n × {0,1,2}`, `n = v/3` odd, using the idempotent
/// commutative quasigroup `x ∘ y = (x+y)(n+1)/2 mod n`.
pub fn bose(v: usize) -> Result<Design> {
    if v % 6 != 3 {
        return Err(Error::InvalidParameters(format!(
            "Bose construction needs v ≡ 3 (mod 6), got {v}"
        )));
    }
    let n = v / 3;
    let half = n.div_ceil(2);
    let point = |x: usize, level: usize| x + n * (level % 3);
    let mut blocks = Vec::with_capacity(v * (v - 1) / 6);
    for x in 0..n {
        blocks.push([point(x, 0), point(x, 1), point(x, 2)]);
    }
    for level in 0..3 {
        for x in 0..n {
            for y in x + 1..n {
                let m = (x + y) * half % n;
                blocks.push([point(x, level), point(y, level), point(m, level + 1)]);
            }
        }
    }
    Design::new(v, blocks)
}

/// A partition of the edges of `K_n` into `n-1` perfect matchings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneFactorization {
    pub n: usize,
    pub factors: Vec<Vec<(usize, usize)>>,
}

/// Circle method: vertex `n-1` sits at the centre, the rest on a circle of
/// `n-1` positions; factor `k` pairs the centre with `k` and reflects the
/// circle through `k`.
pub fn one_factorization(n: usize) -> Result<OneFactorization> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidParameters(format!(
            "one-factorization needs an even order ≥ 2, got {n}"
        )));
    }
    let m = n - 1;
    let factors = (0..m)
        .map(|k| {
            let mut f = Vec::with_capacity(n / 2);
            f.push((k, n - 1));
            for i in 1..n / 2 {
                let a = (k + i) % m;
                let b = (k + m - i) % m;
                f.push((a.min(b), a.max(b)));
            }
            f
        })
        .collect();
    Ok(OneFactorization { n, factors })
}

/// STS(2w+1) from an STS(w): keeps the old blocks and adds `{x, a, b}` for
/// each old point `x` and each edge `{a, b}` of factor `x` of a
/// one-factorization on the `w+1` new points. The new points form a maximal
/// arc, returned second; the old points remain a subsystem.
pub fn doubling(sub: &Design) -> Result<(Design, Vec<usize>)> {
    sub.ensure_sts()
        .map_err(|e| Error::InvalidParameters(format!("doubling needs a valid STS: {e}")))?;
    let w = sub.v();
    let factorization = one_factorization(w + 1)?;
    let mut blocks: Vec<Block> = sub.blocks().to_vec();
    for (x, factor) in factorization.factors.iter().enumerate() {
        blocks.extend(factor.iter().map(|&(a, b)| [x, w + a, w + b]));
    }
    let design = Design::new(2 * w + 1, blocks)?;
    Ok((design, (w..=2 * w).collect()))
}

/// Bound on hill-climbing effort.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EffortBudget {
    pub max_moves: u64,
}

impl Default for EffortBudget {
    fn default() -> Self {
        EffortBudget {
            max_moves: 10_000_000,
        }
    }
}

/// An STS together with a flagged sub-STS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddedDesign {
    pub design: Design,
    pub sub_points: Vec<usize>,
    pub sub_blocks: Vec<usize>,
    /// Moves spent by the hill-climber, including any recursive sub-builds.
    pub moves: u64,
}

impl EmbeddedDesign {
    pub fn w(&self) -> usize {
        self.sub_points.len()
    }
}

/// STS(v) containing a sub-STS(w) on points `0..w`.
///
/// Requires `v, w ≡ 1, 3 (mod 6)` and `v ≥ 2w+1`, except that `v = w` just
/// returns the sub-design itself. The sub-design comes from [`bose`] when
/// `w ≡ 3 (mod 6)` and from a recursive embedding around a single block
/// otherwise. Deterministic for a given `(w, v, seed)`; never returns an
/// invalid design, but may give up with [`Error::BudgetExhausted`].
pub fn embed_subsystem(
    w: usize,
    v: usize,
    seed: u64,
    budget: EffortBudget,
) -> Result<EmbeddedDesign> {
    check_embedding(w, v)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut moves = 0u64;
    let design = embed_with(w, v, &mut rng, budget, &mut moves)?;
    let sub_points: Vec<usize> = (0..w).collect();
    let (ok, sub_blocks) = design.is_subsystem(&sub_points)?;
    if !ok {
        return Err(Error::Invariant(format!("embedding lost its sub-STS({w})")));
    }
    Ok(EmbeddedDesign {
        design,
        sub_points,
        sub_blocks,
        moves,
    })
}

fn check_embedding(w: usize, v: usize) -> Result<()> {
    if !is_admissible(v as u64) {
        return Err(Error::InadmissibleOrder { v: v as u64 });
    }
    if !is_admissible(w as u64) {
        return Err(Error::InadmissibleOrder { v: w as u64 });
    }
    if w != v && v < 2 * w + 1 {
        return Err(Error::InvalidParameters(format!(
            "a sub-STS({w}) of an STS({v}) needs v ≥ 2w+1"
        )));
    }
    Ok(())
}

fn embed_with(
    w: usize,
    v: usize,
    rng: &mut ChaCha8Rng,
    budget: EffortBudget,
    moves: &mut u64,
) -> Result<Design> {
    let sub = sts_with(w, rng, budget, moves)?;
    if w == v {
        return Ok(sub);
    }
    // Near v = 2w+1 the walk can circle for a long time around a few
    // uncovered frozen/outside pairs; starting over is cheaper than waiting.
    let period = RESTART_FACTOR * (v * v) as u64;
    loop {
        let remaining = budget.max_moves.saturating_sub(*moves);
        if remaining == 0 {
            return Err(Error::BudgetExhausted { moves: *moves });
        }
        let mut climber = HillClimber::new(v, w, sub.blocks());
        match climber.run(rng, remaining.min(period), moves) {
            Ok(()) => {
                return Design::new_sts(v, climber.blocks()).map_err(|e| {
                    Error::Invariant(format!("hill-climber produced an invalid design: {e}"))
                })
            }
            Err(Error::BudgetExhausted { .. }) => {
                log::debug!(
                    "restarting completion of STS({v}) around sub-STS({w}) after {} moves",
                    *moves
                );
            }
            Err(e) => return Err(e),
        }
    }
}

/// Hill-climbing restarts after this many moves per `v²`. Typical
/// completions take under one move per `v²`.
const RESTART_FACTOR: u64 = 50;

fn sts_with(
    v: usize,
    rng: &mut ChaCha8Rng,
    budget: EffortBudget,
    moves: &mut u64,
) -> Result<Design> {
    match v {
        0 => Err(Error::InadmissibleOrder { v: 0 }),
        1 => Design::new(1, []),
        _ if v % 6 == 3 => bose(v),
        _ if v % 6 == 1 => embed_with(3, v, rng, budget, moves),
        _ => Err(Error::InadmissibleOrder { v: v as u64 }),
    }
}

/// Some STS(v): Bose for `v ≡ 3 (mod 6)`, hill-climbing around a fixed block
/// for `v ≡ 1 (mod 6)`.
pub fn steiner_triple_system(v: usize, seed: u64, budget: EffortBudget) -> Result<Design> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sts_with(v, &mut rng, budget, &mut 0)
}

/// An STS(v) with nothing prescribed, completed entirely by hill-climbing.
pub fn random_sts(v: usize, seed: u64, budget: EffortBudget) -> Result<Design> {
    Ok(embed_subsystem(1, v, seed, budget)?.design)
}

const NONE: u32 = u32::MAX;

/// Partial triple system on `0..v` with a frozen sub-STS on `0..w`.
///
/// Blocks are implicit in `third`: for a covered pair `{x, y}`, `third[x*v+y]`
/// is the remaining point of its block. A completion block never holds two
/// frozen points (that pair is already covered), so a block is frozen exactly
/// when all three of its points are below `w`.
struct HillClimber {
    v: usize,
    w: usize,
    third: Vec<u32>,
    /// Uncovered pairs at each point.
    deficit: Vec<usize>,
    live: Vec<usize>,
    live_pos: Vec<usize>,
    scratch: Vec<usize>,
}

impl HillClimber {
    fn new(v: usize, w: usize, frozen: &[Block]) -> Self {
        let mut hc = HillClimber {
            v,
            w,
            third: vec![NONE; v * v],
            deficit: vec![v - 1; v],
            live: (0..v).collect(),
            live_pos: (0..v).collect(),
            scratch: Vec::with_capacity(v),
        };
        for &[x, y, z] in frozen {
            hc.add_block(x, y, z);
        }
        hc
    }

    fn set_pair(&mut self, x: usize, y: usize, z: u32) {
        self.third[x * self.v + y] = z;
        self.third[y * self.v + x] = z;
    }

    fn adjust(&mut self, p: usize, delta: isize) {
        let before = self.deficit[p];
        let after = before.checked_add_signed(delta).expect("deficit underflow");
        self.deficit[p] = after;
        if before == 0 && after > 0 {
            self.live_pos[p] = self.live.len();
            self.live.push(p);
        } else if before > 0 && after == 0 {
            let i = self.live_pos[p];
            let last = *self.live.last().unwrap();
            self.live.swap_remove(i);
            if last != p {
                self.live_pos[last] = i;
            }
        }
    }

    fn add_block(&mut self, x: usize, y: usize, z: usize) {
        self.set_pair(x, y, z as u32);
        self.set_pair(x, z, y as u32);
        self.set_pair(y, z, x as u32);
        for p in [x, y, z] {
            self.adjust(p, -2);
        }
    }

    fn remove_block(&mut self, x: usize, y: usize, z: usize) {
        debug_assert!(
            !(x < self.w && y < self.w && z < self.w),
            "frozen block removed"
        );
        self.set_pair(x, y, NONE);
        self.set_pair(x, z, NONE);
        self.set_pair(y, z, NONE);
        for p in [x, y, z] {
            self.adjust(p, 2);
        }
    }

    /// Stinson's hill-climbing move adapted to keep the frozen blocks: take a
    /// live point `x` and two uncovered partners `y`, `z`; if `{y, z}` is
    /// uncovered add `{x, y, z}`, otherwise swap out the block through
    /// `{y, z}` for it. Picks with both partners frozen are skipped, since
    /// the block through them is frozen.
    fn run(&mut self, rng: &mut ChaCha8Rng, max_moves: u64, moves: &mut u64) -> Result<()> {
        let v = self.v;
        let mut local = 0u64;
        while !self.live.is_empty() {
            if local >= max_moves {
                *moves += local;
                return Err(Error::BudgetExhausted { moves: *moves });
            }
            local += 1;

            let x = self.live[rng.random_range(0..self.live.len())];
            self.scratch.clear();
            let row = &self.third[x * v..(x + 1) * v];
            self.scratch
                .extend((0..v).filter(|&p| p != x && row[p] == NONE));
            let k = self.scratch.len();
            debug_assert!(k >= 2 && k.is_multiple_of(2));
            let i = rng.random_range(0..k);
            let mut j = rng.random_range(0..k - 1);
            if j >= i {
                j += 1;
            }
            let (y, z) = (self.scratch[i], self.scratch[j]);
            if y < self.w && z < self.w {
                continue;
            }
            let t = self.third[y * v + z];
            if t != NONE {
                self.remove_block(y, z, t as usize);
            }
            self.add_block(x, y, z);
        }
        *moves += local;
        Ok(())
    }

    fn blocks(&self) -> Vec<Block> {
        let v = self.v;
        let mut out = Vec::with_capacity(v * (v - 1) / 6);
        for x in 0..v {
            for y in x + 1..v {
                let z = self.third[x * v + y];
                if z != NONE && (z as usize) > y {
                    out.push([x, y, z as usize]);
                }
            }
        }
        out
    }
}

/// Nonincidence certificate from a subsystem: `Y` is everything outside the
/// sub-design and `C` its blocks, trimmed to `|Y|` when there are more
/// blocks than points. When there are fewer, `C` is kept whole and the
/// claimed square size is `|C|`.
pub fn subsystem_complement_certificate(e: &EmbeddedDesign) -> NonincidenceCertificate {
    let d = &e.design;
    let inside = BitSet::from_indices(d.v(), e.sub_points.iter().copied());
    let y: Vec<usize> = (0..d.v()).filter(|&p| !inside.contains(p)).collect();
    let c: Vec<usize> = e.sub_blocks.iter().copied().take(y.len()).collect();
    let s = y.len().min(c.len());
    NonincidenceCertificate::new(d, y, c)
        .with_meta("construction", "embed_subsystem")
        .with_meta("w", e.w())
        .with_meta("claimed_s", s)
}
