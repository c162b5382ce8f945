//! Direct sampler of the block-counting chain of the static n-coalescent
//! and the functionals read off a path.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspec::FunctionalSpec;
use crate::rates::RatesContext;
use crate::special::CompensatedSum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPath {
    pub n: usize,
    /// `X_0 = n > X_1 > ... > X_tau = 1`
    pub blocks: Vec<usize>,
    /// `R_{k+1} - R_k` for `k < tau`.
    pub holding_times: Option<Vec<f64>>,
    /// Singleton lineages present just before merger k, for `k <= tau`.
    pub singletons: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PathOptions {
    pub times: bool,
    pub singletons: bool,
}

impl PathOptions {
    pub const BARE: Self = Self { times: false, singletons: false };
    pub const FULL: Self = Self { times: true, singletons: true };
}

impl BlockPath {
    /// Number of mergers.
    pub fn tau(&self) -> usize {
        self.blocks.len() - 1
    }

    /// `Y_k = X_k - X_{k+1}`.
    pub fn losses(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.windows(2).map(|w| w[0] - w[1])
    }

    /// Reverse-time depth of the last merger.
    pub fn depth(&self) -> Option<f64> {
        self.holding_times.as_ref().map(|h| h.iter().sum())
    }

    /// Checks the structural invariants of a path.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Domain(format!("invalid block path: {m}")));
        if self.blocks.first() != Some(&self.n) || self.blocks.last() != Some(&1) {
            return bad("must run from n to 1");
        }
        if self.blocks.windows(2).any(|w| w[1] >= w[0]) {
            return bad("block counts must decrease strictly");
        }
        if let Some(h) = &self.holding_times {
            if h.len() != self.tau() || h.iter().any(|&g| !(g > 0.0)) {
                return bad("holding times must be positive, one per merger");
            }
        }
        if let Some(s) = &self.singletons {
            if s.len() != self.blocks.len() || s[0] != self.n {
                return bad("singleton counts must start at n, one per state");
            }
            if s.windows(2).any(|w| w[1] > w[0]) || s.iter().zip(&self.blocks).any(|(s, x)| s > x) {
                return bad("singleton counts must be nonincreasing and bounded by the block count");
            }
        }
        Ok(())
    }
}

pub fn sample_block_path<R: Rng + ?Sized>(
    ctx: &RatesContext,
    n: usize,
    rng: &mut R,
    opts: PathOptions,
) -> Result<BlockPath> {
    if n < 2 {
        return Err(Error::Domain(format!("sample_block_path needs n >= 2, got {n}")));
    }
    let guess = (n as f64 * (ctx.alpha().value() - 1.0) * 1.1) as usize + 8;
    let mut blocks = Vec::with_capacity(guess.min(n));
    let mut times = opts.times.then(|| Vec::with_capacity(guess.min(n)));
    let mut singles = opts.singletons.then(|| Vec::with_capacity(guess.min(n)));
    let mut x = n;
    let mut s = n;
    blocks.push(x);
    if let Some(v) = singles.as_mut() {
        v.push(s);
    }
    while x > 1 {
        if let Some(v) = times.as_mut() {
            let e: f64 = Exp1.sample(rng);
            v.push(e / ctx.total_rate_unchecked(x));
        }
        let y = ctx.sample_merger_size(x, rng)?;
        if let Some(v) = singles.as_mut() {
            if s > 0 {
                s -= hypergeometric(x, s, y + 1, rng);
            }
            x -= y;
            v.push(s);
        } else {
            x -= y;
        }
        blocks.push(x);
    }
    Ok(BlockPath { n, blocks, holding_times: times, singletons: singles })
}

/// Marked items among `draws` taken without replacement from `total`
/// items of which `marked` are marked; sequential draws, O(draws).
fn hypergeometric<R: Rng + ?Sized>(total: usize, marked: usize, draws: usize, rng: &mut R) -> usize {
    if marked == 0 {
        return 0;
    }
    if marked == total {
        return draws;
    }
    let (mut left, mut hits_left) = (total, marked);
    let mut hits = 0;
    for _ in 0..draws {
        if rng.random_range(0..left) < hits_left {
            hits += 1;
            hits_left -= 1;
            if hits_left == 0 {
                break;
            }
        }
        left -= 1;
    }
    hits
}

/// Number of mergers.
pub fn functional_tau(path: &BlockPath) -> usize {
    path.tau()
}

/// Total branch length `sum X_k (R_{k+1} - R_k)`.
pub fn functional_total_length(path: &BlockPath) -> Result<f64> {
    let h = path.holding_times.as_ref().ok_or(Error::MissingField("holding times"))?;
    Ok(path.blocks.iter().zip(h).map(|(&x, &g)| x as f64 * g).collect::<CompensatedSum>().value())
}

/// `L'_n = sum X_k / lambda_{X_k}`.
pub fn functional_total_length_mean(ctx: &RatesContext, path: &BlockPath) -> f64 {
    let tau = path.tau();
    path.blocks[..tau]
        .iter()
        .map(|&x| x as f64 / ctx.total_rate_unchecked(x))
        .collect::<CompensatedSum>()
        .value()
}

/// `L''_n = alpha Gamma(alpha) sum X_k^{1 - alpha}`.
pub fn functional_total_length_power(ctx: &RatesContext, path: &BlockPath) -> f64 {
    let a = ctx.alpha().value();
    let tau = path.tau();
    ctx.kappa() * path.blocks[..tau].iter().map(|&x| (x as f64).powf(1.0 - a)).collect::<CompensatedSum>().value()
}

/// Total external branch length `sum s_k (R_{k+1} - R_k)`.
pub fn functional_external_length(path: &BlockPath) -> Result<f64> {
    let h = path.holding_times.as_ref().ok_or(Error::MissingField("holding times"))?;
    let s = path.singletons.as_ref().ok_or(Error::MissingField("singleton counts"))?;
    Ok(s.iter().zip(h).map(|(&s, &g)| s as f64 * g).collect::<CompensatedSum>().value())
}

/// `J_n(f) = n^{-1/alpha} ((alpha - 1)^{-1} sum_{k < tau} f(X_k / n) - n int f)`.
pub fn functional_j(path: &BlockPath, f: &FunctionalSpec) -> f64 {
    j_from_blocks(&path.blocks[..path.tau()], path.n, f)
}

/// `J_n(f)` from the pre-merger block counts `X_0, ..., X_{tau-1}`.
pub fn j_from_blocks(pre_merger: &[usize], n: usize, f: &FunctionalSpec) -> f64 {
    let a = f.alpha().value();
    let nf = n as f64;
    let sum: CompensatedSum = pre_merger.iter().map(|&x| f.eval(x as f64 / nf)).collect();
    nf.powf(-1.0 / a) * (sum.value() / (a - 1.0) - nf * f.integral())
}

/// `tau_n(a) = min { k : X_k <= a n }`.
pub fn hitting_index(path: &BlockPath, a: f64) -> Result<usize> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::Domain(format!("hitting level must lie in (0, 1], got {a}")));
    }
    let level = a * path.n as f64;
    Ok(path.blocks.iter().position(|&x| x as f64 <= level).unwrap_or(path.tau()))
}
