//! Normalized two-letter treating-interference-as-noise rates.
//!
//! Two uses of the channel are one use of the product channel. Sender 1
//! picks a law `pi1` over `X1`-pairs, sender 2 a law `pi2` over `X2`-pairs,
//! receiver 1 decodes with the `X2`-pair as noise and receiver 2 sees the
//! `X2`-pair cleanly. Per channel use this gives
//! `lambda * R1 + R2 = (lambda * I(X1-pair; Y1-pair) + H(X2-pair)) / 2`.
//!
//! The maximization alternates between `pi1` (a channel-capacity problem,
//! solved by Blahut-Arimoto) and `pi2` (non-concave; projected gradient
//! ascent) from many starts. Every reported value is the objective at the
//! stored pair of distributions, so it is achievable whether or not the
//! ascent found the global maximum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{CziChannel, TwoLetterChannel};
use crate::error::{Error, Result};
use crate::hk::{hk_max, tin_max, GridMeta, HkConfig, TinResult, WeightedProblem};
use crate::infotheory::{channel_mutual_information, effective_channel, entropy_of, pair_mutual_information};
use crate::optim::project_to_simplex;

/// A law over `{(0,0), (0,1), (1,0), (1,1)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct PairDistribution([f64; 4]);

impl PairDistribution {
    pub fn new(mut p: [f64; 4]) -> Result<Self> {
        for (i, x) in p.iter_mut().enumerate() {
            if !x.is_finite() || *x < -1e-15 {
                return Err(Error::ProbVector(format!("pair entry {i} = {x}")));
            }
            *x = x.max(0.0);
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::ProbVector(format!("pair law sums to {sum}")));
        }
        Ok(PairDistribution(p))
    }

    /// Two independent letters with `P(first = 0) = a`, `P(second = 0) = b`.
    pub fn product(a: f64, b: f64) -> Self {
        let (ab, bb) = (1.0 - a, 1.0 - b);
        PairDistribution([a * b, a * bb, ab * b, ab * bb])
    }

    /// Independent and identically distributed letters.
    pub fn iid(a: f64) -> Self {
        Self::product(a, a)
    }

    /// Mass `p` on `(0,0)` and `1 - p` on `(1,1)`.
    pub fn repetition(p: f64) -> Self {
        PairDistribution([p, 0.0, 0.0, 1.0 - p])
    }

    /// Exchangeable law with both marginals `q`, shifted from the product by
    /// `c`: `(q^2 + c, q(1-q) - c, q(1-q) - c, (1-q)^2 + c)`.
    pub fn exchangeable(q: f64, c: f64) -> Result<Self> {
        let qb = 1.0 - q;
        Self::new([q * q + c, q * qb - c, q * qb - c, qb * qb + c])
    }

    pub fn probs(&self) -> &[f64; 4] {
        &self.0
    }

    /// Swaps the two letter positions.
    pub fn swap_letters(&self) -> Self {
        let p = self.0;
        PairDistribution([p[0], p[2], p[1], p[3]])
    }

    /// `(P(first = 0), P(second = 0))`.
    pub fn marginals(&self) -> (f64, f64) {
        let p = self.0;
        (p[0] + p[1], p[0] + p[2])
    }
}

impl TryFrom<[f64; 4]> for PairDistribution {
    type Error = Error;

    fn try_from(p: [f64; 4]) -> Result<Self> {
        PairDistribution::new(p)
    }
}

impl From<PairDistribution> for [f64; 4] {
    fn from(p: PairDistribution) -> Self {
        p.0
    }
}

/// `(lambda * I(X1-pair; Y1-pair) + H(X2-pair)) / 2`.
pub fn two_letter_objective(ch2: &TwoLetterChannel, lambda: f64, pi1: &PairDistribution, pi2: &PairDistribution) -> f64 {
    raw_objective(ch2, lambda, &pi1.0, &pi2.0)
}

#[inline]
fn raw_objective(ch2: &TwoLetterChannel, lambda: f64, pi1: &[f64; 4], pi2: &[f64; 4]) -> f64 {
    0.5 * (lambda * pair_mutual_information(ch2, pi1, pi2) + entropy_of(pi2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLetterConfig {
    pub starts: usize,
    pub seed: u64,
    /// Convergence tolerance for the capacity step and for a whole round.
    pub tol: f64,
    pub max_rounds: usize,
}

impl Default for TwoLetterConfig {
    fn default() -> Self {
        TwoLetterConfig {
            starts: 64,
            seed: 0,
            tol: 1e-10,
            max_rounds: 3000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLetterResult {
    /// Normalized value, `lambda * R1 + R2` per channel use.
    pub value: f64,
    pub pi1_star: PairDistribution,
    pub pi2_star: PairDistribution,
    pub starts_tried: usize,
    pub best_start: usize,
    pub converged_starts: usize,
    pub seed: u64,
    /// Single-letter TIN optimum whose tensor power seeded start 0.
    pub tin: TinResult,
}

/// Number of structured (repetition / exchangeable) starts.
const CORRELATION_SWEEP: usize = 17;

/// Blahut-Arimoto iterations for the `pi1` step, stopped once the capacity
/// gap `max_x D(x) - I` drops below `tol`.
const MAX_CAPACITY_SCALE: f64 = 1024.0;

fn capacity_step(w: &[[f64; 4]; 4], pi1: &mut [f64; 4], tol: f64, max_iter: usize) -> bool {
    // multiplicative update pi * 2^(mu D); mu > 1 is kept only while it
    // does not lower the information, mu = 1 is the plain iteration
    let mut mu = 1.0;
    for _ in 0..max_iter {
        let mut out = [0.0; 4];
        for (x, row) in w.iter().enumerate() {
            for y in 0..4 {
                out[y] += pi1[x] * row[y];
            }
        }
        let mut d = [0.0; 4];
        for (x, row) in w.iter().enumerate() {
            for y in 0..4 {
                if row[y] > 0.0 {
                    d[x] += row[y] * (row[y] / out[y]).log2();
                }
            }
        }
        let info: f64 = (0..4).map(|x| pi1[x] * d[x]).sum();
        let upper = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if upper - info < tol {
            return true;
        }
        loop {
            let mut next = *pi1;
            let mut z = 0.0;
            for x in 0..4 {
                next[x] *= (mu * (d[x] - upper)).exp2();
                z += next[x];
            }
            for v in next.iter_mut() {
                *v /= z;
            }
            if mu == 1.0 || channel_mutual_information(w, &next) >= info {
                *pi1 = next;
                mu = (mu * 2.0).min(MAX_CAPACITY_SCALE);
                break;
            }
            mu = (mu / 2.0).max(1.0);
        }
    }
    false
}

/// Gradient of the objective in `pi2` (up to a constant shift, which the
/// simplex ignores).
fn pi2_gradient(ch2: &TwoLetterChannel, lambda: f64, pi1: &[f64; 4], pi2: &[f64; 4]) -> [f64; 4] {
    let w = effective_channel(ch2, pi2);
    let mut out = [0.0; 4];
    for (x, row) in w.iter().enumerate() {
        for y in 0..4 {
            out[y] += pi1[x] * row[y];
        }
    }
    let mut g = [0.0; 4];
    for (s, gs) in g.iter_mut().enumerate() {
        let mut di = 0.0;
        for x in 0..4 {
            if pi1[x] == 0.0 {
                continue;
            }
            let law = ch2.law(x, s);
            for y in 0..4 {
                if law[y] > 0.0 && w[x][y] > 0.0 {
                    di += pi1[x] * law[y] * (w[x][y] / out[y]).log2();
                }
            }
        }
        // d/dp (-p log2 p) = -log2 p - 1/ln 2, capped at the boundary
        let dh = if pi2[s] > 1e-300 { -pi2[s].log2() } else { 1e3 };
        *gs = 0.5 * (lambda * di + dh);
    }
    g
}

#[derive(Debug, Clone, Copy)]
struct StartOutcome {
    value: f64,
    pi1: [f64; 4],
    pi2: [f64; 4],
    converged: bool,
}

fn ascend(ch2: &TwoLetterChannel, lambda: f64, mut pi1: [f64; 4], mut pi2: [f64; 4], cfg: &TwoLetterConfig) -> StartOutcome {
    let mut value = raw_objective(ch2, lambda, &pi1, &pi2);
    let mut best = StartOutcome {
        value,
        pi1,
        pi2,
        converged: false,
    };
    for _ in 0..cfg.max_rounds {
        let start_value = value;
        let w = effective_channel(ch2, &pi2);
        let ba_done = capacity_step(&w, &mut pi1, cfg.tol, 500);
        value = 0.5 * (lambda * channel_mutual_information(&w, &pi1) + entropy_of(&pi2));

        let g = pi2_gradient(ch2, lambda, &pi1, &pi2);
        let mut step = 0.25;
        while step > 1e-14 {
            let mut moved = [0.0; 4];
            for s in 0..4 {
                moved[s] = pi2[s] + step * g[s];
            }
            let cand = project_to_simplex(&moved);
            let v = raw_objective(ch2, lambda, &pi1, &cand);
            if v > value {
                pi2 = cand;
                value = v;
                break;
            }
            step *= 0.5;
        }

        if value > best.value {
            best = StartOutcome {
                value,
                pi1,
                pi2,
                converged: false,
            };
        }
        if ba_done && value - start_value < cfg.tol * 1e-2 {
            best.converged = true;
            break;
        }
    }
    // re-evaluate so the stored value is exactly the objective at the point
    best.value = raw_objective(ch2, lambda, &best.pi1, &best.pi2);
    best
}

fn random_simplex_point(rng: &mut ChaCha8Rng) -> [f64; 4] {
    let mut e = [0.0; 4];
    for v in &mut e {
        *v = -(1.0 - rng.gen::<f64>()).ln();
    }
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

/// Starting points in order: the tensored single-letter TIN optimum, the
/// repetition / exchangeable sweep, then seeded random points.
fn starting_points(tin: &TinResult, cfg: &TwoLetterConfig) -> Vec<([f64; 4], [f64; 4])> {
    let mut starts = Vec::with_capacity(cfg.starts.max(1));
    starts.push((PairDistribution::iid(tin.p).0, PairDistribution::iid(tin.q).0));

    let q = tin.q.clamp(0.05, 0.95);
    let c_lo = -(q * q).min((1.0 - q) * (1.0 - q));
    let c_hi = q * (1.0 - q);
    for k in 0..CORRELATION_SWEEP {
        let c = c_lo + (c_hi - c_lo) * k as f64 / (CORRELATION_SWEEP - 1) as f64;
        if let Ok(pi2) = PairDistribution::exchangeable(q, c) {
            // keep every pair reachable by the multiplicative pi1 update
            let mut pi1 = PairDistribution::repetition(tin.p.clamp(0.05, 0.95)).0;
            for v in &mut pi1 {
                *v = 0.98 * *v + 0.005;
            }
            starts.push((pi1, pi2.0));
        }
    }

    let mut k = starts.len();
    while starts.len() < cfg.starts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(k as u64);
        starts.push((random_simplex_point(&mut rng), random_simplex_point(&mut rng)));
        k += 1;
    }
    starts.truncate(cfg.starts.max(1));
    starts
}

/// Best normalized two-letter TIN value found by multistart ascent.
pub fn two_letter_max(ch: &CziChannel, lambda: f64, cfg: &TwoLetterConfig) -> Result<TwoLetterResult> {
    if !(lambda.is_finite() && lambda >= 1.0) {
        return Err(Error::Domain {
            what: "lambda (two-letter search needs lambda >= 1)",
            value: lambda,
        });
    }
    if cfg.starts == 0 || !(cfg.tol > 0.0) {
        return Err(Error::Config("two-letter search needs starts >= 1 and tol > 0".into()));
    }
    let tin = tin_max(ch, lambda)?;
    let ch2 = ch.product();
    let outcomes: Vec<StartOutcome> = starting_points(&tin, cfg)
        .into_par_iter()
        .map(|(pi1, pi2)| ascend(&ch2, lambda, pi1, pi2, cfg))
        .collect();

    let mut best_start = 0;
    for (k, o) in outcomes.iter().enumerate() {
        if o.value > outcomes[best_start].value {
            best_start = k;
        }
    }
    let best = outcomes[best_start];
    Ok(TwoLetterResult {
        value: best.value,
        pi1_star: PairDistribution(best.pi1),
        pi2_star: PairDistribution(best.pi2),
        starts_tried: outcomes.len(),
        best_start,
        converged_starts: outcomes.iter().filter(|o| o.converged).count(),
        seed: cfg.seed,
        tin,
    })
}

/// Default threshold above which a gap counts as a counterexample.
pub const DEFAULT_GAP_THRESHOLD: f64 = 1e-4;

/// Rounding allowance for a two-letter value, which is an exact evaluation
/// at a stored feasible point.
pub const TWO_LETTER_ERROR_BUDGET: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapProvenance {
    pub seed: u64,
    pub starts: usize,
    pub best_start: usize,
    pub hk_grid: GridMeta,
    /// Set when the HK value was recomputed on a finer grid.
    pub reverified: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub channel: CziChannel,
    pub lambda: f64,
    pub hk_value: f64,
    pub two_letter_value: f64,
    pub gap: f64,
    pub flagged: bool,
    pub threshold: f64,
    /// `hk_error_budget + two_letter_error_budget`
    pub error_budget: f64,
    pub hk_error_budget: f64,
    pub two_letter_error_budget: f64,
    pub provenance: GapProvenance,
}

impl GapReport {
    /// Builds the report from finished HK and two-letter runs. `reverified`
    /// records that `hk` came from a refined grid.
    pub fn from_results(
        ch: &CziChannel,
        lambda: f64,
        hk: &crate::hk::OptResult,
        two: &TwoLetterResult,
        threshold: f64,
        reverified: bool,
    ) -> Self {
        let gap = two.value - hk.value;
        let hk_error_budget = hk.error_budget();
        GapReport {
            channel: *ch,
            lambda,
            hk_value: hk.value,
            two_letter_value: two.value,
            gap,
            flagged: gap > threshold,
            threshold,
            error_budget: hk_error_budget + TWO_LETTER_ERROR_BUDGET,
            hk_error_budget,
            two_letter_error_budget: TWO_LETTER_ERROR_BUDGET,
            provenance: GapProvenance {
                seed: two.seed,
                starts: two.starts_tried,
                best_start: two.best_start,
                hk_grid: hk.grid_meta,
                reverified,
            },
        }
    }
}

/// Two-letter value minus single-letter HK value at one `lambda`.
pub fn gap(ch: &CziChannel, lambda: f64, hk_cfg: &HkConfig, tl_cfg: &TwoLetterConfig, threshold: f64) -> Result<GapReport> {
    if !(threshold > 0.0) {
        return Err(Error::Config("threshold must be positive".into()));
    }
    let hk = hk_max(&WeightedProblem::new(*ch, lambda)?, hk_cfg)?;
    let two = two_letter_max(ch, lambda, tl_cfg)?;
    Ok(GapReport::from_results(ch, lambda, &hk, &two, threshold, false))
}
