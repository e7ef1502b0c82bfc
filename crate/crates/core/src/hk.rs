//! Single-letter Han-Kobayashi weighted sum-rate for CZI channels.
//!
//! For `lambda >= 1` the maximum of `lambda * R1 + R2` over the HK region is
//!
//! ```text
//! max_{p, q}  I(X1,X2;Y1) + C_q[ H(X2) - I(X2;Y1|X1) + (lambda - 1) I(X1;Y1) ]
//! ```
//!
//! where `C_q` is the upper concave envelope in `q = P(X2 = 0)` at fixed
//! `p = P(X1 = 0)`. The envelope's two-point support is the auxiliary `U2`,
//! which lets every optimum be re-checked against the explicit pentagon of
//! the region.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::CziChannel;
use crate::envelope::{uniform_grid, Envelope, EnvelopeConfig, MixtureSupport};
use crate::error::{Error, Result};
use crate::infotheory::{hb, rate_terms, JointPmf, ProbVector};
use crate::optim::{golden_section_max, nelder_mead_max, NelderMeadOptions};

/// Certificates further than this from the optimum are rejected.
pub const CERTIFICATE_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedProblem {
    pub ch: CziChannel,
    /// Weight on `R1`.
    pub lambda: f64,
}

impl WeightedProblem {
    pub fn new(ch: CziChannel, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Domain {
                what: "lambda",
                value: lambda,
            });
        }
        Ok(WeightedProblem { ch, lambda })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub r1: f64,
    pub r2: f64,
}

impl RatePair {
    pub fn weighted(&self, lambda: f64) -> f64 {
        lambda * self.r1 + self.r2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HkConfig {
    pub envelope: EnvelopeConfig,
    pub p_grid: usize,
    pub q_grid: usize,
    pub golden_tol: f64,
}

impl Default for HkConfig {
    fn default() -> Self {
        HkConfig {
            envelope: EnvelopeConfig::default(),
            p_grid: 4097,
            q_grid: 4097,
            golden_tol: 1e-10,
        }
    }
}

impl HkConfig {
    /// Grids four times coarser than the default, used to screen search
    /// candidates.
    pub fn screening() -> Self {
        HkConfig {
            envelope: EnvelopeConfig {
                n_grid: 4097,
                refine_passes: 6,
            },
            p_grid: 1025,
            q_grid: 1025,
            golden_tol: 1e-10,
        }
    }

    /// Every grid made `factor` times finer.
    pub fn finer(&self, factor: usize) -> Self {
        let scale = |n: usize| (n - 1) * factor + 1;
        HkConfig {
            envelope: EnvelopeConfig {
                n_grid: scale(self.envelope.n_grid),
                refine_passes: self.envelope.refine_passes,
            },
            p_grid: scale(self.p_grid),
            q_grid: scale(self.q_grid),
            golden_tol: self.golden_tol,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.p_grid < 3 || self.q_grid < 3 {
            return Err(Error::Config("p_grid and q_grid must be at least 3".into()));
        }
        if self.envelope.n_grid < 3 {
            return Err(Error::GridTooSmall(self.envelope.n_grid));
        }
        if !(self.golden_tol > 0.0) {
            return Err(Error::Config("golden_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Resolution record attached to every optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub p_grid: usize,
    pub q_grid: usize,
    pub n_grid: usize,
    pub refine_passes: usize,
    pub resolution: f64,
    pub tangency_resolution: f64,
    pub golden_tol: f64,
    /// `|C_fine(q*) - C(q*)|` at `p*` against an envelope with twice the
    /// grid density and two more refinement passes.
    pub envelope_error_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub value: f64,
    /// `P(X1 = 0)`
    pub p_star: f64,
    /// `P(X2 = 0)`
    pub q_star: f64,
    /// Realization of `U2` as a mixture over `q`.
    pub support: MixtureSupport,
    pub certificate_value: f64,
    pub grid_meta: GridMeta,
}

impl OptResult {
    /// Numeric error budget for `value`.
    pub fn error_budget(&self) -> f64 {
        self.grid_meta.envelope_error_estimate + (self.value - self.certificate_value).abs()
    }
}

/// The bracketed inner function at fixed `(p, lambda)` with the
/// `q`-independent constants hoisted.
#[derive(Debug, Clone, Copy)]
struct Inner {
    m: [[f64; 2]; 2],
    /// `hb(m[x1][x2])`
    hm: [[f64; 2]; 2],
    p: f64,
    lambda: f64,
}

/// Value of the inner function and of `I(X1,X2;Y1)` at one `q`.
#[derive(Debug, Clone, Copy)]
struct InnerPoint {
    inner: f64,
    joint: f64,
}

impl Inner {
    fn new(ch: &CziChannel, lambda: f64, p: f64) -> Self {
        let m = ch.matrix();
        let hm = [[hb(m[0][0]), hb(m[0][1])], [hb(m[1][0]), hb(m[1][1])]];
        Inner { m, hm, p, lambda }
    }

    #[inline]
    fn at(&self, q: f64) -> InnerPoint {
        let rows = QRow::new(&self.m, &self.hm, q);
        self.at_row(&rows)
    }

    #[inline]
    fn at_row(&self, r: &QRow) -> InnerPoint {
        let (p, pb) = (self.p, 1.0 - self.p);
        let h_out = hb(p * r.r[0] + pb * r.r[1]);
        let h_given_x1 = p * r.hr[0] + pb * r.hr[1];
        let h_given_both = p * r.cond[0] + pb * r.cond[1];
        let i_x2 = h_given_x1 - h_given_both;
        let i_x1 = h_out - h_given_x1;
        InnerPoint {
            inner: r.hq - i_x2 + (self.lambda - 1.0) * i_x1,
            joint: h_out - h_given_both,
        }
    }
}

/// Terms that depend on `q` only.
#[derive(Debug, Clone, Copy)]
struct QRow {
    hq: f64,
    /// `P(Y1 = 0 | X1 = x1)`
    r: [f64; 2],
    hr: [f64; 2],
    /// `H(Y1 | X1 = x1, X2)`
    cond: [f64; 2],
}

impl QRow {
    #[inline]
    fn new(m: &[[f64; 2]; 2], hm: &[[f64; 2]; 2], q: f64) -> Self {
        let qb = 1.0 - q;
        let r = [q * m[0][0] + qb * m[0][1], q * m[1][0] + qb * m[1][1]];
        QRow {
            hq: hb(q),
            r,
            hr: [hb(r[0]), hb(r[1])],
            cond: [q * hm[0][0] + qb * hm[0][1], q * hm[1][0] + qb * hm[1][1]],
        }
    }
}

fn check_unit(what: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain { what, value: x })
    }
}

fn check_lambda_ge_one(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "lambda (the envelope formula needs lambda >= 1)",
            value: lambda,
        })
    }
}

/// `H(X2) - I(X2;Y1|X1) + (lambda - 1) I(X1;Y1)` at `(p, q)`.
pub fn hk_inner(ch: &CziChannel, lambda: f64, p: f64, q: f64) -> Result<f64> {
    check_lambda_ge_one(lambda)?;
    check_unit("p", p)?;
    check_unit("q", q)?;
    Ok(Inner::new(ch, lambda, p).at(q).inner)
}

/// The `q`-grid shared by every `p`, with its `q`-only terms.
struct QTable {
    rows: Vec<QRow>,
    /// Stride from the envelope grid to the coarser `q`-grid, if aligned.
    stride: Option<usize>,
}

impl QTable {
    /// Table on `n` envelope samples, scanned on a `q_grid`-point subgrid.
    fn new(ch: &CziChannel, n: usize, q_grid: usize) -> Self {
        let m = ch.matrix();
        let hm = [[hb(m[0][0]), hb(m[0][1])], [hb(m[1][0]), hb(m[1][1])]];
        let rows = uniform_grid(n).map(|q| QRow::new(&m, &hm, q)).collect();
        let stride = (n - 1).is_multiple_of(q_grid - 1).then(|| (n - 1) / (q_grid - 1));
        QTable { rows, stride }
    }
}

/// Maximum over `q` at one `p`.
#[derive(Debug, Clone)]
struct PSlice {
    value: f64,
    q: f64,
}

fn slice_at(
    ch: &CziChannel,
    lambda: f64,
    p: f64,
    table: &QTable,
    cfg: &HkConfig,
    polish: bool,
) -> Result<(PSlice, Envelope)> {
    let inner = Inner::new(ch, lambda, p);
    let n = table.rows.len();
    let mut samples = Vec::with_capacity(n);
    let mut joint = Vec::with_capacity(n);
    for row in &table.rows {
        let pt = inner.at_row(row);
        samples.push(pt.inner);
        joint.push(pt.joint);
    }
    let f = |q: f64| inner.at(q).inner;
    let env = Envelope::from_uniform_samples(&samples, f, cfg.envelope.refine_passes)?;
    let env_grid = env.values_on_grid(&samples);

    // coarse q scan, smallest q wins ties
    let mut best = (f64::NEG_INFINITY, 0usize);
    let mut scan = |i: usize| {
        let v = joint[i] + env_grid[i];
        if v > best.0 {
            best = (v, i);
        }
    };
    match table.stride {
        Some(stride) => (0..n).step_by(stride).for_each(&mut scan),
        None => (0..n).for_each(&mut scan),
    }
    let step = table.stride.unwrap_or(1) as f64 / (n - 1) as f64;
    let q_at = |i: usize| if i == n - 1 { 1.0 } else { i as f64 / (n - 1) as f64 };
    let mut slice = PSlice {
        value: best.0,
        q: q_at(best.1),
    };

    if polish {
        let lo = (slice.q - step).max(0.0);
        let hi = (slice.q + step).min(1.0);
        let objective = |q: f64| inner.at(q).joint + env.eval(f, q);
        let (q, v) = golden_section_max(objective, lo, hi, cfg.golden_tol, 200);
        if v > slice.value || (v == slice.value && q < slice.q) {
            slice = PSlice { value: v, q };
        }
    }
    Ok((slice, env))
}

/// Maximum of `lambda * R1 + R2` over the HK region of a CZI channel, for
/// `lambda >= 1`.
///
/// The returned value is always achievable: the numeric envelope never
/// exceeds the true one, and the optimum is cross-checked against the rate
/// pair of the explicit auxiliary in `support`.
pub fn hk_max(prob: &WeightedProblem, cfg: &HkConfig) -> Result<OptResult> {
    check_lambda_ge_one(prob.lambda)?;
    cfg.validate()?;
    let ch = prob.ch;
    let lambda = prob.lambda;
    // The p-scan screens with envelopes sampled on the q-grid itself; the
    // full envelope resolution is spent inside the winning bracket only.
    let screen = QTable::new(&ch, cfg.q_grid.min(cfg.envelope.n_grid), cfg.q_grid);
    let table = QTable::new(&ch, cfg.envelope.n_grid, cfg.q_grid);

    let p_step = 1.0 / (cfg.p_grid - 1) as f64;
    let coarse = uniform_grid(cfg.p_grid)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|p| slice_at(&ch, lambda, p, &screen, cfg, false).map(|(s, _)| s.value))
        .collect::<Result<Vec<_>>>()?;
    let mut k_best = 0;
    for (k, &v) in coarse.iter().enumerate() {
        if v > coarse[k_best] {
            k_best = k;
        }
    }
    let p_grid_best = k_best as f64 * p_step;

    let mut first_err = None;
    let (p_star, _) = golden_section_max(
        |p| match slice_at(&ch, lambda, p, &table, cfg, true) {
            Ok((s, _)) => s.value,
            Err(e) => {
                first_err.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        (p_grid_best - p_step).max(0.0),
        (p_grid_best + p_step).min(1.0),
        cfg.golden_tol,
        200,
    );
    if let Some(e) = first_err {
        return Err(e);
    }

    let (slice, env) = slice_at(&ch, lambda, p_star, &table, cfg, true)?;
    let inner = Inner::new(&ch, lambda, p_star);
    let f = |q: f64| inner.at(q).inner;
    let support = env.support(f, slice.q);

    let fine_cfg = EnvelopeConfig {
        n_grid: 2 * (cfg.envelope.n_grid - 1) + 1,
        refine_passes: cfg.envelope.refine_passes + 2,
    };
    let fine = crate::envelope::upper_concave_envelope(f, fine_cfg)?;
    let envelope_error_estimate = (fine.eval(f, slice.q) - env.eval(f, slice.q)).abs();

    let mut result = OptResult {
        value: slice.value,
        p_star,
        q_star: slice.q,
        support,
        certificate_value: f64::NAN,
        grid_meta: GridMeta {
            p_grid: cfg.p_grid,
            q_grid: cfg.q_grid,
            n_grid: cfg.envelope.n_grid,
            refine_passes: cfg.envelope.refine_passes,
            resolution: env.resolution(),
            tangency_resolution: env.tangency_resolution(),
            golden_tol: cfg.golden_tol,
            envelope_error_estimate,
        },
    };
    result.certificate_value = certificate(prob, &result)?;
    Ok(result)
}

/// Re-evaluates `lambda * R1 + R2` at the pentagon corner of the explicit
/// auxiliary `U2` recorded in `result.support`.
pub fn certificate(prob: &WeightedProblem, result: &OptResult) -> Result<f64> {
    let s = &result.support;
    let p1 = ProbVector::binary(result.p_star)?;
    let (pu2, rows) = if s.is_degenerate() {
        let q = if s.w == 0.0 { s.x_hi } else { s.x_lo };
        (ProbVector::new(vec![1.0])?, vec![ProbVector::binary(q)?])
    } else {
        (
            ProbVector::binary(s.w)?,
            vec![ProbVector::binary(s.x_lo)?, ProbVector::binary(s.x_hi)?],
        )
    };
    let (_, value) = pentagon_corner(&prob.ch, &p1, &pu2, &rows, prob.lambda)?;
    let diff = (value - result.value).abs();
    if diff > CERTIFICATE_TOL {
        return Err(Error::Certification {
            value: result.value,
            certificate: value,
            diff,
        });
    }
    Ok(value)
}

/// The three constraints of the CZI form of the HK region for one input
/// distribution: `R1 <= r1_max`, `R2 <= r2_max`, `R1 + R2 <= sum_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PentagonConstraints {
    /// `I(X1; Y1 | U2)`
    pub r1_max: f64,
    /// `H(X2)`
    pub r2_max: f64,
    /// `I(X1, U2; Y1) + H(X2 | U2)`
    pub sum_max: f64,
}

impl PentagonConstraints {
    pub fn contains(&self, r: &RatePair, tol: f64) -> bool {
        r.r1 >= -tol
            && r.r2 >= -tol
            && r.r1 <= self.r1_max + tol
            && r.r2 <= self.r2_max + tol
            && r.r1 + r.r2 <= self.sum_max + tol
    }

    /// Maximum of `lambda * R1 + R2` over the pentagon, by vertex
    /// enumeration.
    pub fn max_weighted(&self, lambda: f64) -> f64 {
        let (a, b, c) = (self.r1_max.max(0.0), self.r2_max.max(0.0), self.sum_max.max(0.0));
        let mut best: f64 = 0.0;
        let mut consider = |r1: f64, r2: f64| {
            if r1 >= 0.0 && r2 >= 0.0 && r1 <= a && r2 <= b && r1 + r2 <= c * (1.0 + 1e-15) {
                best = best.max(lambda * r1 + r2);
            }
        };
        consider(a.min(c), 0.0);
        consider(0.0, b.min(c));
        consider(a, c - a);
        consider(c - b, b);
        best
    }
}

fn joint_table(ch: &CziChannel, p1: &ProbVector, pu2: &ProbVector, px2_given_u2: &[ProbVector]) -> Result<JointPmf> {
    if p1.len() != 2 {
        return Err(Error::ProbVector(format!("X1 law has {} entries, expected 2", p1.len())));
    }
    if px2_given_u2.len() != pu2.len() || px2_given_u2.iter().any(|r| r.len() != 2) {
        return Err(Error::ProbVector("need one binary X2 row per U2 atom".into()));
    }
    // variables: 0 = U2, 1 = X1, 2 = X2, 3 = Y1
    Ok(JointPmf::from_fn(&[pu2.len(), 2, 2, 2], |i| {
        pu2[i[0]] * p1[i[1]] * px2_given_u2[i[0]][i[2]] * ch.law(i[1], i[2])[i[3]]
    }))
}

/// Constraint values of the pentagon for `p(x1) p(u2) p(x2|u2)`.
pub fn pentagon_constraints(
    ch: &CziChannel,
    p1: &ProbVector,
    pu2: &ProbVector,
    px2_given_u2: &[ProbVector],
) -> Result<PentagonConstraints> {
    let j = joint_table(ch, p1, pu2, px2_given_u2)?;
    Ok(PentagonConstraints {
        r1_max: j.mutual_information(&[1], &[3], &[0]),
        r2_max: j.entropy_of(&[2]),
        sum_max: j.mutual_information(&[1, 0], &[3], &[]) + j.entropy_of(&[0, 2]) - j.entropy_of(&[0]),
    })
}

/// The corner `(I(X1;Y1|U2), H(X2|U2) + I(U2;Y1))` of the pentagon and its
/// weighted value `lambda * r1 + r2`.
pub fn pentagon_corner(
    ch: &CziChannel,
    p1: &ProbVector,
    pu2: &ProbVector,
    px2_given_u2: &[ProbVector],
    lambda: f64,
) -> Result<(RatePair, f64)> {
    let j = joint_table(ch, p1, pu2, px2_given_u2)?;
    let r1 = j.mutual_information(&[1], &[3], &[0]).max(0.0);
    let h_x2_given_u2 = j.entropy_of(&[0, 2]) - j.entropy_of(&[0]);
    let r2 = (h_x2_given_u2 + j.mutual_information(&[0], &[3], &[])).max(0.0);
    let pair = RatePair { r1, r2 };
    Ok((pair, pair.weighted(lambda)))
}

/// Maximum of `H(X2) + lambda I(X1;Y1)`, the rate of treating
/// interference as noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TinResult {
    pub value: f64,
    pub p: f64,
    pub q: f64,
}

fn tin_objective(ch: &CziChannel, lambda: f64, p: f64, q: f64) -> f64 {
    let t = rate_terms(ch, p, q);
    t.h_x2 + lambda * t.i_x1_y1
}

/// Keeps the `k` best `(value, index)` pairs, earliest index first on ties.
fn top_k(values: impl Iterator<Item = f64>, k: usize) -> Vec<(f64, usize)> {
    let mut all: Vec<(f64, usize)> = values.enumerate().map(|(i, v)| (v, i)).collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    all.truncate(k);
    all
}

/// Nelder-Mead over the unit box in the coordinates `x = sin^2(t)`,
/// restarted from its own result until a restart stops improving. `step`
/// is the initial simplex size in `t`.
fn box_max(f: impl Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_evals: usize) -> (Vec<f64>, f64) {
    let to_box = |t: &[f64]| -> Vec<f64> { t.iter().map(|v| v.sin().powi(2)).collect() };
    let mut t: Vec<f64> = x0.iter().map(|x| x.clamp(0.0, 1.0).sqrt().asin()).collect();
    let mut best = f(&to_box(&t));
    let opts = NelderMeadOptions {
        initial_step: step,
        max_evals,
        ..Default::default()
    };
    for _ in 0..4 {
        let (next, v) = nelder_mead_max(|t| f(&to_box(t)), &t, opts);
        if !(v > best) {
            break;
        }
        let gained = v - best;
        t = next;
        best = v;
        if gained <= 1e-15 {
            break;
        }
    }
    (to_box(&t), best)
}

pub fn tin_max(ch: &CziChannel, lambda: f64) -> Result<TinResult> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Domain {
            what: "lambda",
            value: lambda,
        });
    }
    const N: usize = 257;
    let grid: Vec<f64> = uniform_grid(N).collect();
    let values = (0..N * N).map(|k| tin_objective(ch, lambda, grid[k / N], grid[k % N]));
    let mut best = TinResult {
        value: f64::NEG_INFINITY,
        p: 0.0,
        q: 0.0,
    };
    for (v, k) in top_k(values, 4) {
        let x0 = [grid[k / N], grid[k % N]];
        let (x, polished) = box_max(|x| tin_objective(ch, lambda, x[0], x[1]), &x0, 0.02, 4000);
        let cand = if polished >= v {
            TinResult { value: polished, p: x[0], q: x[1] }
        } else {
            TinResult { value: v, p: x0[0], q: x0[1] }
        };
        if cand.value > best.value {
            best = cand;
        }
    }
    Ok(best)
}

/// Optimum of the direct search over the CZI form of the HK region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectResult {
    pub value: f64,
    pub p: f64,
    /// Weight of the first `U2` atom.
    pub w: f64,
    pub q_a: f64,
    pub q_b: f64,
}

/// Pentagon constraints for a binary `U2` with `P(U2 = a) = w`,
/// `P(X2 = 0 | U2 = a) = q_a`, `P(X2 = 0 | U2 = b) = q_b`.
pub fn binary_aux_constraints(ch: &CziChannel, p: f64, w: f64, q_a: f64, q_b: f64) -> PentagonConstraints {
    let wb = 1.0 - w;
    let q_mean = w * q_a + wb * q_b;
    let ta = rate_terms(ch, p, q_a);
    let tb = rate_terms(ch, p, q_b);
    let py0 = |q: f64| {
        let m = ch.matrix();
        p * (q * m[0][0] + (1.0 - q) * m[0][1]) + (1.0 - p) * (q * m[1][0] + (1.0 - q) * m[1][1])
    };
    let i_u2_y1 = (hb(py0(q_mean)) - w * hb(py0(q_a)) - wb * hb(py0(q_b))).max(0.0);
    let r1_max = w * ta.i_x1_y1 + wb * tb.i_x1_y1;
    PentagonConstraints {
        r1_max,
        r2_max: hb(q_mean),
        sum_max: i_u2_y1 + r1_max + w * ta.h_x2 + wb * tb.h_x2,
    }
}

/// Maximizes `lambda * R1 + R2` directly over the pentagon family with a
/// two-atom `U2`: a grid over `(p, w, q_a, q_b)` followed by Nelder-Mead
/// polishing of the best cells. Valid for any `lambda >= 0`; this is the
/// route that does not go through the envelope formula.
pub fn hk_region_max_direct(ch: &CziChannel, lambda: f64) -> Result<DirectResult> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Domain {
            what: "lambda",
            value: lambda,
        });
    }
    let objective = |x: &[f64]| binary_aux_constraints(ch, x[0], x[1], x[2], x[3]).max_weighted(lambda);
    const NP: usize = 17;
    const NQ: usize = 17;
    let ws = [0.25, 0.5, 0.75];
    let pg: Vec<f64> = uniform_grid(NP).collect();
    let qg: Vec<f64> = uniform_grid(NQ).collect();
    let mut points = Vec::with_capacity(NP * ws.len() * NQ * NQ);
    for &p in &pg {
        for &w in &ws {
            for &qa in &qg {
                for &qb in &qg {
                    points.push([p, w, qa, qb]);
                }
            }
        }
    }
    let mut best = DirectResult {
        value: f64::NEG_INFINITY,
        p: 0.0,
        w: 1.0,
        q_a: 0.0,
        q_b: 0.0,
    };
    for (_, k) in top_k(points.iter().map(|x| objective(x)), 6) {
        let (x, v) = box_max(objective, &points[k], 0.05, 6000);
        if v > best.value {
            best = DirectResult {
                value: v,
                p: x[0],
                w: x[1],
                q_a: x[2],
                q_b: x[3],
            };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn z_half() -> CziChannel {
        CziChannel::new([[1.0, 0.5], [1.0, 0.0]]).unwrap()
    }

    #[test]
    fn inner_matches_rate_terms() {
        let ch = CziChannel::new([[0.2, 0.7], [0.9, 0.05]]).unwrap();
        for &(p, q, l) in &[(0.1, 0.2, 1.0), (0.5, 0.9, 3.0), (0.99, 0.01, 7.5)] {
            let t = rate_terms(&ch, p, q);
            let expect = t.h_x2 - t.i_x2_y1_given_x1 + (l - 1.0) * t.i_x1_y1;
            assert_abs_diff_eq!(hk_inner(&ch, l, p, q).unwrap(), expect, epsilon = 1e-13);
            assert_abs_diff_eq!(Inner::new(&ch, l, p).at(q).joint, t.i_joint, epsilon = 1e-13);
        }
    }

    #[test]
    fn inner_domain_and_trivial_cases() {
        assert!(matches!(hk_inner(&z_half(), 0.5, 0.3, 0.3), Err(Error::Domain { .. })));
        assert!(hk_inner(&z_half(), 1.0, 0.3, 0.3).is_ok());
        assert!(hk_inner(&z_half(), 2.0, 1.3, 0.3).is_err());
        for q in [0.0, 0.2, 0.5, 1.0] {
            assert_abs_diff_eq!(
                hk_inner(&CziChannel::uniform_noise(), 4.0, 0.3, q).unwrap(),
                hb(q),
                epsilon = 1e-15
            );
            assert_abs_diff_eq!(hk_inner(&z_half(), 2.0, 0.0, q).unwrap(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn pentagon_degenerate_aux_is_tin_point() {
        let ch = CziChannel::new([[0.2, 0.7], [0.9, 0.05]]).unwrap();
        let p1 = ProbVector::binary(0.4).unwrap();
        let (pair, v) = pentagon_corner(
            &ch,
            &p1,
            &ProbVector::new(vec![1.0]).unwrap(),
            &[ProbVector::binary(0.3).unwrap()],
            2.0,
        )
        .unwrap();
        let t = rate_terms(&ch, 0.4, 0.3);
        assert_abs_diff_eq!(pair.r1, t.i_x1_y1, epsilon = 1e-13);
        assert_abs_diff_eq!(pair.r2, t.h_x2, epsilon = 1e-13);
        assert_abs_diff_eq!(v, 2.0 * t.i_x1_y1 + t.h_x2, epsilon = 1e-13);
    }

    #[test]
    fn pentagon_corner_is_inside_and_tight() {
        let ch = CziChannel::new([[0.2, 0.7], [0.9, 0.05]]).unwrap();
        let p1 = ProbVector::binary(0.4).unwrap();
        let pu2 = ProbVector::binary(0.3).unwrap();
        let rows = [ProbVector::binary(0.1).unwrap(), ProbVector::binary(0.8).unwrap()];
        let c = pentagon_constraints(&ch, &p1, &pu2, &rows).unwrap();
        let (pair, _) = pentagon_corner(&ch, &p1, &pu2, &rows, 2.0).unwrap();
        assert!(c.contains(&pair, 1e-12));
        assert_abs_diff_eq!(pair.r1, c.r1_max, epsilon = 1e-12);
        assert_abs_diff_eq!(pair.r1 + pair.r2, c.sum_max, epsilon = 1e-12);
        // lambda >= 1 makes the corner the maximizer over the pentagon
        assert_abs_diff_eq!(c.max_weighted(2.0), pair.weighted(2.0), epsilon = 1e-12);

        let fast = binary_aux_constraints(&ch, 0.4, 0.3, 0.1, 0.8);
        assert_abs_diff_eq!(fast.r1_max, c.r1_max, epsilon = 1e-12);
        assert_abs_diff_eq!(fast.r2_max, c.r2_max, epsilon = 1e-12);
        assert_abs_diff_eq!(fast.sum_max, c.sum_max, epsilon = 1e-12);
    }

    #[test]
    fn pentagon_of_uniform_noise() {
        let p1 = ProbVector::binary(0.4).unwrap();
        let pu2 = ProbVector::binary(0.3).unwrap();
        let rows = [ProbVector::binary(0.1).unwrap(), ProbVector::binary(0.8).unwrap()];
        let (pair, _) = pentagon_corner(&CziChannel::uniform_noise(), &p1, &pu2, &rows, 3.0).unwrap();
        assert_abs_diff_eq!(pair.r1, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pair.r2, 0.3 * hb(0.1) + 0.7 * hb(0.8), epsilon = 1e-13);
    }

    #[test]
    fn max_weighted_vertices() {
        let c = PentagonConstraints {
            r1_max: 1.0,
            r2_max: 2.0,
            sum_max: 2.5,
        };
        assert_abs_diff_eq!(c.max_weighted(2.0), 3.5); // (1, 1.5)
        assert_abs_diff_eq!(c.max_weighted(0.5), 2.25); // (0.5, 2)
    }

    #[test]
    fn weighted_problem_validation() {
        assert!(WeightedProblem::new(z_half(), -1.0).is_err());
        assert!(WeightedProblem::new(z_half(), f64::NAN).is_err());
        assert!(WeightedProblem::new(z_half(), 0.0).is_ok());
    }

    #[test]
    fn tin_uniform_noise() {
        let r = tin_max(&CziChannel::uniform_noise(), 3.0).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.q, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn finer_config_scales_grids() {
        let c = HkConfig::default().finer(4);
        assert_eq!(c.p_grid, 16385);
        assert_eq!(c.q_grid, 16385);
        assert_eq!(c.envelope.n_grid, 65537);
        assert_eq!(HkConfig::screening().finer(4), HkConfig::default());
    }
}
