//! Closed-form analysis of the channel `[[1, 0.5], [1, 0]]` at
//! `lambda = 2`.
//!
//! With `p = P(X1 = 0)` and `q = P(X2 = 0)` the inner function of the HK
//! formula is
//!
//! ```text
//! f(p, q) = h(q) - 2p h((q+1)/2) - 2(1-p) h(q) + h(q + p(1-q)/2) + p(1-q)
//! ```
//!
//! For `p > 1/2` it is concave in `q`. For `p <= 1/2` it is convex then
//! concave and its envelope is the chord from `q = 0` to `q = 1 - 2p`,
//! followed by `f` itself. That gives the HK objective `F(p, q)` in closed
//! form, an upper bound on its maximum from a supporting hyperplane, and an
//! explicit two-letter point that beats the bound.

use serde::{Deserialize, Serialize};

use crate::channel::CziChannel;
use crate::envelope::{upper_concave_envelope, EnvelopeConfig};
use crate::error::{Error, Result};
use crate::infotheory::hb;
use crate::twoletter::{two_letter_objective, PairDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppendixConstants {
    pub p0: f64,
    pub q0: f64,
    pub channel: [[f64; 2]; 2],
    pub lambda: f64,
    /// Upper bound on the single-letter HK maximum.
    pub bound: f64,
    /// `2 R1 + R2` at the explicit two-letter point.
    pub two_letter_value: f64,
}

pub const CONSTANTS: AppendixConstants = AppendixConstants {
    p0: 0.507829413,
    q0: 0.436538150,
    channel: [[1.0, 0.5], [1.0, 0.0]],
    lambda: 2.0,
    bound: 1.107577,
    two_letter_value: 1.1080356,
};

pub fn channel() -> CziChannel {
    CziChannel::new(CONSTANTS.channel).expect("constant channel is valid")
}

pub fn f_closed(p: f64, q: f64) -> f64 {
    let (pb, qb) = (1.0 - p, 1.0 - q);
    hb(q) - 2.0 * p * hb((q + 1.0) / 2.0) - 2.0 * pb * hb(q) + hb(q + 0.5 * p * qb) + p * qb
}

/// `d^2 f / dq^2`; undefined at `q = 0` and `q = 1`.
pub fn f_q2_derivative(p: f64, q: f64) -> Result<f64> {
    if q <= 0.0 || q >= 1.0 {
        return Err(Error::Pole(q));
    }
    let qb = 1.0 - q;
    let lead = p / (q * qb * std::f64::consts::LN_2);
    Ok(lead * (1.0 - 3.0 * q - 2.0 * p * qb) / ((1.0 + q) * (2.0 * q + p * qb)))
}

/// Inflection point `(1 - 2p) / (3 - 2p)` of `f(p, .)`, for `p < 1/2`.
pub fn inflection(p: f64) -> f64 {
    (1.0 - 2.0 * p) / (3.0 - 2.0 * p)
}

/// Where the chord from `q = 0` touches `f(p, .)`: `1 - 2p`.
pub fn tangency(p: f64) -> f64 {
    1.0 - 2.0 * p
}

fn chord_slope(p: f64) -> f64 {
    let t = tangency(p);
    (f_closed(p, t) - f_closed(p, 0.0)) / t
}

/// Upper concave envelope of `f(p, .)` evaluated at `q`.
pub fn analytic_envelope(p: f64, q: f64) -> f64 {
    if q >= tangency(p).max(0.0) {
        f_closed(p, q)
    } else {
        chord_slope(p) * q + f_closed(p, 0.0)
    }
}

/// `I(X1, X2; Y1)` for this channel.
fn joint_information(p: f64, q: f64) -> f64 {
    let qb = 1.0 - q;
    hb(q + 0.5 * p * qb) - p * qb
}

/// HK objective with the envelope in closed form. The smooth branch is taken
/// for `q >= max(0, 1 - 2p)`.
pub fn big_f(p: f64, q: f64) -> f64 {
    joint_information(p, q) + analytic_envelope(p, q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneBound {
    /// `F(p0, q0) + |a| + |b|`
    pub value: f64,
    pub f_at_point: f64,
    /// `dF/dp` at `(p0, q0)`
    pub a: f64,
    /// `dF/dq` at `(p0, q0)`
    pub b: f64,
    /// The same partials with twice the step, as a consistency check.
    pub a_coarse: f64,
    pub b_coarse: f64,
    pub fd_step: f64,
}

fn partials(p: f64, q: f64, h: f64) -> (f64, f64) {
    let a = (big_f(p + h, q) - big_f(p - h, q)) / (2.0 * h);
    let b = (big_f(p, q + h) - big_f(p, q - h)) / (2.0 * h);
    (a, b)
}

/// `F(p0, q0) + |dF/dp| + |dF/dq|`, which bounds `F` on the unit square
/// whenever the supporting hyperplane at `(p0, q0)` dominates `F`.
/// Partials are central differences with step `fd_step`.
pub fn hyperplane_bound(fd_step: f64) -> Result<HyperplaneBound> {
    if !(fd_step > 0.0 && fd_step <= 1e-3) {
        return Err(Error::Domain {
            what: "fd_step (must lie in (0, 1e-3])",
            value: fd_step,
        });
    }
    let (p0, q0) = (CONSTANTS.p0, CONSTANTS.q0);
    let (a, b) = partials(p0, q0, fd_step);
    let (a_coarse, b_coarse) = partials(p0, q0, 2.0 * fd_step);
    let f_at_point = big_f(p0, q0);
    Ok(HyperplaneBound {
        value: f_at_point + a.abs() + b.abs(),
        f_at_point,
        a,
        b,
        a_coarse,
        b_coarse,
        fd_step,
    })
}

/// The repetition-coded `X1`-pair law and correlated `X2`-pair law of the
/// explicit two-letter point.
pub fn two_letter_point_distributions() -> (PairDistribution, PairDistribution) {
    let q0 = CONSTANTS.q0;
    let pi2 = PairDistribution::new([0.36 * q0, 0.64 * q0, 0.64 * q0, 1.0 - 1.64 * q0]).expect("valid pair law");
    (PairDistribution::repetition(CONSTANTS.p0), pi2)
}

/// `2 R1 + R2` with `R1 = I(X1-pair; Y1-pair) / 2`, `R2 = H(X2-pair) / 2`
/// at the explicit point.
pub fn appendix_two_letter_point() -> f64 {
    let (pi1, pi2) = two_letter_point_distributions();
    two_letter_objective(&channel().product(), CONSTANTS.lambda, &pi1, &pi2)
}

/// `max |analytic_envelope - numeric envelope|` over an `n_p x n_q` grid.
pub fn envelope_cross_check(n_p: usize, n_q: usize, cfg: EnvelopeConfig) -> Result<f64> {
    use rayon::prelude::*;
    let per_p = (0..n_p)
        .into_par_iter()
        .map(|i| {
            let p = i as f64 / (n_p - 1) as f64;
            let f = |q: f64| f_closed(p, q);
            let env = upper_concave_envelope(f, cfg)?;
            Ok((0..n_q)
                .map(|j| {
                    let q = j as f64 / (n_q - 1) as f64;
                    (env.eval(f, q) - analytic_envelope(p, q)).abs()
                })
                .fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_p.into_iter().fold(0.0, f64::max))
}

/// Outcome of every closed-form check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppendixReport {
    pub bound: HyperplaneBound,
    pub two_letter_point: f64,
    /// `two_letter_point - bound.value`
    pub margin: f64,
    pub envelope_max_abs_diff: f64,
    pub bound_ok: bool,
    pub point_ok: bool,
    pub chain_ok: bool,
    pub envelope_ok: bool,
}

impl AppendixReport {
    pub fn passed(&self) -> bool {
        self.bound_ok && self.point_ok && self.chain_ok && self.envelope_ok
    }
}

pub const BOUND_TOL: f64 = 1e-6;
pub const POINT_TOL: f64 = 5e-7;
pub const ENVELOPE_TOL: f64 = 1e-7;

/// Runs the bound, the explicit point and the envelope cross-check on an
/// `n_p x n_q` grid.
pub fn verify_appendix(fd_step: f64, n_p: usize, n_q: usize, cfg: EnvelopeConfig) -> Result<AppendixReport> {
    let bound = hyperplane_bound(fd_step)?;
    let point = appendix_two_letter_point();
    let envelope_max_abs_diff = envelope_cross_check(n_p, n_q, cfg)?;
    Ok(AppendixReport {
        bound,
        two_letter_point: point,
        margin: point - bound.value,
        envelope_max_abs_diff,
        bound_ok: bound.value <= CONSTANTS.bound + BOUND_TOL,
        point_ok: (point - CONSTANTS.two_letter_value).abs() <= POINT_TOL,
        chain_ok: point > bound.value,
        envelope_ok: envelope_max_abs_diff <= ENVELOPE_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn f_edge_values() {
        for q in [0.0, 0.1, 0.5, 0.9, 1.0] {
            assert_abs_diff_eq!(f_closed(0.0, q), 0.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(f_closed(1.0, 1.0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn second_derivative_sign_change() {
        assert_abs_diff_eq!(inflection(0.25), 0.2, epsilon = 1e-15);
        assert!(f_q2_derivative(0.25, 0.19).unwrap() > 0.0);
        assert!(f_q2_derivative(0.25, 0.21).unwrap() < 0.0);
        for k in 1..100 {
            let q = k as f64 / 100.0;
            assert!(f_q2_derivative(0.6, q).unwrap() < 0.0);
        }
        assert_eq!(f_q2_derivative(0.3, 0.0), Err(Error::Pole(0.0)));
        assert_eq!(f_q2_derivative(0.3, 1.0), Err(Error::Pole(1.0)));
    }

    #[test]
    fn analytic_envelope_cases() {
        assert_eq!(analytic_envelope(0.7, 0.2), f_closed(0.7, 0.2));
        let mid = 0.5 * (f_closed(0.3, 0.0) + f_closed(0.3, 0.4));
        assert_abs_diff_eq!(analytic_envelope(0.3, 0.2), mid, epsilon = 1e-15);
        assert_eq!(analytic_envelope(0.3, 0.6), f_closed(0.3, 0.6));
        // p = 1/2: empty chord
        assert_eq!(analytic_envelope(0.5, 0.0), f_closed(0.5, 0.0));
        assert_eq!(analytic_envelope(0.5, 0.3), f_closed(0.5, 0.3));
    }

    #[test]
    fn explicit_point_is_a_valid_law() {
        let (pi1, pi2) = two_letter_point_distributions();
        assert_abs_diff_eq!(pi2.probs()[3], 0.284_077_434, epsilon = 1e-9);
        assert_eq!(pi1.probs()[1], 0.0);
        assert_abs_diff_eq!(pi2.marginals().0, CONSTANTS.q0, epsilon = 1e-15);
    }

    #[test]
    fn chord_is_tangent_at_one_minus_two_p() {
        let h = 1e-6;
        for p in [0.1, 0.2, 0.3, 0.4, 0.49] {
            let t = tangency(p);
            let df = (f_closed(p, t + h) - f_closed(p, t - h)) / (2.0 * h);
            assert_abs_diff_eq!(df, chord_slope(p), epsilon = 1e-8);
        }
    }

    #[test]
    fn bound_and_point_values() {
        let b = hyperplane_bound(1e-6).unwrap();
        assert!(b.value <= CONSTANTS.bound + BOUND_TOL, "{b:?}");
        assert_abs_diff_eq!(b.a, b.a_coarse, epsilon = 1e-6);
        assert_abs_diff_eq!(b.b, b.b_coarse, epsilon = 1e-6);
        let point = appendix_two_letter_point();
        assert_abs_diff_eq!(point, CONSTANTS.two_letter_value, epsilon = POINT_TOL);
        assert!(point - b.value > 4e-4);
    }

    #[test]
    fn bound_rejects_bad_steps() {
        assert!(hyperplane_bound(0.0).is_err());
        assert!(hyperplane_bound(0.01).is_err());
        let b = hyperplane_bound(1e-6).unwrap();
        assert!(b.value >= b.f_at_point);
    }
}
