//! Entropy and mutual information on finite alphabets, in bits.

use serde::{Deserialize, Serialize};

use crate::channel::{CziChannel, TwoLetterChannel};
use crate::error::{Error, Result};

const DOMAIN_SLACK: f64 = 1e-12;
const NEG_CLAMP: f64 = -1e-15;
const SUM_TOL: f64 = 1e-12;
/// Events rarer than this are skipped when weighting conditional terms.
const NEGLIGIBLE: f64 = 1e-300;

/// `-x log2 x`, with `0 log 0 = 0`.
#[inline]
pub(crate) fn xlogx_neg(x: f64) -> f64 {
    if x <= NEGLIGIBLE {
        0.0
    } else {
        -x * x.log2()
    }
}

/// Binary entropy without domain checks; arguments are clamped to `[0, 1]`.
#[inline]
pub fn hb(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    xlogx_neg(x) + xlogx_neg(1.0 - x)
}

/// `h_b(x) = -x log2 x - (1-x) log2 (1-x)`.
///
/// Arguments within `1e-12` outside `[0, 1]` are clamped; anything further
/// out is a domain error.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&x) {
        return Err(Error::Domain {
            what: "binary_entropy",
            value: x,
        });
    }
    Ok(hb(x))
}

/// Shannon entropy of raw weights, skipping zeros.
#[inline]
pub fn entropy_of(p: &[f64]) -> f64 {
    p.iter().map(|&x| xlogx_neg(x)).sum()
}

pub fn entropy(p: &ProbVector) -> f64 {
    entropy_of(p.as_slice())
}

/// A probability vector: entries are non-negative and sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Validates `p`. Entries in `[-1e-15, 0)` are clamped to zero; the sum
    /// must be within `1e-12` of one.
    pub fn new(mut p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::ProbVector("empty".into()));
        }
        for (i, x) in p.iter_mut().enumerate() {
            if !x.is_finite() || *x < NEG_CLAMP {
                return Err(Error::ProbVector(format!("entry {i} = {x}")));
            }
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::ProbVector(format!("sum = {sum}")));
        }
        Ok(ProbVector(p))
    }

    /// `(x, 1 - x)`.
    pub fn binary(x: f64) -> Result<Self> {
        Self::new(vec![x, 1.0 - x])
    }

    pub fn uniform(n: usize) -> Self {
        ProbVector(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ProbVector::new(v)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Self {
        p.0
    }
}

impl std::ops::Index<usize> for ProbVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Single-letter information terms under independent inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateTerms {
    /// `I(X1; Y1)`
    pub i_x1_y1: f64,
    /// `I(X2; Y1 | X1)`
    pub i_x2_y1_given_x1: f64,
    /// `I(X1, X2; Y1)`
    pub i_joint: f64,
    /// `H(X2)`
    pub h_x2: f64,
}

/// Information terms for `P(X1 = 0) = p`, `P(X2 = 0) = q`, `X1` independent
/// of `X2`.
pub fn rate_terms(ch: &CziChannel, p: f64, q: f64) -> RateTerms {
    let px1 = [p, 1.0 - p];
    let px2 = [q, 1.0 - q];
    let mut h_out_given_both = 0.0;
    let mut h_out_given_x1 = 0.0;
    let mut py0 = 0.0;
    for (x1, &w1) in px1.iter().enumerate() {
        // P(Y1 = 0 | X1 = x1)
        let row = px2[0] * ch.p_y0(x1, 0) + px2[1] * ch.p_y0(x1, 1);
        py0 += w1 * row;
        h_out_given_x1 += w1 * hb(row);
        for (x2, &w2) in px2.iter().enumerate() {
            h_out_given_both += w1 * w2 * hb(ch.p_y0(x1, x2));
        }
    }
    let h_out = hb(py0);
    RateTerms {
        i_x1_y1: (h_out - h_out_given_x1).max(0.0),
        i_x2_y1_given_x1: (h_out_given_x1 - h_out_given_both).max(0.0),
        i_joint: (h_out - h_out_given_both).max(0.0),
        h_x2: hb(q),
    }
}

/// `(I(X1-pair; Y1-pair), H(X2-pair))` for independent pair laws, with the
/// `X2`-pair treated as noise at receiver 1. Neither term is normalized.
pub fn two_letter_rate_terms(ch2: &TwoLetterChannel, pi1: &[f64; 4], pi2: &[f64; 4]) -> (f64, f64) {
    (pair_mutual_information(ch2, pi1, pi2), entropy_of(pi2))
}

/// Effective 4x4 channel from the `X1`-pair to the `Y1`-pair once the
/// `X2`-pair is averaged out.
#[inline]
pub(crate) fn effective_channel(ch2: &TwoLetterChannel, pi2: &[f64; 4]) -> [[f64; 4]; 4] {
    let mut w = [[0.0; 4]; 4];
    for (x, row) in w.iter_mut().enumerate() {
        for (s, &ws) in pi2.iter().enumerate() {
            if ws == 0.0 {
                continue;
            }
            let law = ch2.law(x, s);
            for y in 0..4 {
                row[y] += ws * law[y];
            }
        }
    }
    w
}

#[inline]
pub(crate) fn channel_mutual_information(w: &[[f64; 4]; 4], pi1: &[f64; 4]) -> f64 {
    let mut out = [0.0; 4];
    let mut h_cond = 0.0;
    for (x, row) in w.iter().enumerate() {
        if pi1[x] <= NEGLIGIBLE {
            continue;
        }
        for y in 0..4 {
            out[y] += pi1[x] * row[y];
        }
        h_cond += pi1[x] * entropy_of(row);
    }
    (entropy_of(&out) - h_cond).max(0.0)
}

pub(crate) fn pair_mutual_information(ch2: &TwoLetterChannel, pi1: &[f64; 4], pi2: &[f64; 4]) -> f64 {
    channel_mutual_information(&effective_channel(ch2, pi2), pi1)
}

/// A joint pmf over a few small discrete variables, stored densely in
/// row-major order (last variable fastest).
#[derive(Debug, Clone)]
pub struct JointPmf {
    dims: Vec<usize>,
    p: Vec<f64>,
}

impl JointPmf {
    /// Builds the table by evaluating `prob` at every outcome.
    pub fn from_fn(dims: &[usize], mut prob: impl FnMut(&[usize]) -> f64) -> Self {
        let total: usize = dims.iter().product();
        let mut p = Vec::with_capacity(total);
        let mut idx = vec![0; dims.len()];
        for _ in 0..total {
            p.push(prob(&idx));
            for k in (0..dims.len()).rev() {
                idx[k] += 1;
                if idx[k] < dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        JointPmf {
            dims: dims.to_vec(),
            p,
        }
    }

    /// Joint entropy of the variables listed in `vars`.
    pub fn entropy_of(&self, vars: &[usize]) -> f64 {
        let sizes: Vec<usize> = vars.iter().map(|&v| self.dims[v]).collect();
        let mut marginal = vec![0.0; sizes.iter().product::<usize>().max(1)];
        let mut idx = vec![0; self.dims.len()];
        for &mass in &self.p {
            let mut flat = 0;
            for (&v, &size) in vars.iter().zip(&sizes) {
                flat = flat * size + idx[v];
            }
            marginal[flat] += mass;
            for k in (0..self.dims.len()).rev() {
                idx[k] += 1;
                if idx[k] < self.dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        entropy_of(&marginal)
    }

    /// `I(A; B | C)` via `H(A,C) + H(B,C) - H(A,B,C) - H(C)`.
    pub fn mutual_information(&self, a: &[usize], b: &[usize], c: &[usize]) -> f64 {
        let ac: Vec<usize> = a.iter().chain(c).copied().collect();
        let bc: Vec<usize> = b.iter().chain(c).copied().collect();
        let abc: Vec<usize> = a.iter().chain(b).chain(c).copied().collect();
        self.entropy_of(&ac) + self.entropy_of(&bc) - self.entropy_of(&abc) - self.entropy_of(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::product_channel;
    use approx::assert_abs_diff_eq;

    fn z_half() -> CziChannel {
        CziChannel::new([[1.0, 0.5], [1.0, 0.0]]).unwrap()
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // -0.25 log2 0.25 - 0.75 log2 0.75 = 0.5 + 0.311278...
        assert_abs_diff_eq!(binary_entropy(0.25).unwrap(), 0.811_278_124_459_132_8, epsilon = 1e-15);
        assert_eq!(binary_entropy(-1e-13).unwrap(), 0.0);
        assert!(binary_entropy(1.0 + 1e-9).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy(&ProbVector::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap()), 0.0);
        assert_eq!(entropy(&ProbVector::uniform(4)), 2.0);

        let q0 = 0.436_538_150;
        let p = ProbVector::new(vec![0.36 * q0, 0.64 * q0, 0.64 * q0, 1.0 - 1.64 * q0]).unwrap();
        let direct: f64 = p.as_slice().iter().map(|&x| -x * x.log2()).sum();
        assert_abs_diff_eq!(entropy(&p), direct, epsilon = 1e-15);
    }

    #[test]
    fn prob_vector_validation() {
        let p = ProbVector::new(vec![-1e-16, 1.0]).unwrap();
        assert_eq!(p[0], 0.0);
        assert!(ProbVector::new(vec![-1e-10, 1.0]).is_err());
        assert!(ProbVector::new(vec![0.5, 0.49]).is_err());
        assert!(ProbVector::new(vec![]).is_err());
        assert!(serde_json::from_str::<ProbVector>("[0.2, 0.2]").is_err());
    }

    #[test]
    fn rate_terms_uniform_noise() {
        let t = rate_terms(&CziChannel::uniform_noise(), 0.3, 0.8);
        assert_abs_diff_eq!(t.i_x1_y1, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.i_x2_y1_given_x1, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.i_joint, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.h_x2, hb(0.8));
    }

    #[test]
    fn rate_terms_constant_x1() {
        // X1 = 1 always: Y1 = X2 exactly.
        for q in [0.0, 0.1, 0.5, 0.77] {
            let t = rate_terms(&z_half(), 0.0, q);
            assert_abs_diff_eq!(t.i_x1_y1, 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(t.i_x2_y1_given_x1, hb(q), epsilon = 1e-15);
        }
    }

    #[test]
    fn rate_terms_against_joint_table() {
        let ch = CziChannel::new([[0.2, 0.7], [0.9, 0.05]]).unwrap();
        let (p, q) = (0.35, 0.6);
        let joint = JointPmf::from_fn(&[2, 2, 2], |i| {
            let px1 = if i[0] == 0 { p } else { 1.0 - p };
            let px2 = if i[1] == 0 { q } else { 1.0 - q };
            px1 * px2 * ch.law(i[0], i[1])[i[2]]
        });
        let t = rate_terms(&ch, p, q);
        assert_abs_diff_eq!(t.i_x1_y1, joint.mutual_information(&[0], &[2], &[]), epsilon = 1e-13);
        assert_abs_diff_eq!(
            t.i_x2_y1_given_x1,
            joint.mutual_information(&[1], &[2], &[0]),
            epsilon = 1e-13
        );
        assert_abs_diff_eq!(t.i_joint, joint.mutual_information(&[0, 1], &[2], &[]), epsilon = 1e-13);
    }

    #[test]
    fn two_letter_terms_tensorize() {
        let ch = CziChannel::new([[0.2, 0.7], [0.9, 0.05]]).unwrap();
        let (p, q) = (0.35, 0.6);
        let single = rate_terms(&ch, p, q);
        let prod = |a: f64| [a * a, a * (1.0 - a), (1.0 - a) * a, (1.0 - a) * (1.0 - a)];
        let (i2, h2) = two_letter_rate_terms(&product_channel(&ch), &prod(p), &prod(q));
        assert_abs_diff_eq!(i2, 2.0 * single.i_x1_y1, epsilon = 1e-12);
        assert_abs_diff_eq!(h2, 2.0 * single.h_x2, epsilon = 1e-12);
    }

    #[test]
    fn two_letter_terms_uniform_noise() {
        let pi2 = [0.1, 0.2, 0.3, 0.4];
        let (i2, h2) = two_letter_rate_terms(&CziChannel::uniform_noise().product(), &[0.25; 4], &pi2);
        assert_abs_diff_eq!(i2, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h2, entropy_of(&pi2));
    }
}
