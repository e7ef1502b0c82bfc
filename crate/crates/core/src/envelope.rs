//! Upper concave envelope of a function on `[0, 1]`.
//!
//! The function is sampled on a uniform grid (endpoints included) and the
//! upper convex hull of the sampled graph is taken with a monotone chain.
//! Hull vertices that end a chord are then refined: each pass inserts two
//! samples at half the local spacing around every interior chord endpoint and
//! rebuilds the hull, so tangency points are located to within
//! `resolution / 2^refine_passes`. Endpoints are refined on their inner side,
//! and an endpoint still ending a chord afterwards gets a geometric sweep of
//! samples toward it, which catches maxima squeezed against an infinite
//! slope at 0 or 1.
//!
//! Segments between samples that are adjacent on the grid are "touching":
//! there the envelope is evaluated as `max(f(x), chord)`, which is exact
//! wherever `f` is locally concave. Segments that skip samples are chords
//! and are evaluated by linear interpolation. Either way the numeric envelope
//! never exceeds the true one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Halvings of the end cell sampled when an endpoint ends a chord.
const ENDPOINT_SWEEP: i32 = 52;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeConfig {
    pub n_grid: usize,
    pub refine_passes: usize,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        EnvelopeConfig {
            n_grid: 16385,
            refine_passes: 6,
        }
    }
}

/// Two-point mixture `w * x_lo + (1 - w) * x_hi` realizing an envelope value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureSupport {
    pub x_lo: f64,
    pub x_hi: f64,
    /// Weight on `x_lo`.
    pub w: f64,
}

impl MixtureSupport {
    pub fn degenerate(x: f64) -> Self {
        MixtureSupport { x_lo: x, x_hi: x, w: 1.0 }
    }

    pub fn is_degenerate(&self) -> bool {
        self.x_lo == self.x_hi || self.w == 1.0 || self.w == 0.0
    }

    /// Mean of the mixture.
    pub fn mean(&self) -> f64 {
        self.w * self.x_lo + (1.0 - self.w) * self.x_hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// `chord[i]` is set when the segment `xs[i]..xs[i+1]` skips samples.
    chord: Vec<bool>,
    resolution: f64,
    refine_passes: usize,
}

/// Indices of the upper hull of `pts` (sorted by abscissa). Collinear
/// interior points are dropped, so only extreme points survive.
pub fn upper_hull(pts: &[(f64, f64)]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(64);
    for (i, &(x, y)) in pts.iter().enumerate() {
        while hull.len() >= 2 {
            let (ox, oy) = pts[hull[hull.len() - 2]];
            let (ax, ay) = pts[hull[hull.len() - 1]];
            // a is on or below the segment o -> (x, y)
            if (ax - ox) * (y - oy) - (ay - oy) * (x - ox) >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

fn sample(f: &impl Fn(f64) -> f64, x: f64) -> Result<(f64, f64)> {
    let y = f(x);
    if y.is_finite() {
        Ok((x, y))
    } else {
        Err(Error::NonFinite { x, value: y })
    }
}

/// Upper concave envelope of `f` over `[0, 1]`.
pub fn upper_concave_envelope(f: impl Fn(f64) -> f64, cfg: EnvelopeConfig) -> Result<Envelope> {
    let n = cfg.n_grid;
    if n < 3 {
        return Err(Error::GridTooSmall(n));
    }
    let ys = uniform_grid(n).map(&f).collect::<Vec<_>>();
    Envelope::from_uniform_samples(&ys, f, cfg.refine_passes)
}

/// The abscissae `i / (n - 1)`, with the last one exactly `1.0`.
pub fn uniform_grid(n: usize) -> impl Iterator<Item = f64> + Clone {
    let step = 1.0 / (n - 1) as f64;
    (0..n).map(move |i| if i == n - 1 { 1.0 } else { i as f64 * step })
}

impl Envelope {
    /// Builds the envelope from `ys[i] = f(i / (n - 1))`, calling `f` only
    /// for refinement samples.
    pub fn from_uniform_samples(ys: &[f64], f: impl Fn(f64) -> f64, refine_passes: usize) -> Result<Envelope> {
        let n = ys.len();
        if n < 3 {
            return Err(Error::GridTooSmall(n));
        }
        let mut pts = Vec::with_capacity(n + 4 * refine_passes);
        for (x, &y) in uniform_grid(n).zip(ys) {
            if !y.is_finite() {
                return Err(Error::NonFinite { x, value: y });
            }
            pts.push((x, y));
        }
        let mut hull = upper_hull(&pts);

        for _ in 0..refine_passes {
            let mut fresh = Vec::new();
            let last = pts.len() - 1;
            for (k, &v) in hull.iter().enumerate() {
                let left_chord = k > 0 && v - hull[k - 1] > 1;
                let right_chord = k + 1 < hull.len() && hull[k + 1] - v > 1;
                if !(left_chord || right_chord) {
                    continue;
                }
                let x = pts[v].0;
                // endpoints are refined on their inner side only
                let left = (v > 0).then(|| x - pts[v - 1].0);
                let right = (v < last).then(|| pts[v + 1].0 - x);
                let s = left.into_iter().chain(right).fold(f64::INFINITY, f64::min);
                if v > 0 {
                    fresh.push(sample(&f, x - 0.5 * s)?);
                }
                if v < last {
                    fresh.push(sample(&f, x + 0.5 * s)?);
                }
            }
            if fresh.is_empty() {
                break;
            }
            fresh.sort_by(|a, b| a.0.total_cmp(&b.0));
            pts = merge_sorted(pts, fresh);
            hull = upper_hull(&pts);
        }

        // An endpoint that still ends a chord may hide a bump closer to it
        // than the refinement reached; sweep geometrically toward it.
        let mut fresh = Vec::new();
        let h = hull.len();
        if hull[1] > 1 {
            let s = pts[1].0 - pts[0].0;
            for j in 1..=ENDPOINT_SWEEP {
                fresh.push(sample(&f, s * f64::powi(0.5, j))?);
            }
        }
        let last = pts.len() - 1;
        if last - hull[h - 2] > 1 {
            let s = pts[last].0 - pts[last - 1].0;
            for j in (1..=ENDPOINT_SWEEP).rev() {
                let x = 1.0 - s * f64::powi(0.5, j);
                if x < 1.0 {
                    fresh.push(sample(&f, x)?);
                }
            }
        }
        if !fresh.is_empty() {
            fresh.sort_by(|a, b| a.0.total_cmp(&b.0));
            fresh.dedup_by(|a, b| a.0 == b.0);
            pts = merge_sorted(pts, fresh);
            hull = upper_hull(&pts);
        }

        let xs: Vec<f64> = hull.iter().map(|&i| pts[i].0).collect();
        let ys: Vec<f64> = hull.iter().map(|&i| pts[i].1).collect();
        let chord = hull.windows(2).map(|w| w[1] - w[0] > 1).collect();
        Ok(Envelope {
            xs,
            ys,
            chord,
            resolution: 1.0 / (n - 1) as f64,
            refine_passes,
        })
    }

    /// Envelope values at the uniform grid points the envelope was sampled
    /// on, given those samples. Runs in one sweep without calling `f`.
    pub fn values_on_grid(&self, samples: &[f64]) -> Vec<f64> {
        let mut seg = 0;
        uniform_grid(samples.len())
            .zip(samples)
            .map(|(x, &y)| {
                while seg + 2 < self.xs.len() && self.xs[seg + 1] <= x {
                    seg += 1;
                }
                let line = self.chord_value(seg, x);
                if self.chord[seg] {
                    line
                } else {
                    line.max(y)
                }
            })
            .collect()
    }
}

fn merge_sorted(a: Vec<(f64, f64)>, b: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j == b.len() || (i < a.len() && a[i].0 <= b[j].0);
        let p = if take_a {
            i += 1;
            a[i - 1]
        } else {
            j += 1;
            b[j - 1]
        };
        // duplicate abscissae carry identical values
        if out.last().is_none_or(|last: &(f64, f64)| last.0 != p.0) {
            out.push(p);
        }
    }
    out
}

impl Envelope {
    pub fn breakpoints(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    /// Uniform grid step used for the initial sampling.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn refine_passes(&self) -> usize {
        self.refine_passes
    }

    /// Spacing to which chord endpoints are resolved.
    pub fn tangency_resolution(&self) -> f64 {
        self.resolution / f64::powi(2.0, self.refine_passes as i32)
    }

    /// `(lo, hi)` abscissae of every chord segment.
    pub fn chords(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.chord
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(|(i, _)| (self.xs[i], self.xs[i + 1]))
    }

    fn segment(&self, x: f64) -> usize {
        let k = self.xs.partition_point(|&b| b <= x);
        k.clamp(1, self.xs.len() - 1) - 1
    }

    fn chord_value(&self, i: usize, x: f64) -> f64 {
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let t = (x - x0) / (x1 - x0);
        self.ys[i] + t * (self.ys[i + 1] - self.ys[i])
    }

    /// Piecewise-linear interpolation of the breakpoints.
    pub fn interpolate(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        self.chord_value(self.segment(x), x)
    }

    /// Envelope value at `x`; `f` must be the function the envelope was
    /// built from.
    pub fn eval(&self, f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let i = self.segment(x);
        let line = self.chord_value(i, x);
        if self.chord[i] {
            line
        } else {
            line.max(f(x))
        }
    }

    /// The (at most two point) mixture of abscissae whose `f`-values average
    /// to the envelope at `x`.
    pub fn support(&self, f: impl Fn(f64) -> f64, x: f64) -> MixtureSupport {
        let x = x.clamp(0.0, 1.0);
        let i = self.segment(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        if x == x0 || x == x1 {
            return MixtureSupport::degenerate(x);
        }
        if !self.chord[i] && f(x) >= self.chord_value(i, x) {
            return MixtureSupport::degenerate(x);
        }
        MixtureSupport {
            x_lo: x0,
            x_hi: x1,
            w: (x1 - x) / (x1 - x0),
        }
    }
}

/// Free-function form of [`Envelope::support`].
pub fn envelope_support(env: &Envelope, f: impl Fn(f64) -> f64, x: f64) -> MixtureSupport {
    env.support(f, x)
}
