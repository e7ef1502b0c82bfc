//! Seeded random search for channels whose two-letter rate beats the
//! single-letter HK maximum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::CziChannel;
use crate::error::{Error, Result};
use crate::hk::{hk_max, HkConfig, WeightedProblem};
use crate::twoletter::{two_letter_max, GapReport, TwoLetterConfig, DEFAULT_GAP_THRESHOLD};

pub const DEFAULT_LAMBDAS: [f64; 10] = [2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 7.0, 10.0, 15.0, 100.0];

/// Grid refinement factor used to re-verify a flagged candidate.
pub const REVERIFY_FACTOR: usize = 4;

/// A channel evaluated at one weight regardless of `SearchConfig::lambdas`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub channel: CziChannel,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub lambdas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub threshold: f64,
    pub two_letter: TwoLetterConfig,
    pub hk: HkConfig,
    /// Evaluated before the random trials.
    pub forced: Vec<Candidate>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            lambdas: DEFAULT_LAMBDAS.to_vec(),
            trials: 1,
            seed: 0,
            threshold: DEFAULT_GAP_THRESHOLD,
            two_letter: TwoLetterConfig::default(),
            hk: HkConfig::screening(),
            forced: Vec::new(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 && self.forced.is_empty() {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::Config("threshold must be positive".into()));
        }
        if self.trials > 0 && self.lambdas.is_empty() {
            return Err(Error::Config("at least one lambda is required".into()));
        }
        let lambdas = self.lambdas.iter().copied();
        for l in lambdas.chain(self.forced.iter().map(|c| c.lambda)) {
            if !(l >= 1.0 && l.is_finite()) {
                return Err(Error::Domain { what: "lambda (must be >= 1)", value: l });
            }
        }
        Ok(())
    }

    /// Every (channel, lambda) pair the search evaluates, in order.
    pub fn candidates(&self) -> Vec<Candidate> {
        let mut out = self.forced.clone();
        for trial in 0..self.trials {
            let channel = random_channel(&mut trial_rng(self.seed, trial));
            out.extend(self.lambdas.iter().map(|&lambda| Candidate { channel, lambda }));
        }
        out
    }
}

pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Four independent uniform entries.
pub fn random_channel<R: Rng + ?Sized>(rng: &mut R) -> CziChannel {
    let mut m = [[0.0; 2]; 2];
    for row in &mut m {
        for e in row {
            *e = rng.gen::<f64>();
        }
    }
    CziChannel::new(m).expect("uniform draws lie in [0, 1)")
}

fn evaluate(c: &Candidate, cfg: &SearchConfig) -> Result<GapReport> {
    let prob = WeightedProblem::new(c.channel, c.lambda)?;
    let two = two_letter_max(&c.channel, c.lambda, &cfg.two_letter)?;
    let hk = hk_max(&prob, &cfg.hk)?;
    let report = GapReport::from_results(&c.channel, c.lambda, &hk, &two, cfg.threshold, false);
    if !report.flagged {
        return Ok(report);
    }
    let fine = hk_max(&prob, &cfg.hk.finer(REVERIFY_FACTOR))?;
    let mut checked = GapReport::from_results(&c.channel, c.lambda, &fine, &two, cfg.threshold, true);
    checked.flagged = checked.gap > cfg.threshold / 2.0;
    Ok(checked)
}

/// One report per candidate, sorted by gap in descending order. Flagged
/// reports carry HK values recomputed on a grid `REVERIFY_FACTOR` times
/// finer and stay flagged only if the gap there exceeds `threshold / 2`.
pub fn search_counterexamples(cfg: &SearchConfig) -> Result<Vec<GapReport>> {
    cfg.validate()?;
    let mut reports = cfg
        .candidates()
        .par_iter()
        .map(|c| evaluate(c, cfg))
        .collect::<Result<Vec<_>>>()?;
    reports.sort_by(|a, b| b.gap.total_cmp(&a.gap));
    Ok(reports)
}
