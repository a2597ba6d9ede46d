//! Monte Carlo estimation of the post-selection probabilities.
//!
//! Every trial draws from its own ChaCha8 stream: the generator is seeded
//! with `seed_from_u64(master_seed)` and switched to stream number
//! `trial_index`. A report therefore depends only on the config, not on how
//! trials are spread over threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::faraday::FaradayPhases;
use crate::imperfect::{recover_concurrence_with, ImperfectionParams, LeakModel};
use crate::protocol::{stage_one_interaction, stage_two_interaction, TwoPhotonState};
use crate::qstate::{plus_minus_basis, Label, StateVector};

pub const DEFAULT_TRIALS: u64 = 100_000;
pub const CONFIDENCE: f64 = 0.95;

#[derive(Clone, Debug, PartialEq)]
pub struct TrialConfig {
    pub n_trials: u64,
    pub master_seed: u64,
    pub state: TwoPhotonState,
    pub phases: FaradayPhases,
    pub imperfections: ImperfectionParams,
    pub leak_model: LeakModel,
}

impl TrialConfig {
    pub fn new(
        n_trials: u64,
        master_seed: u64,
        state: TwoPhotonState,
        phases: FaradayPhases,
    ) -> Self {
        Self {
            n_trials,
            master_seed,
            state,
            phases,
            imperfections: ImperfectionParams::IDEAL,
            leak_model: LeakModel::default(),
        }
    }

    pub fn with_imperfections(mut self, imp: ImperfectionParams) -> Self {
        self.imperfections = imp;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialOutcome {
    pub stage1_pass: bool,
    pub stage2_pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub trials: u64,
    pub stage1_successes: u64,
    pub stage2_successes: u64,
    pub p1_hat: f64,
    /// stage-two frequency conditioned on stage-one success
    pub p2_hat: f64,
    pub p_total_hat: f64,
    pub c_hat: f64,
    pub c_low: f64,
    pub c_high: f64,
    pub corrected_c_hat: f64,
    pub corrected_clamped: bool,
}

/// Stream for one trial.
pub fn trial_rng(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

/// The deterministic part of a trial, computed once and reused.
#[derive(Clone, Debug)]
pub struct TrialPlan {
    after_stage_one: StateVector,
    phases: FaradayPhases,
    eta_a: f64,
}

impl TrialPlan {
    pub fn new(
        state: &TwoPhotonState,
        phases: &FaradayPhases,
        imp: &ImperfectionParams,
    ) -> Result<Self> {
        Ok(Self {
            after_stage_one: stage_one_interaction(state, phases)?,
            phases: *phases,
            eta_a: imp.eta_a,
        })
    }

    /// One detection: Born-rule outcome in the ± basis, then a separate
    /// efficiency draw. Passes only if the atom is found in |+⟩ and the
    /// detector fires.
    fn detect<R: Rng + ?Sized>(
        &self,
        state: &StateVector,
        atom: Label,
        rng: &mut R,
    ) -> Result<Option<StateVector>> {
        let (outcome, collapsed) = state.born_sample(atom, &plus_minus_basis(), rng)?;
        if outcome != 0 {
            return Ok(None);
        }
        let fired = rng.random::<f64>() < self.eta_a;
        Ok(fired.then_some(collapsed))
    }

    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TrialOutcome> {
        let fail = TrialOutcome {
            stage1_pass: false,
            stage2_pass: false,
        };
        let Some(s) = self.detect(&self.after_stage_one, Label::Atom1, rng)? else {
            return Ok(fail);
        };
        let Some(s) = self.detect(&s, Label::Atom2, rng)? else {
            return Ok(fail);
        };
        let s = stage_two_interaction(&s, &self.phases)?;
        let stage2_pass = self.detect(&s, Label::Atom3, rng)?.is_some();
        Ok(TrialOutcome {
            stage1_pass: true,
            stage2_pass,
        })
    }
}

pub fn run_trial<R: Rng + ?Sized>(
    state: &TwoPhotonState,
    phases: &FaradayPhases,
    imp: &ImperfectionParams,
    rng: &mut R,
) -> Result<TrialOutcome> {
    TrialPlan::new(state, phases, imp)?.run(rng)
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    assert!(
        trials >= 1 && successes <= trials,
        "need 0 <= successes <= trials, trials >= 1"
    );
    assert!(
        confidence > 0.0 && confidence < 1.0,
        "confidence must lie in (0, 1)"
    );
    let z = Normal::standard().inverse_cdf(1.0 - (1.0 - confidence) / 2.0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2n = z * z / n;
    let center = (p + z2n / 2.0) / (1.0 + z2n);
    let half = z / (1.0 + z2n) * (p * (1.0 - p) / n + z2n / (4.0 * n)).sqrt();
    let low = if successes == 0 {
        0.0
    } else {
        (center - half).clamp(0.0, p)
    };
    let high = if successes == trials {
        1.0
    } else {
        (center + half).clamp(p, 1.0)
    };
    (low, high)
}

/// Counts for trials `[0, n)`. Integer tallies make the reduction order-free.
fn tally(plan: &TrialPlan, config: &TrialConfig) -> Result<(u64, u64)> {
    (0..config.n_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(config.master_seed, i);
            plan.run(&mut rng)
                .map(|o| (u64::from(o.stage1_pass), u64::from(o.stage2_pass)))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))
}

pub fn estimate(config: &TrialConfig) -> Result<EstimateReport> {
    if config.n_trials == 0 {
        return Err(Error::InvalidParameter(
            "n_trials must be at least 1".into(),
        ));
    }
    let plan = TrialPlan::new(&config.state, &config.phases, &config.imperfections)?;
    let (s1, s2) = tally(&plan, config)?;
    let n = config.n_trials as f64;
    let p1_hat = s1 as f64 / n;
    let p2_hat = if s1 == 0 { 0.0 } else { s2 as f64 / s1 as f64 };
    let p_total_hat = s2 as f64 / n;
    let (low, high) = wilson_interval(s2, config.n_trials, CONFIDENCE);
    let corrected =
        recover_concurrence_with(p1_hat, p2_hat, &config.imperfections, config.leak_model)?;
    Ok(EstimateReport {
        trials: config.n_trials,
        stage1_successes: s1,
        stage2_successes: s2,
        p1_hat,
        p2_hat,
        p_total_hat,
        c_hat: 2.0 * p_total_hat.sqrt(),
        c_low: 2.0 * low.sqrt(),
        c_high: 2.0 * high.sqrt(),
        corrected_c_hat: corrected.concurrence,
        corrected_clamped: corrected.clamped,
    })
}
