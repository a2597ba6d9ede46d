//! Finite atom-detection efficiency and rotation-angle error: forward models
//! and their inversion back to the ideal concurrence.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::faraday::perturbed_phases;
use crate::protocol::{closed_form_outcome, run_analytic, TwoPhotonState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImperfectionParams {
    /// atom-state detection efficiency
    pub eta_a: f64,
    /// rotation-angle error, radians
    pub sigma: f64,
}

impl Default for ImperfectionParams {
    fn default() -> Self {
        Self::IDEAL
    }
}

impl ImperfectionParams {
    pub const IDEAL: Self = Self {
        eta_a: 1.0,
        sigma: 0.0,
    };

    pub fn new(eta_a: f64, sigma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta_a) {
            return Err(Error::OutOfRange {
                what: "eta_a",
                value: eta_a,
            });
        }
        if !sigma.is_finite() {
            return Err(Error::OutOfRange {
                what: "sigma",
                value: sigma,
            });
        }
        if sigma.abs() >= FRAC_PI_4 {
            log::warn!(
                "|sigma| = {} is at or beyond pi/4; leak correction is poorly conditioned",
                sigma.abs()
            );
        }
        Ok(Self { eta_a, sigma })
    }
}

/// How the leak probability enters the stage-one (two-atom) correction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeakModel {
    /// P'₁ = P₁ + (1 − P₁)·P_e, the same form as the single-atom stage.
    #[default]
    Single,
    /// Both stage-one atoms must leak: P'₁ = P₁ + (1 − P₁)·P_e².
    PerAtom,
}

impl LeakModel {
    pub fn stage_one_leak(self, sigma: f64) -> f64 {
        let pe = leak_probability(sigma);
        match self {
            LeakModel::Single => pe,
            LeakModel::PerAtom => pe * pe,
        }
    }
}

/// η³·P_total: three atom detections must all register.
pub fn detection_scaled_ptotal(p_total: f64, eta_a: f64) -> f64 {
    eta_a.powi(3) * p_total
}

/// Probability that an even-parity pair leaves the atom in |+⟩ when the
/// rotation angle is off by σ: |1 − e^{2iσ}|²/4 = sin²σ.
pub fn leak_probability(sigma: f64) -> f64 {
    let s = sigma.sin();
    s * s
}

pub fn degraded_parity_probability(p: f64, sigma: f64) -> f64 {
    degrade_with_leak(p, leak_probability(sigma))
}

fn degrade_with_leak(p: f64, leak: f64) -> f64 {
    (p + (1.0 - p) * leak).clamp(0.0, 1.0)
}

pub fn invert_parity_probability(p_prime: f64, sigma: f64) -> Result<f64> {
    Ok(invert_with_leak(p_prime, leak_probability(sigma))?.0)
}

/// Returns the inverted probability and whether it had to be clamped.
fn invert_with_leak(p_prime: f64, leak: f64) -> Result<(f64, bool)> {
    if leak >= 1.0 - 1e-12 {
        return Err(Error::NonInvertible(format!(
            "leak probability {leak} leaves no signal"
        )));
    }
    if p_prime < leak - 1e-9 {
        return Err(Error::InconsistentObservation {
            observed: p_prime,
            leak,
        });
    }
    let raw = (p_prime - leak) / (1.0 - leak);
    let clamped = raw.clamp(0.0, 1.0);
    Ok((clamped, clamped != raw))
}

/// Concurrence and the corrected stage probabilities behind it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RecoveredConcurrence {
    pub concurrence: f64,
    pub p1: f64,
    pub p2: f64,
    pub p_total: f64,
    /// set when any intermediate probability was pulled back into [0, 1]
    pub clamped: bool,
}

/// Recovers C from observed stage probabilities with the default leak model.
///
/// `p1_obs` is the stage-one pass frequency (two detections), `p2_obs` the
/// stage-two pass frequency conditioned on stage one (one detection).
pub fn recover_concurrence(
    p1_obs: f64,
    p2_obs: f64,
    params: &ImperfectionParams,
) -> Result<RecoveredConcurrence> {
    recover_concurrence_with(p1_obs, p2_obs, params, LeakModel::default())
}

pub fn recover_concurrence_with(
    p1_obs: f64,
    p2_obs: f64,
    params: &ImperfectionParams,
    model: LeakModel,
) -> Result<RecoveredConcurrence> {
    for (what, v) in [("p1_obs", p1_obs), ("p2_obs", p2_obs)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange { what, value: v });
        }
    }
    let eta = params.eta_a;
    if !(eta > 0.0) {
        return Err(Error::NonInvertible("detection efficiency is zero".into()));
    }
    // detection losses happen after the parity check, so they come off first
    let (p1_det, c1) = clamp_flag(p1_obs / (eta * eta));
    let (p2_det, c2) = clamp_flag(p2_obs / eta);
    let (p1, c3) = invert_with_leak(p1_det, model.stage_one_leak(params.sigma))?;
    let (p2, c4) = invert_with_leak(p2_det, leak_probability(params.sigma))?;
    let p_total = p1 * p2;
    let raw_c = 2.0 * p_total.sqrt();
    let concurrence = raw_c.clamp(0.0, 1.0);
    Ok(RecoveredConcurrence {
        concurrence,
        p1,
        p2,
        p_total,
        clamped: c1 || c2 || c3 || c4 || concurrence != raw_c,
    })
}

fn clamp_flag(p: f64) -> (f64, bool) {
    let c = p.clamp(0.0, 1.0);
    (c, c != p)
}

/// Exact simulation versus the leak model for one input state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelComparison {
    pub sigma: f64,
    pub simulated_p1: f64,
    pub simulated_p2: f64,
    pub simulated_p_total: f64,
    pub model_p1: f64,
    pub model_p2: f64,
    pub model_p_total: f64,
}

impl ModelComparison {
    /// |simulated P'_total − model P'_total|
    pub fn deviation(&self) -> f64 {
        (self.simulated_p_total - self.model_p_total).abs()
    }
}

/// Runs the protocol at phases (π + σ, π/2) keeping every leaked branch and
/// sets it beside the leak-model prediction built from the ideal P₁, P₂.
pub fn compare_with_model(
    s: &TwoPhotonState,
    sigma: f64,
    model: LeakModel,
) -> Result<ModelComparison> {
    let sim = run_analytic(s, &perturbed_phases(sigma)?)?;
    let ideal = closed_form_outcome(s);
    let model_p1 = degrade_with_leak(ideal.p1, model.stage_one_leak(sigma));
    let model_p2 = degraded_parity_probability(ideal.p2, sigma);
    Ok(ModelComparison {
        sigma,
        simulated_p1: sim.p1,
        simulated_p2: sim.p2,
        simulated_p_total: sim.p_total,
        model_p1,
        model_p2,
        model_p_total: model_p1 * model_p2,
    })
}
