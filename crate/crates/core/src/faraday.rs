//! Input–output reflection of a single photon off a one-sided low-Q cavity
//! holding a three-level atom, and the photon–atom phase rule it induces.
//!
//! All frequencies are angular (rad/s).

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{PhaseTable, C64};

/// ⁸⁷Rb D2 transition (780 nm), 2πc/λ. Often quoted in Hz, but the number is
/// an angular frequency.
pub const RB87_OMEGA_0: f64 = 2.42e15;
/// Fiber Fabry–Perot cavity field decay rate, 2π × 53 MHz.
pub const RB87_KAPPA: f64 = 2.0 * PI * 53.0e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// cavity field frequency
    pub omega_c: f64,
    /// photon frequency
    pub omega_p: f64,
    /// atomic transition frequency
    pub omega_0: f64,
    /// cavity damping rate
    pub kappa: f64,
    /// atomic decay rate
    pub gamma: f64,
    /// atom–field coupling
    pub lambda: f64,
}

impl CavityParams {
    /// Resonant atom, photon detuned by −κ/2, coupling κ/2, no atomic decay.
    /// This is the operating point giving φ = π and φ₀ = π/2.
    pub fn ideal(omega_c: f64, kappa: f64) -> Self {
        Self {
            omega_c,
            omega_p: omega_c - kappa / 2.0,
            omega_0: omega_c,
            kappa,
            gamma: 0.0,
            lambda: kappa / 2.0,
        }
    }

    /// Ideal operating point built on the ⁸⁷Rb fixture numbers.
    pub fn rb87_fixture() -> Self {
        Self::ideal(RB87_OMEGA_0, RB87_KAPPA)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega_c", self.omega_c),
            ("omega_p", self.omega_p),
            ("omega_0", self.omega_0),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("lambda", self.lambda),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite")));
            }
        }
        for (name, v) in &fields[..3] {
            if *v <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        if self.kappa <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "kappa must be > 0, got {}",
                self.kappa
            )));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        if self.lambda < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Reflection coefficient r(ω_p) of the atom-loaded cavity:
///
/// ```text
///        [i(ω_c−ω_p) − κ/2][i(ω_0−ω_p) + γ/2] + λ²
/// r  =  -------------------------------------------
///        [i(ω_c−ω_p) + κ/2][i(ω_0−ω_p) + γ/2] + λ²
/// ```
pub fn reflection_coefficient(p: &CavityParams) -> Result<C64> {
    p.validate()?;
    let cav = C64::new(0.0, p.omega_c - p.omega_p);
    let atom = C64::new(p.gamma / 2.0, p.omega_0 - p.omega_p);
    let g2 = p.lambda * p.lambda;
    let num = (cav - p.kappa / 2.0) * atom + g2;
    let den = (cav + p.kappa / 2.0) * atom + g2;
    if den.norm() == 0.0 {
        return Err(Error::SingularParameters);
    }
    let r = num / den;
    if !(r.re.is_finite() && r.im.is_finite()) {
        return Err(Error::SingularParameters);
    }
    Ok(r)
}

/// Empty-cavity reflection r₀(ω_p) = [i(ω_c−ω_p) − κ/2] / [i(ω_c−ω_p) + κ/2].
pub fn empty_cavity_coefficient(p: &CavityParams) -> Result<C64> {
    if !(p.kappa > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kappa must be > 0, got {}",
            p.kappa
        )));
    }
    let cav = C64::new(0.0, p.omega_c - p.omega_p);
    Ok((cav - p.kappa / 2.0) / (cav + p.kappa / 2.0))
}

/// Wraps into (−π, π]. Values within 1e-12 of −π land on π.
pub fn normalize_phase(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    if t <= -PI + 1e-12 {
        t = PI;
    }
    t.min(PI)
}

/// Reflection phases of the coupled (φ) and empty (φ₀) cavity. Moduli are
/// kept for diagnostics; the interaction always uses pure phases.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FaradayPhases {
    phi: f64,
    phi0: f64,
    r_modulus: f64,
    r0_modulus: f64,
}

impl FaradayPhases {
    pub fn new(phi: f64, phi0: f64) -> Result<Self> {
        Self::with_moduli(phi, phi0, 1.0, 1.0)
    }

    pub fn with_moduli(phi: f64, phi0: f64, r_modulus: f64, r0_modulus: f64) -> Result<Self> {
        if !(phi.is_finite() && phi0.is_finite()) {
            return Err(Error::InvalidParameter("phases must be finite".into()));
        }
        for (what, m) in [("r_modulus", r_modulus), ("r0_modulus", r0_modulus)] {
            if !(0.0..=1.0 + 1e-9).contains(&m) {
                return Err(Error::OutOfRange { what, value: m });
            }
        }
        Ok(Self {
            phi,
            phi0,
            r_modulus,
            r0_modulus,
        })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    pub fn r_modulus(&self) -> f64 {
        self.r_modulus
    }

    pub fn r0_modulus(&self) -> f64 {
        self.r0_modulus
    }

    /// Faraday rotation angle Θ⁺ = φ − φ₀.
    pub fn rotation(&self) -> f64 {
        self.phi - self.phi0
    }
}

pub fn phases_from_params(p: &CavityParams) -> Result<FaradayPhases> {
    let r = reflection_coefficient(p)?;
    let r0 = empty_cavity_coefficient(p)?;
    FaradayPhases::with_moduli(
        normalize_phase(r.arg()),
        normalize_phase(r0.arg()),
        r.norm(),
        r0.norm(),
    )
}

/// φ = π, φ₀ = π/2.
pub fn ideal_phases() -> FaradayPhases {
    FaradayPhases {
        phi: PI,
        phi0: FRAC_PI_2,
        r_modulus: 1.0,
        r0_modulus: 1.0,
    }
}

/// Ideal phases with the rotation angle off by `sigma`: φ = π + σ, φ₀ = π/2.
pub fn perturbed_phases(sigma: f64) -> Result<FaradayPhases> {
    if !sigma.is_finite() || sigma.abs() >= FRAC_PI_2 {
        return Err(Error::OutOfRange {
            what: "sigma",
            value: sigma,
        });
    }
    Ok(FaradayPhases {
        phi: PI + sigma,
        ..ideal_phases()
    })
}

/// Diagonal photon–atom phase table over targets `(photon, atom)`; pattern
/// bit 0 is the photon (R=0, L=1), bit 1 the atom (g_L=0, g_R=1).
///
/// A photon whose polarization couples to the occupied ground state
/// (L with g_L, R with g_R) picks up e^{iφ}; otherwise it sees the empty
/// cavity and picks up e^{iφ₀}.
pub fn interaction_table(ph: &FaradayPhases) -> PhaseTable {
    let coupled = C64::from_polar(1.0, ph.phi);
    let empty = C64::from_polar(1.0, ph.phi0);
    // (R,g_L), (L,g_L), (R,g_R), (L,g_R)
    PhaseTable::new(vec![empty, coupled, coupled, empty])
        .expect("unit-modulus phases always form a valid table")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn angular_distance(a: f64, b: f64) -> f64 {
        normalize_phase(a - b).abs()
    }

    fn ideal_kappa(kappa: f64) -> CavityParams {
        CavityParams::ideal(10.0 * kappa, kappa)
    }

    #[test]
    fn ideal_condition_gives_minus_one() {
        let r = reflection_coefficient(&ideal_kappa(1.0)).unwrap();
        assert!((r - C64::new(-1.0, 0.0)).norm() < 1e-12);
        let r0 = empty_cavity_coefficient(&ideal_kappa(1.0)).unwrap();
        assert!((r0 - C64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn empty_cavity_on_resonance() {
        let p = CavityParams {
            omega_p: 5.0,
            ..CavityParams::ideal(5.0, 2.0)
        };
        let r0 = empty_cavity_coefficient(&p).unwrap();
        assert!((r0 - C64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn decoupled_atom_matches_empty_cavity() {
        let p = CavityParams {
            lambda: 0.0,
            gamma: 0.3,
            ..ideal_kappa(2.0)
        };
        let r = reflection_coefficient(&p).unwrap();
        let r0 = empty_cavity_coefficient(&p).unwrap();
        assert!((r - r0).norm() < 1e-12);
        let ph = phases_from_params(&p).unwrap();
        assert!(ph.rotation().abs() < 1e-12);
    }

    #[test]
    fn small_coupling_limit() {
        let kappa = 3.0;
        let p = CavityParams {
            lambda: 1e-6 * kappa,
            gamma: 0.1,
            ..ideal_kappa(kappa)
        };
        let diff =
            (reflection_coefficient(&p).unwrap() - empty_cavity_coefficient(&p).unwrap()).norm();
        assert!(diff < 1e-4, "{diff}");
    }

    #[test]
    fn lossless_reflection_has_unit_modulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let kappa = rng.random_range(0.1..10.0);
            let p = CavityParams {
                omega_c: rng.random_range(50.0..60.0),
                omega_p: rng.random_range(50.0..60.0),
                omega_0: rng.random_range(50.0..60.0),
                kappa,
                gamma: 0.0,
                lambda: rng.random_range(0.0..5.0),
            };
            // direct modulus from the numerator/denominator
            let r = reflection_coefficient(&p).unwrap();
            assert!((r.norm() - 1.0).abs() < 1e-12);
            assert!((empty_cavity_coefficient(&p).unwrap().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ideal_phases_from_params() {
        for kappa in [1.0, 2.0 * PI * 53.0e6] {
            let ph = phases_from_params(&ideal_kappa(kappa)).unwrap();
            assert!((ph.phi() - PI).abs() < 1e-9, "{}", ph.phi());
            assert!((ph.phi0() - FRAC_PI_2).abs() < 1e-9);
        }
    }

    #[test]
    fn rb87_fixture_is_finite() {
        let ph = phases_from_params(&CavityParams::rb87_fixture()).unwrap();
        assert!(ph.phi().is_finite() && ph.phi0().is_finite());
        // ω_c − ω_p loses ~1e-9 relative precision at optical frequencies,
        // which can push φ to just above −π
        assert!(angular_distance(ph.phi(), PI) < 1e-6, "{}", ph.phi());
        assert!(angular_distance(ph.phi0(), FRAC_PI_2) < 1e-6);
    }

    #[test]
    fn invalid_params() {
        let p = CavityParams {
            kappa: 0.0,
            ..ideal_kappa(1.0)
        };
        assert!(reflection_coefficient(&p).is_err());
        assert!(empty_cavity_coefficient(&p).is_err());
        let p = CavityParams {
            gamma: -1.0,
            ..ideal_kappa(1.0)
        };
        assert!(phases_from_params(&p).is_err());
        let p = CavityParams {
            omega_0: 0.0,
            ..ideal_kappa(1.0)
        };
        assert!(phases_from_params(&p).is_err());
    }

    #[test]
    fn phase_normalization() {
        assert_eq!(normalize_phase(-PI), PI);
        assert_eq!(normalize_phase(PI), PI);
        assert!((normalize_phase(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-15);
        assert!((normalize_phase(0.25) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn ideal_and_perturbed() {
        let ph = ideal_phases();
        assert_eq!(ph.phi(), PI);
        assert_eq!(ph.phi0(), FRAC_PI_2);
        assert_eq!(ph.rotation(), FRAC_PI_2);
        assert_eq!(perturbed_phases(0.0).unwrap(), ph);
        assert!((perturbed_phases(0.1).unwrap().rotation() - (FRAC_PI_2 + 0.1)).abs() < 1e-15);
        assert!(perturbed_phases(FRAC_PI_2).is_err());
    }

    #[test]
    fn ideal_table_matches_rules() {
        let t = interaction_table(&ideal_phases());
        let i = C64::new(0.0, 1.0);
        // pattern = photon | atom << 1
        assert!((t.get(0b01) - (-1.0)).norm() < 1e-15); // L g_L
        assert!((t.get(0b00) - i).norm() < 1e-15); // R g_L
        assert!((t.get(0b11) - i).norm() < 1e-15); // L g_R
        assert!((t.get(0b10) - (-1.0)).norm() < 1e-15); // R g_R
    }

    #[test]
    fn equal_phases_give_global_phase() {
        let ph = FaradayPhases::new(0.7, 0.7).unwrap();
        let t = interaction_table(&ph);
        assert!(t.entries().iter().all(|e| (e - t.get(0)).norm() < 1e-15));
    }
}
