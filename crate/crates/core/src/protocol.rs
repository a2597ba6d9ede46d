//! Exact two-copy concurrence measurement: two parity checks with atom
//! post-selection, a Hadamard on Alice's photons, and a final parity check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::faraday::{interaction_table, FaradayPhases};
use crate::qstate::{
    hadamard, plus, Label, RegisterLayout, StateVector, C64, EMPTY_BRANCH_PROBABILITY,
};

const NORM_TOL: f64 = 1e-10;

/// α|RR⟩ + β|RL⟩ + γ|LR⟩ + δ|LL⟩, first letter = Alice's photon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPhotonState {
    pub alpha: C64,
    pub beta: C64,
    pub gamma: C64,
    pub delta: C64,
}

impl TwoPhotonState {
    pub fn new(alpha: C64, beta: C64, gamma: C64, delta: C64) -> Result<Self> {
        let s = Self {
            alpha,
            beta,
            gamma,
            delta,
        };
        if s.amplitudes()
            .iter()
            .any(|a| !(a.re.is_finite() && a.im.is_finite()))
        {
            return Err(Error::NonFinite);
        }
        let n = s.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr: n });
        }
        Ok(s)
    }

    /// Rescales to unit norm; fails only for the zero vector.
    pub fn normalized(alpha: C64, beta: C64, gamma: C64, delta: C64) -> Result<Self> {
        let raw = Self {
            alpha,
            beta,
            gamma,
            delta,
        };
        let n = raw.norm_sqr();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NotNormalized { norm_sqr: n });
        }
        let s = 1.0 / n.sqrt();
        Self::new(alpha * s, beta * s, gamma * s, delta * s)
    }

    pub fn from_real(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self> {
        Self::new(alpha.into(), beta.into(), gamma.into(), delta.into())
    }

    /// cos θ |RR⟩ + sin θ |LL⟩
    pub fn mixing_angle(theta: f64) -> Self {
        Self {
            alpha: theta.cos().into(),
            beta: 0.0.into(),
            gamma: 0.0.into(),
            delta: theta.sin().into(),
        }
    }

    /// (|RR⟩ + |LL⟩)/√2
    pub fn bell() -> Self {
        Self::mixing_angle(std::f64::consts::FRAC_PI_4)
    }

    /// [α, β, γ, δ], i.e. amplitudes indexed by `a_bit << 1 | b_bit`.
    pub fn amplitudes(&self) -> [C64; 4] {
        [self.alpha, self.beta, self.gamma, self.delta]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes().iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn with_global_phase(&self, theta: f64) -> Self {
        let p = C64::from_polar(1.0, theta);
        Self {
            alpha: self.alpha * p,
            beta: self.beta * p,
            gamma: self.gamma * p,
            delta: self.delta * p,
        }
    }

    /// The pair as a two-qubit register `[a, b]`.
    pub fn on_modes(&self, a: Label, b: Label) -> Result<StateVector> {
        let layout = RegisterLayout::new(&[a, b])?;
        let amps = self.amplitudes();
        // register index = a_bit | b_bit << 1
        let mut v = vec![C64::new(0.0, 0.0); 4];
        for a_bit in 0..2 {
            for b_bit in 0..2 {
                v[a_bit | (b_bit << 1)] = amps[(a_bit << 1) | b_bit];
            }
        }
        StateVector::from_amplitudes(layout, v)
    }
}

/// Probabilities and post-selected state of one protocol run.
#[derive(Clone, Debug, Serialize)]
pub struct ProtocolOutcome {
    pub p1: f64,
    pub p2: f64,
    pub p_total: f64,
    pub c_estimate: f64,
    /// `None` when post-selection leaves an empty branch.
    #[serde(skip)]
    pub final_state: Option<StateVector>,
}

/// Both copies of the pair plus three atoms in |+⟩, in the canonical layout.
pub fn prepare_joint(s: &TwoPhotonState) -> Result<StateVector> {
    let atoms = StateVector::qubit(Label::Atom1, plus())
        .tensor_product(&StateVector::qubit(Label::Atom2, plus()))?
        .tensor_product(&StateVector::qubit(Label::Atom3, plus()))?;
    s.on_modes(Label::A1, Label::B1)?
        .tensor_product(&s.on_modes(Label::A2, Label::B2)?)?
        .tensor_product(&atoms)?
        .reorder(&RegisterLayout::canonical())
}

/// Sends both photons of `pair` successively past the cavity holding `atom`.
pub fn parity_check(
    state: &StateVector,
    pair: (Label, Label),
    atom: Label,
    ph: &FaradayPhases,
) -> Result<StateVector> {
    let table = interaction_table(ph);
    state
        .apply_diagonal_phase(&[pair.0, atom], &table)?
        .apply_diagonal_phase(&[pair.1, atom], &table)
}

/// Alice's and Bob's stage-one checks on the prepared state.
pub fn stage_one_interaction(s: &TwoPhotonState, ph: &FaradayPhases) -> Result<StateVector> {
    let joint = prepare_joint(s)?;
    let alice = parity_check(&joint, (Label::A1, Label::A2), Label::Atom1, ph)?;
    parity_check(&alice, (Label::B1, Label::B2), Label::Atom2, ph)
}

/// Hadamard on Alice's photons then the check on atom 3.
pub fn stage_two_interaction(state: &StateVector, ph: &FaradayPhases) -> Result<StateVector> {
    let h = hadamard();
    let rotated = state
        .apply_single_qubit(Label::A1, &h)?
        .apply_single_qubit(Label::A2, &h)?;
    parity_check(&rotated, (Label::A1, Label::A2), Label::Atom3, ph)
}

/// Runs the protocol exactly, post-selecting every atom on |+⟩.
///
/// At phases other than the ideal pair the even-parity leakage is kept in the
/// state, so the returned probabilities are the ones an experiment would see.
pub fn run_analytic(s: &TwoPhotonState, ph: &FaradayPhases) -> Result<ProtocolOutcome> {
    let stage_one = stage_one_interaction(s, ph)?;
    let empty = ProtocolOutcome {
        p1: 0.0,
        p2: 0.0,
        p_total: 0.0,
        c_estimate: 0.0,
        final_state: None,
    };

    let first = stage_one.project_qubit(Label::Atom1, plus())?;
    let Some(after_alice) = first.state else {
        return Ok(empty);
    };
    let second = after_alice.project_qubit(Label::Atom2, plus())?;
    let p1 = first.probability * second.probability;
    let Some(after_bob) = second.state.filter(|_| p1 >= EMPTY_BRANCH_PROBABILITY) else {
        return Ok(ProtocolOutcome { p1, ..empty });
    };

    let third = stage_two_interaction(&after_bob, ph)?.project_qubit(Label::Atom3, plus())?;
    let p2 = third.probability;
    let p_total = p1 * p2;
    Ok(ProtocolOutcome {
        p1,
        p2,
        p_total,
        c_estimate: (2.0 * p_total.sqrt()).clamp(0.0, 1.0),
        final_state: third.state,
    })
}

/// (|LR⟩−|RL⟩)_{a1a2} (|RL⟩−|LR⟩)_{b1b2} ⊗ |+++⟩, normalized.
pub fn ideal_final_state() -> StateVector {
    let layout = RegisterLayout::canonical();
    let mut amps = vec![C64::new(0.0, 0.0); layout.dim()];
    let atoms = 0b111 << 4;
    let weight = 0.5 / (8.0f64).sqrt();
    // (a1, a2, b1, b2) bits with R=0, L=1, and the sign of each term
    let terms = [
        ((1, 0, 0, 1), 1.0),
        ((1, 0, 1, 0), -1.0),
        ((0, 1, 0, 1), -1.0),
        ((0, 1, 1, 0), 1.0),
    ];
    for ((a1, a2, b1, b2), sign) in terms {
        let photons = a1 | (a2 << 1) | (b1 << 2) | (b2 << 3);
        for atom_bits in 0..8 {
            let idx = photons | ((atom_bits << 4) & atoms);
            amps[idx] = C64::new(sign * weight, 0.0);
        }
    }
    StateVector::from_amplitudes(layout, amps).expect("fixed 128-entry state")
}

/// P₁ = 2|αδ|² + 2|βγ|², P₂ = |αδ−βγ|² / (2(|αδ|²+|βγ|²)), P_total = P₁P₂.
pub fn closed_form_outcome(s: &TwoPhotonState) -> ProtocolOutcome {
    let ad = s.alpha * s.delta;
    let bg = s.beta * s.gamma;
    let p1 = 2.0 * ad.norm_sqr() + 2.0 * bg.norm_sqr();
    let p2 = if p1 < EMPTY_BRANCH_PROBABILITY {
        0.0
    } else {
        (ad - bg).norm_sqr() / (2.0 * (ad.norm_sqr() + bg.norm_sqr()))
    };
    let p_total = p1 * p2;
    ProtocolOutcome {
        p1,
        p2,
        p_total,
        c_estimate: (2.0 * p_total.sqrt()).clamp(0.0, 1.0),
        final_state: (p_total > 0.0).then(ideal_final_state),
    }
}

/// C = 2√P_total, clamped to [0, 1].
pub fn concurrence_from_ptotal(p_total: f64) -> Result<f64> {
    if !(0.0..=0.25 + 1e-9).contains(&p_total) {
        return Err(Error::OutOfRange {
            what: "p_total",
            value: p_total,
        });
    }
    Ok((2.0 * p_total.sqrt()).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::faraday::{ideal_phases, perturbed_phases};
    use crate::qstate::minus;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn two_qubit_with_atom(photons: (usize, usize)) -> StateVector {
        let l = RegisterLayout::new(&[Label::A1, Label::A2]).unwrap();
        StateVector::basis_state(l, photons.0 | (photons.1 << 1))
            .unwrap()
            .tensor_product(&StateVector::qubit(Label::Atom1, plus()))
            .unwrap()
    }

    fn atom_part(s: &StateVector, photons: (usize, usize)) -> [C64; 2] {
        let get = |atom| {
            s.amplitude_of(&[
                (Label::A1, photons.0),
                (Label::A2, photons.1),
                (Label::Atom1, atom),
            ])
            .unwrap()
        };
        [get(0), get(1)]
    }

    #[test]
    fn state_validation() {
        assert!(TwoPhotonState::from_real(1.0, 0.0, 0.0, 0.0).is_ok());
        assert!(matches!(
            TwoPhotonState::from_real(1.0, 1.0, 0.0, 0.0),
            Err(Error::NotNormalized { .. })
        ));
        let s =
            TwoPhotonState::normalized(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!((s.alpha.re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(
            TwoPhotonState::normalized(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)).is_err()
        );
    }

    #[test]
    fn joint_product_input() {
        let s = TwoPhotonState::from_real(1.0, 0.0, 0.0, 0.0).unwrap();
        let j = prepare_joint(&s).unwrap();
        assert!((j.norm_sqr() - 1.0).abs() < 1e-12);
        let w = 1.0 / 8f64.sqrt();
        for atoms in 0..8 {
            assert!((j.amplitude(atoms << 4) - w).norm() < 1e-15);
        }
    }

    #[test]
    fn joint_bell_input() {
        let j = prepare_joint(&TwoPhotonState::bell()).unwrap();
        let w = 0.5 / 8f64.sqrt();
        let l = j.layout().clone();
        // pairs (a1,b1) and (a2,b2) are each RR or LL
        let nonzero = [(0, 0, 0, 0), (0, 1, 0, 1), (1, 0, 1, 0), (1, 1, 1, 1)];
        for idx in 0..16usize {
            let bits = (idx & 1, (idx >> 1) & 1, (idx >> 2) & 1, (idx >> 3) & 1);
            let expected = if nonzero.contains(&bits) { w } else { 0.0 };
            let amp = j
                .amplitude_of(&[
                    (Label::A1, bits.0),
                    (Label::A2, bits.1),
                    (Label::B1, bits.2),
                    (Label::B2, bits.3),
                ])
                .unwrap();
            assert!((amp - expected).norm() < 1e-15, "{bits:?}");
        }
        assert_eq!(l, RegisterLayout::canonical());
    }

    #[test]
    fn joint_rlrl_amplitude() {
        let s = TwoPhotonState::normalized(c(0.3, 0.1), c(0.2, -0.4), c(0.5, 0.0), c(0.1, 0.6))
            .unwrap();
        let j = prepare_joint(&s).unwrap();
        // |RLRL⟩ in a1 a2 b1 b2 order, atoms all g_L
        let amp = j
            .amplitude_of(&[
                (Label::A1, 0),
                (Label::A2, 1),
                (Label::B1, 0),
                (Label::B2, 1),
            ])
            .unwrap();
        let expected = s.alpha * s.delta / 8f64.sqrt();
        assert!((amp - expected).norm() < 1e-15);
    }

    #[test]
    fn ideal_parity_check_rules() {
        let ph = ideal_phases();
        let h = FRAC_1_SQRT_2;
        let i = c(0.0, 1.0);
        // odd: atom unchanged up to −i
        let out = parity_check(
            &two_qubit_with_atom((0, 1)),
            (Label::A1, Label::A2),
            Label::Atom1,
            &ph,
        )
        .unwrap();
        let a = atom_part(&out, (0, 1));
        assert!((a[0] - (-i * h)).norm() < 1e-12 && (a[1] - (-i * h)).norm() < 1e-12);
        // RR: (−g_L + g_R)/√2
        let out = parity_check(
            &two_qubit_with_atom((0, 0)),
            (Label::A1, Label::A2),
            Label::Atom1,
            &ph,
        )
        .unwrap();
        let a = atom_part(&out, (0, 0));
        assert!((a[0] - (-h)).norm() < 1e-12 && (a[1] - h).norm() < 1e-12);
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perturbed_ll_rule() {
        let sigma = 0.2;
        let ph = perturbed_phases(sigma).unwrap();
        let out = parity_check(
            &two_qubit_with_atom((1, 1)),
            (Label::A1, Label::A2),
            Label::Atom1,
            &ph,
        )
        .unwrap();
        let a = atom_part(&out, (1, 1));
        let g = C64::from_polar(1.0, 2.0 * ph.phi0());
        let e = C64::from_polar(1.0, 2.0 * sigma);
        assert!((a[0] - g * (-e) * FRAC_1_SQRT_2).norm() < 1e-12);
        assert!((a[1] - g * FRAC_1_SQRT_2).norm() < 1e-12);
    }

    #[test]
    fn even_branch_orthogonal_to_plus() {
        let ph = ideal_phases();
        let out = parity_check(
            &two_qubit_with_atom((0, 0)),
            (Label::A1, Label::A2),
            Label::Atom1,
            &ph,
        )
        .unwrap();
        let pr = out.project_qubit(Label::Atom1, plus()).unwrap();
        assert_eq!(pr.probability, 0.0);
        assert!(pr.is_empty());
        let pr = out.project_qubit(Label::Atom1, minus()).unwrap();
        assert!((pr.probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bell_outcome() {
        let o = run_analytic(&TwoPhotonState::bell(), &ideal_phases()).unwrap();
        assert!((o.p1 - 0.5).abs() < 1e-10);
        assert!((o.p2 - 0.5).abs() < 1e-10);
        assert!((o.p_total - 0.25).abs() < 1e-10);
        assert!((o.c_estimate - 1.0).abs() < 1e-10);
    }

    #[test]
    fn product_state_outcome() {
        let s = TwoPhotonState::from_real(1.0, 0.0, 0.0, 0.0).unwrap();
        let o = run_analytic(&s, &ideal_phases()).unwrap();
        assert_eq!((o.p1, o.p2, o.p_total, o.c_estimate), (0.0, 0.0, 0.0, 0.0));
        assert!(o.final_state.is_none());
    }

    #[test]
    fn partially_entangled_outcome() {
        let s = TwoPhotonState::from_real(0.8, 0.0, 0.0, 0.6).unwrap();
        let o = run_analytic(&s, &ideal_phases()).unwrap();
        assert!((o.p1 - 0.4608).abs() < 1e-10);
        assert!((o.p2 - 0.5).abs() < 1e-10);
        assert!((o.p_total - 0.2304).abs() < 1e-10);
        assert!((o.c_estimate - 0.96).abs() < 1e-10);
    }

    #[test]
    fn odd_bell_outcome() {
        let s = TwoPhotonState::from_real(0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0).unwrap();
        let o = run_analytic(&s, &ideal_phases()).unwrap();
        assert!((o.p_total - 0.25).abs() < 1e-10);
        assert!((o.c_estimate - 1.0).abs() < 1e-10);
    }

    #[test]
    fn closed_forms() {
        let o = closed_form_outcome(&TwoPhotonState::bell());
        assert!(
            (o.p1 - 0.5).abs() < 1e-12
                && (o.p2 - 0.5).abs() < 1e-12
                && (o.p_total - 0.25).abs() < 1e-12
        );
        let o = closed_form_outcome(&TwoPhotonState::from_real(0.0, 1.0, 0.0, 0.0).unwrap());
        assert_eq!((o.p1, o.p2, o.p_total), (0.0, 0.0, 0.0));
    }

    #[test]
    fn final_state_matches_target() {
        let s = TwoPhotonState::normalized(c(0.3, 0.1), c(0.2, -0.4), c(0.5, 0.0), c(0.1, 0.6))
            .unwrap();
        let o = run_analytic(&s, &ideal_phases()).unwrap();
        let fid = ideal_final_state()
            .inner(o.final_state.as_ref().unwrap())
            .unwrap()
            .norm_sqr();
        assert!((fid - 1.0).abs() < 1e-10);
    }

    #[test]
    fn concurrence_from_probability() {
        assert_eq!(concurrence_from_ptotal(0.25).unwrap(), 1.0);
        assert_eq!(concurrence_from_ptotal(0.0).unwrap(), 0.0);
        assert!((concurrence_from_ptotal(0.01).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(concurrence_from_ptotal(0.25 + 5e-10).unwrap(), 1.0);
        assert!(matches!(
            concurrence_from_ptotal(0.3),
            Err(Error::OutOfRange { .. })
        ));
        assert!(concurrence_from_ptotal(-0.1).is_err());
    }
}
