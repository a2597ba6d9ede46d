//! Dense state vectors over a small register of labeled two-level systems.
//!
//! Basis convention: the qubit at position `k` of a [`RegisterLayout`]
//! contributes `bit_k << k` to the basis index. The canonical protocol
//! register is `[a1, a2, b1, b2, atom1, atom2, atom3]`, so `a1` is the least
//! significant bit and the atoms sit in the top three bits. Photons use
//! `|R⟩ = 0`, `|L⟩ = 1`; atoms use `|g_L⟩ = 0`, `|g_R⟩ = 1`.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// A 2×2 single-qubit operator, row-major.
pub type Gate2 = [[C64; 2]; 2];

/// Probability below which a post-selected branch is treated as impossible.
pub const EMPTY_BRANCH_PROBABILITY: f64 = 1e-15;

const UNITARITY_TOL: f64 = 1e-10;
const PHASE_MODULUS_TOL: f64 = 1e-12;
const AXIS_NORM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    A1,
    A2,
    B1,
    B2,
    Atom1,
    Atom2,
    Atom3,
}

impl Label {
    pub const CANONICAL: [Label; 7] = [
        Label::A1,
        Label::A2,
        Label::B1,
        Label::B2,
        Label::Atom1,
        Label::Atom2,
        Label::Atom3,
    ];

    pub fn is_photon(self) -> bool {
        matches!(self, Label::A1 | Label::A2 | Label::B1 | Label::B2)
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::A1 => "a1",
            Label::A2 => "a2",
            Label::B1 => "b1",
            Label::B2 => "b2",
            Label::Atom1 => "atom1",
            Label::Atom2 => "atom2",
            Label::Atom3 => "atom3",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Ordered, duplicate-free list of qubit labels. Position = bit significance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterLayout {
    labels: Vec<Label>,
}

impl RegisterLayout {
    pub fn new(labels: &[Label]) -> Result<Self> {
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::DuplicateLabel(*l));
            }
        }
        Ok(Self {
            labels: labels.to_vec(),
        })
    }

    /// The seven-qubit protocol register.
    pub fn canonical() -> Self {
        Self {
            labels: Label::CANONICAL.to_vec(),
        }
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        1 << self.labels.len()
    }

    pub fn position(&self, label: Label) -> Result<usize> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .ok_or(Error::UnknownLabel(label))
    }

    /// Basis index for the given per-label bit assignment; unlisted qubits are 0.
    pub fn index_of(&self, bits: &[(Label, usize)]) -> Result<usize> {
        let mut idx = 0;
        for &(label, bit) in bits {
            idx |= (bit & 1) << self.position(label)?;
        }
        Ok(idx)
    }
}

/// Diagonal phase table indexed by the bit pattern of the target qubits
/// (first target = least significant bit of the pattern).
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseTable {
    entries: Vec<C64>,
}

impl PhaseTable {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        if !entries.len().is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: entries.len().next_power_of_two(),
                actual: entries.len(),
            });
        }
        for e in &entries {
            if !(e.re.is_finite() && e.im.is_finite()) {
                return Err(Error::NonFinite);
            }
            let dev = (e.norm() - 1.0).abs();
            if dev > PHASE_MODULUS_TOL {
                return Err(Error::NonUnitary { deviation: dev });
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn get(&self, pattern: usize) -> C64 {
        self.entries[pattern]
    }

    /// Entrywise product, i.e. the table of applying `self` then `other`.
    pub fn compose(&self, other: &PhaseTable) -> Result<PhaseTable> {
        if self.entries.len() != other.entries.len() {
            return Err(Error::DimensionMismatch {
                expected: self.entries.len(),
                actual: other.entries.len(),
            });
        }
        PhaseTable::new(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a * b)
                .collect(),
        )
    }
}

/// Result of projecting one qubit onto an axis state.
#[derive(Clone, Debug)]
pub struct Projection {
    pub probability: f64,
    /// `None` when the branch probability is below [`EMPTY_BRANCH_PROBABILITY`].
    pub state: Option<StateVector>,
}

impl Projection {
    pub fn is_empty(&self) -> bool {
        self.state.is_none()
    }
}

pub fn hadamard() -> Gate2 {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

pub fn identity_gate() -> Gate2 {
    let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    [[o, z], [z, o]]
}

/// `(|0⟩ + |1⟩)/√2`
pub fn plus() -> [C64; 2] {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [h, h]
}

/// `(|0⟩ − |1⟩)/√2`
pub fn minus() -> [C64; 2] {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [h, -h]
}

pub fn plus_minus_basis() -> [[C64; 2]; 2] {
    [plus(), minus()]
}

fn unitarity_deviation(u: &Gate2) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let s: C64 = (0..2).map(|k| u[k][i].conj() * u[k][j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((s - target).norm());
        }
    }
    dev
}

/// Dense amplitude vector over a [`RegisterLayout`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
    layout: RegisterLayout,
}

impl StateVector {
    pub fn from_amplitudes(layout: RegisterLayout, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                actual: amps.len(),
            });
        }
        if amps.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::NonFinite);
        }
        Ok(Self { amps, layout })
    }

    pub fn basis_state(layout: RegisterLayout, index: usize) -> Result<Self> {
        let dim = layout.dim();
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: index,
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { amps, layout })
    }

    /// Single-qubit state `c0|0⟩ + c1|1⟩` on `label`.
    pub fn qubit(label: Label, coeffs: [C64; 2]) -> Self {
        Self {
            amps: coeffs.to_vec(),
            layout: RegisterLayout {
                labels: vec![label],
            },
        }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn amplitude_of(&self, bits: &[(Label, usize)]) -> Result<C64> {
        Ok(self.amps[self.layout.index_of(bits)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if n <= 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized { norm_sqr: n });
        }
        let s = 1.0 / n.sqrt();
        Ok(Self {
            amps: self.amps.iter().map(|a| a * s).collect(),
            layout: self.layout.clone(),
        })
    }

    /// ⟨self|other⟩; layouts must agree.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.layout != other.layout {
            return Err(Error::DimensionMismatch {
                expected: self.amps.len(),
                actual: other.amps.len(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn with_global_phase(&self, theta: f64) -> Self {
        let p = C64::from_polar(1.0, theta);
        Self {
            amps: self.amps.iter().map(|a| a * p).collect(),
            layout: self.layout.clone(),
        }
    }

    /// `self ⊗ right`; the result's layout lists `self`'s labels first.
    pub fn tensor_product(&self, right: &StateVector) -> Result<Self> {
        for l in right.layout.labels() {
            if self.layout.labels.contains(l) {
                return Err(Error::LabelCollision(*l));
            }
        }
        let shift = self.layout.len();
        let mut labels = self.layout.labels.clone();
        labels.extend_from_slice(&right.layout.labels);
        let mut amps = vec![C64::new(0.0, 0.0); self.amps.len() * right.amps.len()];
        for (j, b) in right.amps.iter().enumerate() {
            for (i, a) in self.amps.iter().enumerate() {
                amps[i | (j << shift)] = a * b;
            }
        }
        Ok(Self {
            amps,
            layout: RegisterLayout { labels },
        })
    }

    /// Same physical state expressed in another ordering of the same labels.
    pub fn reorder(&self, layout: &RegisterLayout) -> Result<Self> {
        if layout.len() != self.layout.len() {
            return Err(Error::DimensionMismatch {
                expected: self.layout.len(),
                actual: layout.len(),
            });
        }
        // destination bit position of each source bit
        let dest: Vec<usize> = self
            .layout
            .labels
            .iter()
            .map(|&l| layout.position(l))
            .collect::<Result<_>>()?;
        let mut amps = vec![C64::new(0.0, 0.0); self.amps.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let mut j = 0;
            for (k, &d) in dest.iter().enumerate() {
                j |= ((i >> k) & 1) << d;
            }
            amps[j] = *a;
        }
        Ok(Self {
            amps,
            layout: layout.clone(),
        })
    }

    pub fn apply_diagonal_phase(&self, targets: &[Label], table: &PhaseTable) -> Result<Self> {
        let expected = 1usize << targets.len();
        if table.entries.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: table.entries.len(),
            });
        }
        RegisterLayout::new(targets)?;
        let pos: Vec<usize> = targets
            .iter()
            .map(|&l| self.layout.position(l))
            .collect::<Result<_>>()?;
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let pattern = pos
                    .iter()
                    .enumerate()
                    .fold(0, |acc, (j, &p)| acc | (((i >> p) & 1) << j));
                a * table.entries[pattern]
            })
            .collect();
        Ok(Self {
            amps,
            layout: self.layout.clone(),
        })
    }

    pub fn apply_single_qubit(&self, target: Label, u: &Gate2) -> Result<Self> {
        let dev = unitarity_deviation(u);
        if dev > UNITARITY_TOL {
            return Err(Error::NonUnitary { deviation: dev });
        }
        let mask = 1 << self.layout.position(target)?;
        let mut amps = self.amps.clone();
        for i0 in (0..self.amps.len()).filter(|i| i & mask == 0) {
            let i1 = i0 | mask;
            let (a0, a1) = (self.amps[i0], self.amps[i1]);
            amps[i0] = u[0][0] * a0 + u[0][1] * a1;
            amps[i1] = u[1][0] * a0 + u[1][1] * a1;
        }
        Ok(Self {
            amps,
            layout: self.layout.clone(),
        })
    }

    /// Projects `target` onto `axis` and renormalizes. The projected qubit is
    /// left in the axis state.
    pub fn project_qubit(&self, target: Label, axis: [C64; 2]) -> Result<Projection> {
        let axis_norm = axis[0].norm_sqr() + axis[1].norm_sqr();
        if (axis_norm - 1.0).abs() > AXIS_NORM_TOL {
            return Err(Error::NotNormalized {
                norm_sqr: axis_norm,
            });
        }
        let mask = 1 << self.layout.position(target)?;
        let mut amps = vec![C64::new(0.0, 0.0); self.amps.len()];
        let mut probability = 0.0;
        for i0 in (0..self.amps.len()).filter(|i| i & mask == 0) {
            let i1 = i0 | mask;
            let overlap = axis[0].conj() * self.amps[i0] + axis[1].conj() * self.amps[i1];
            probability += overlap.norm_sqr();
            amps[i0] = axis[0] * overlap;
            amps[i1] = axis[1] * overlap;
        }
        if probability < EMPTY_BRANCH_PROBABILITY {
            return Ok(Projection {
                probability: 0.0,
                state: None,
            });
        }
        let s = 1.0 / probability.sqrt();
        amps.iter_mut().for_each(|a| *a *= s);
        Ok(Projection {
            probability: probability.min(1.0),
            state: Some(Self {
                amps,
                layout: self.layout.clone(),
            }),
        })
    }

    /// Measures `target` in the orthonormal `basis`, returning the outcome
    /// index and the collapsed state. Consumes exactly one `f64` from `rng`.
    pub fn born_sample<R: Rng + ?Sized>(
        &self,
        target: Label,
        basis: &[[C64; 2]; 2],
        rng: &mut R,
    ) -> Result<(usize, StateVector)> {
        let overlap = basis[0][0].conj() * basis[1][0] + basis[0][1].conj() * basis[1][1];
        if overlap.norm() > AXIS_NORM_TOL {
            return Err(Error::InvalidParameter(format!(
                "measurement basis not orthogonal (overlap {:e})",
                overlap.norm()
            )));
        }
        let first = self.project_qubit(target, basis[0])?;
        let u: f64 = rng.random();
        let pick_first = u < first.probability;
        if pick_first {
            if let Some(s) = first.state {
                return Ok((0, s));
            }
        }
        let second = self.project_qubit(target, basis[1])?;
        match (second.state, first.state) {
            (Some(s), _) => Ok((1, s)),
            // rounding left the complement empty
            (None, Some(s)) => Ok((0, s)),
            (None, None) => Err(Error::NotNormalized {
                norm_sqr: self.norm_sqr(),
            }),
        }
    }
}
