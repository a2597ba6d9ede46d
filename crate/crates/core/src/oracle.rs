//! Reference concurrence values, independent of the measurement protocol.
//!
//! Mixed states use the Wootters construction: the λᵢ of R = √(√ρ ρ̃ √ρ),
//! whose squares are the eigenvalues of ρρ̃. Basis order is
//! |00⟩, |01⟩, |10⟩, |11⟩ with 0 = R and the first qubit most significant,
//! so (α, β, γ, δ) maps straight onto a 4-vector.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat4};
use crate::protocol::TwoPhotonState;
use crate::qstate::C64;

pub use crate::linalg::eigenvalues_4x4;

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-9;

pub fn sigma_y() -> [[C64; 2]; 2] {
    let z = C64::new(0.0, 0.0);
    [[z, C64::new(0.0, -1.0)], [C64::new(0.0, 1.0), z]]
}

/// σ_y ⊗ σ_y
pub fn sigma_yy() -> Mat4 {
    linalg::kron2(&sigma_y(), &sigma_y())
}

/// Validated two-qubit density matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityMatrix(Mat4);

impl DensityMatrix {
    pub fn new(m: Mat4) -> Result<Self> {
        if m.iter()
            .flatten()
            .any(|x| !(x.re.is_finite() && x.im.is_finite()))
        {
            return Err(Error::NonFinite);
        }
        for i in 0..4 {
            for j in 0..4 {
                let d = (m[i][j] - m[j][i].conj()).norm();
                if d > HERMITIAN_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "density matrix is not Hermitian (entry ({i},{j}) off by {d:e})"
                    )));
                }
            }
        }
        let tr = linalg::trace(&m);
        if (tr - 1.0).norm() > TRACE_TOL {
            return Err(Error::InvalidParameter(format!(
                "density matrix trace is {tr}, expected 1"
            )));
        }
        let min_eig = linalg::hermitian_eigen(&m)?.0[3];
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidParameter(format!(
                "density matrix has negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self(m))
    }

    /// |ψ⟩⟨ψ| for a normalized 4-vector.
    pub fn pure(psi: &[C64; 4]) -> Result<Self> {
        Self::new(linalg::outer(psi))
    }

    pub fn maximally_mixed() -> Self {
        Self(linalg::diag([C64::new(0.25, 0.0); 4]))
    }

    /// p |Φ⁺⟩⟨Φ⁺| + (1 − p) I/4
    pub fn werner(p: f64) -> Result<Self> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = linalg::outer(&[
            C64::new(h, 0.0),
            C64::from(0.0),
            C64::from(0.0),
            C64::new(h, 0.0),
        ]);
        let mixed = Self::maximally_mixed().0;
        let mut m = linalg::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] = bell[i][j] * p + mixed[i][j] * (1.0 - p);
            }
        }
        Self::new(m)
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    /// U ρ U†
    pub fn transformed(&self, u: &Mat4) -> Result<Self> {
        Self::new(linalg::mul(&linalg::mul(u, &self.0), &linalg::adjoint(u)))
    }
}

pub fn concurrence_pure(s: &TwoPhotonState) -> f64 {
    (2.0 * (s.alpha * s.delta - s.beta * s.gamma).norm()).min(1.0)
}

/// |⟨Ψ*| σ_y⊗σ_y |Ψ⟩| from the explicit operator.
pub fn concurrence_pure_general(psi: &[C64; 4]) -> f64 {
    let y = sigma_yy();
    // ⟨Ψ*| has components conj(conj(ψᵢ)) = ψᵢ
    let value: C64 = (0..4)
        .map(|i| psi[i] * (0..4).map(|j| y[i][j] * psi[j]).sum::<C64>())
        .sum();
    value.norm().min(1.0)
}

/// ρ̃ = (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)
pub fn spin_flip(rho: &DensityMatrix) -> Mat4 {
    let y = sigma_yy();
    linalg::mul(&linalg::mul(&y, &linalg::conj(rho.matrix())), &y)
}

/// The four λᵢ in decreasing order.
pub fn wootters_lambdas(rho: &DensityMatrix) -> Result<[f64; 4]> {
    // With ρ = W W†, the λᵢ are the singular values of τ = Wᵀ (σ_y⊗σ_y) W,
    // since τ†τ is similar to ρρ̃. This avoids square roots of the rounding
    // noise that sits on the zero eigenvalues of ρρ̃ for low-rank ρ.
    let (values, vectors) = linalg::hermitian_eigen(rho.matrix())?;
    if let Some(v) = values.iter().find(|&&v| v < -PSD_TOL) {
        return Err(Error::NumericalFailure(format!(
            "eigenvalue {v} of ρ is negative"
        )));
    }
    let mut w = vectors;
    for (j, v) in values.iter().enumerate() {
        let scale = v.max(0.0).sqrt();
        for row in w.iter_mut() {
            row[j] *= scale;
        }
    }
    let mut wt = linalg::zeros();
    for i in 0..4 {
        for j in 0..4 {
            wt[i][j] = w[j][i];
        }
    }
    let tau = linalg::mul(&linalg::mul(&wt, &sigma_yy()), &w);
    linalg::singular_values(&tau)
}

pub fn concurrence_mixed(rho: &DensityMatrix) -> Result<f64> {
    let l = wootters_lambdas(rho)?;
    Ok((l[0] - l[1] - l[2] - l[3]).clamp(0.0, 1.0))
}
