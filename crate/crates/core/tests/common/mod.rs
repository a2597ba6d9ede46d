#![allow(dead_code)]

use faraday_concurrence::linalg::{self, Mat4};
use faraday_concurrence::oracle::DensityMatrix;
use faraday_concurrence::{TwoPhotonState, C64};
use rand::Rng;
use rand_distr::StandardNormal;

fn gaussian_c64<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-uniform pure two-qubit state (normalized complex Gaussian vector).
pub fn random_state<R: Rng>(rng: &mut R) -> TwoPhotonState {
    let a: [C64; 4] = std::array::from_fn(|_| gaussian_c64(rng));
    TwoPhotonState::normalized(a[0], a[1], a[2], a[3]).unwrap()
}

/// e^{iχ} [[a, b], [−b̄, ā]] with |a|² + |b|² = 1.
pub fn random_unitary2<R: Rng>(rng: &mut R) -> [[C64; 2]; 2] {
    let (a, b) = (gaussian_c64(rng), gaussian_c64(rng));
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let (a, b) = (a / n, b / n);
    let g = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    [[g * a, g * b], [-g * b.conj(), g * a.conj()]]
}

/// Random full-rank-ish density matrix A A† / tr(A A†), optionally of lower rank.
pub fn random_density<R: Rng>(rng: &mut R, rank: usize) -> DensityMatrix {
    let mut a = linalg::zeros();
    for row in a.iter_mut() {
        for x in row.iter_mut().take(rank) {
            *x = gaussian_c64(rng);
        }
    }
    let m = linalg::mul(&a, &linalg::adjoint(&a));
    let tr = linalg::trace(&m).re;
    let m: Mat4 = m.map(|row| row.map(|x| x / tr));
    // symmetrize away rounding
    let mut h = m;
    for i in 0..4 {
        for j in 0..4 {
            h[i][j] = (m[i][j] + m[j][i].conj()) * 0.5;
        }
    }
    DensityMatrix::new(h).unwrap()
}
