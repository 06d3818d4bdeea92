#![allow(dead_code)]

use nalgebra::DMatrix;
use quasimult::catalog::{catalog, Fixture};
use quasimult::mult::{quasi_mult_space, Realization};
use quasimult::numerics::{spectral_norm, unit};
use quasimult::{ComplexMatrix, OperatorSpace, SubspaceBasis, Tolerances, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn tol() -> Tolerances {
    Tolerances::default()
}

pub fn fixture(name: &str) -> Fixture {
    catalog(name, &tol()).unwrap()
}

pub fn units_span(rows: usize, cols: usize, pos: &[(usize, usize)]) -> SubspaceBasis {
    let gens: Vec<ComplexMatrix> = pos.iter().map(|&(i, j)| unit(rows, cols, i, j)).collect();
    SubspaceBasis::span_from(&gens, &tol()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Random element of the computed quasimultiplier space with spectral norm
/// drawn uniformly from `(0, radius]`.
pub fn random_qm_element(real: &Realization<'_>, rng: &mut ChaCha8Rng, radius: f64) -> ComplexMatrix {
    let qm = quasi_mult_space(real, &tol()).unwrap();
    let frame = qm.solution_basis.frame_matrices();
    let (r, c) = qm.solution_basis.ambient();
    let mut z = ComplexMatrix::zeros(r, c);
    for f in &frame {
        z += f * C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    let n = spectral_norm(&z);
    if n == 0.0 {
        return z;
    }
    z * C64::new(radius * rng.gen_range(0.05..1.0) / n, 0.0)
}

/// `Φ(A) = Σ A_ij C[i-th block row, j-th block col]` for a Choi matrix with
/// `R × R` blocks.
pub fn choi_apply(choi: &ComplexMatrix, a: &ComplexMatrix, big_r: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(big_r, big_r);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if a[(i, j)] != C64::new(0.0, 0.0) {
                out += choi.view((i * big_r, j * big_r), (big_r, big_r)) * a[(i, j)];
            }
        }
    }
    out
}

pub fn min_eig(m: &ComplexMatrix) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues().min()
}

/// Paulsen corner data built directly: `P1, P2, Q1, Q2` and lifted pairs.
pub fn paulsen(
    x: &OperatorSpace,
    images: &[ComplexMatrix],
) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix, ComplexMatrix, Vec<(ComplexMatrix, ComplexMatrix)>) {
    let (p, q) = x.ambient();
    let (r, s) = images[0].shape();
    let diag = |n: usize, lo: usize, hi: usize| {
        ComplexMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| {
            C64::new(if i >= lo && i < hi { 1.0 } else { 0.0 }, 0.0)
        }))
    };
    let mut lifted = Vec::new();
    for (f, g) in x.basis().iter().zip(images) {
        let mut fl = ComplexMatrix::zeros(p + q, p + q);
        fl.view_mut((0, p), (p, q)).copy_from(f);
        let mut gl = ComplexMatrix::zeros(r + s, r + s);
        gl.view_mut((0, r), (r, s)).copy_from(g);
        lifted.push((fl, gl));
    }
    (diag(p + q, 0, p), diag(p + q, p, p + q), diag(r + s, 0, r), diag(r + s, r, r + s), lifted)
}

pub fn real_part(m: &ComplexMatrix) -> DMatrix<f64> {
    m.map(|c| c.re)
}
