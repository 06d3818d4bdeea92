//! Dense complex linear algebra shared by every other module.
//!
//! Matrices are `nalgebra` dense matrices over `Complex64`. Linear spans of
//! matrices are handled through column-major vectorizations: a
//! [`SubspaceBasis`] stores the original generators together with an
//! orthonormal frame obtained from one SVD of the stacked vectorizations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

/// Numerical thresholds used for rank, membership and positivity decisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Rank cutoff relative to the largest singular value.
    pub rank: f64,
    /// Membership residual, relative to `1 + ‖M‖_F`.
    pub mem: f64,
    /// Hermiticity and positivity slack.
    pub psd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank: 1e-10,
            mem: 1e-9,
            psd: 1e-9,
        }
    }
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Matrix unit `E_{ij}` (zero-based indices).
pub fn unit(rows: usize, cols: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(rows, cols);
    m[(i, j)] = re(1.0);
    m
}

/// Real matrix from row-major entries.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> ComplexMatrix {
    assert_eq!(entries.len(), rows * cols, "entry count must be rows × cols");
    ComplexMatrix::from_fn(rows, cols, |i, j| re(entries[i * cols + j]))
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn shape(m: &ComplexMatrix) -> (usize, usize) {
    (m.nrows(), m.ncols())
}

pub fn check_shape(m: &ComplexMatrix, expected: (usize, usize)) -> Result<()> {
    if shape(m) != expected {
        return Err(Error::ShapeMismatch {
            expected,
            found: shape(m),
        });
    }
    Ok(())
}

/// Largest singular value.
pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Top singular triple `(u, σ, v)` with `M v = σ u`, plus the gap to the
/// second singular value (infinite for rank-one shapes).
pub fn top_singular_triple(m: &ComplexMatrix) -> (DVector<C64>, f64, DVector<C64>, f64) {
    let svd = m.clone().svd(true, true);
    let sv = &svd.singular_values;
    let mut best = 0;
    for k in 1..sv.len() {
        if sv[k] > sv[best] {
            best = k;
        }
    }
    let mut second = f64::NEG_INFINITY;
    for k in 0..sv.len() {
        if k != best && sv[k] > second {
            second = sv[k];
        }
    }
    let u = svd.u.as_ref().unwrap().column(best).into_owned();
    let v = svd.v_t.as_ref().unwrap().row(best).adjoint();
    (u, sv[best], v, sv[best] - second)
}

pub fn hermitian_residual(m: &ComplexMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

fn hermitian_part(m: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let residual = hermitian_residual(m);
    if residual > tol {
        return Err(Error::NotHermitian { residual });
    }
    Ok((m + m.adjoint()).scale(0.5))
}

/// Eigenvalues of the Hermitian part of `m`, unsorted.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> DVector<f64> {
    let h = (m + m.adjoint()).scale(0.5);
    SymmetricEigen::new(h).eigenvalues
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    hermitian_eigenvalues(m).min()
}

/// Positive square root of a Hermitian PSD matrix; eigenvalues down to
/// `-tol.psd` are clamped to zero.
pub fn psd_sqrt(m: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    let h = hermitian_part(m, tol.psd)?;
    if h.is_empty() {
        return Ok(h);
    }
    let eig = SymmetricEigen::new(h);
    let min = eig.eigenvalues.min();
    if min < -tol.psd {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    let roots = eig.eigenvalues.map(|l| re(l.max(0.0).sqrt()));
    let v = &eig.eigenvectors;
    Ok(v * ComplexMatrix::from_diagonal(&roots) * v.adjoint())
}

/// `[[Re M, −Im M], [Im M, Re M]]` for Hermitian `M`.
pub fn realify_hermitian(m: &ComplexMatrix, tol: &Tolerances) -> Result<DMatrix<f64>> {
    let h = hermitian_part(m, tol.psd)?;
    Ok(realify(&h))
}

/// Real representation of a complex matrix; no Hermiticity requirement.
pub fn realify(m: &ComplexMatrix) -> DMatrix<f64> {
    let (r, c) = shape(m);
    let mut out = DMatrix::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(i, j + c)] = -z.im;
            out[(i + r, j)] = z.im;
            out[(i + r, j + c)] = z.re;
        }
    }
    out
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Column-major vectorization.
pub fn vectorize(m: &ComplexMatrix) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &[C64], rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(rows, cols, v)
}

/// Places `block` into a zero `rows × cols` matrix at offset `(r0, c0)`.
pub fn embed(block: &ComplexMatrix, rows: usize, cols: usize, r0: usize, c0: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(rows, cols);
    m.view_mut((r0, c0), block.shape()).copy_from(block);
    m
}

pub fn block(m: &ComplexMatrix, r0: usize, nr: usize, c0: usize, nc: usize) -> ComplexMatrix {
    m.view((r0, c0), (nr, nc)).into_owned()
}

/// Stacks vectorizations as columns.
pub fn stack_columns(mats: &[ComplexMatrix]) -> ComplexMatrix {
    let len = mats.first().map_or(0, |m| m.len());
    let mut out = ComplexMatrix::zeros(len, mats.len());
    for (k, m) in mats.iter().enumerate() {
        out.column_mut(k).copy_from_slice(m.as_slice());
    }
    out
}

/// Orthonormal basis (as columns) of the nullspace of `a`. Singular values
/// at or below `rank_tol · max(σ_max, 1)` count as zero.
pub fn nullspace(a: &ComplexMatrix, rank_tol: f64) -> ComplexMatrix {
    let n = a.ncols();
    if n == 0 {
        return ComplexMatrix::zeros(0, 0);
    }
    // Thin SVD only returns min(m, n) right vectors; pad to get all n.
    let padded = if a.nrows() < n {
        let mut p = ComplexMatrix::zeros(n, n);
        p.view_mut((0, 0), a.shape()).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let sv = &svd.singular_values;
    let threshold = rank_tol * sv.max().max(1.0);
    let v_t = svd.v_t.as_ref().unwrap();
    let cols: Vec<DVector<C64>> = (0..sv.len())
        .filter(|&k| sv[k] <= threshold)
        .map(|k| v_t.row(k).adjoint())
        .collect();
    if cols.is_empty() {
        ComplexMatrix::zeros(n, 0)
    } else {
        ComplexMatrix::from_columns(&cols)
    }
}

/// Minimum-norm least-squares solution of `a x = b` and its residual
/// `‖a x − b‖`.
pub fn lstsq(a: &ComplexMatrix, b: &DVector<C64>, rank_tol: f64) -> (DVector<C64>, f64) {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return (DVector::zeros(n), b.norm());
    }
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let threshold = rank_tol * sv.max().max(1.0);
    let u = svd.u.as_ref().unwrap();
    let v_t = svd.v_t.as_ref().unwrap();
    let mut x = DVector::zeros(n);
    for k in 0..sv.len() {
        if sv[k] > threshold {
            let coef = u.column(k).dotc(b) / sv[k];
            x += v_t.row(k).adjoint() * coef;
        }
    }
    let residual = (a * &x - b).norm();
    (x, residual)
}

/// Result of a span membership test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub inside: bool,
    pub residual: f64,
}

/// A linear span of equally-shaped matrices with an orthonormal frame.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    rows: usize,
    cols: usize,
    generators: Vec<ComplexMatrix>,
    /// `(rows·cols) × rank`, orthonormal columns.
    frame: ComplexMatrix,
}

impl SubspaceBasis {
    /// Span of `generators`; rank decided by one SVD of the stacked
    /// vectorizations.
    pub fn span_from(generators: &[ComplexMatrix], tol: &Tolerances) -> Result<Self> {
        let first = generators.first().ok_or(Error::EmptyInput)?;
        let (rows, cols) = shape(first);
        for g in generators {
            check_shape(g, (rows, cols))?;
        }
        let stacked = stack_columns(generators);
        let frame = orthonormal_range(&stacked, tol.rank);
        Ok(Self {
            rows,
            cols,
            generators: generators.to_vec(),
            frame,
        })
    }

    /// The zero subspace of `M_{rows,cols}`.
    pub fn zero(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            generators: Vec::new(),
            frame: ComplexMatrix::zeros(rows * cols, 0),
        }
    }

    /// Span of an already orthonormal frame (columns are vectorizations).
    pub(crate) fn from_frame(rows: usize, cols: usize, frame: ComplexMatrix) -> Self {
        let generators = (0..frame.ncols())
            .map(|k| unvectorize(frame.column(k).as_slice(), rows, cols))
            .collect();
        Self {
            rows,
            cols,
            generators,
            frame,
        }
    }

    /// Span of `generators`, allowing an empty list.
    pub fn span_or_zero(rows: usize, cols: usize, generators: &[ComplexMatrix], tol: &Tolerances) -> Result<Self> {
        if generators.is_empty() {
            Ok(Self::zero(rows, cols))
        } else {
            let s = Self::span_from(generators, tol)?;
            if (s.rows, s.cols) != (rows, cols) {
                return Err(Error::ShapeMismatch {
                    expected: (rows, cols),
                    found: (s.rows, s.cols),
                });
            }
            Ok(s)
        }
    }

    pub fn ambient(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn rank(&self) -> usize {
        self.frame.ncols()
    }

    pub fn generators(&self) -> &[ComplexMatrix] {
        &self.generators
    }

    pub fn frame(&self) -> &ComplexMatrix {
        &self.frame
    }

    /// Orthonormal (Frobenius) basis as matrices.
    pub fn frame_matrices(&self) -> Vec<ComplexMatrix> {
        (0..self.rank())
            .map(|k| unvectorize(self.frame.column(k).as_slice(), self.rows, self.cols))
            .collect()
    }

    /// Orthogonal projection onto the span.
    pub fn project(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let v = vectorize(m);
        let p = &self.frame * (self.frame.adjoint() * v);
        unvectorize(p.as_slice(), self.rows, self.cols)
    }

    pub fn contains(&self, m: &ComplexMatrix, tol: &Tolerances) -> Result<Membership> {
        check_shape(m, (self.rows, self.cols))?;
        let v = vectorize(m);
        let residual = (&v - &self.frame * (self.frame.adjoint() * &v)).norm();
        Ok(Membership {
            inside: residual < tol.mem * (1.0 + v.norm()),
            residual,
        })
    }

    /// Equal ranks and mutual containment of generators.
    pub fn equals(&self, other: &Self, tol: &Tolerances) -> Result<bool> {
        if self.ambient() != other.ambient() {
            return Err(Error::ShapeMismatch {
                expected: self.ambient(),
                found: other.ambient(),
            });
        }
        if self.rank() != other.rank() {
            return Ok(false);
        }
        for g in &self.generators {
            if !other.contains(g, tol)?.inside {
                return Ok(false);
            }
        }
        for g in &other.generators {
            if !self.contains(g, tol)?.inside {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Intersection via principal angles: directions whose cosine is within
    /// `tol.mem` of one.
    pub fn intersect(&self, other: &Self) -> Result<Self> {
        if self.ambient() != other.ambient() {
            return Err(Error::ShapeMismatch {
                expected: self.ambient(),
                found: other.ambient(),
            });
        }
        if self.rank() == 0 || other.rank() == 0 {
            return Ok(Self::zero(self.rows, self.cols));
        }
        let cross = self.frame.adjoint() * &other.frame;
        let svd = cross.svd(true, false);
        let u = svd.u.as_ref().unwrap();
        let cols: Vec<DVector<C64>> = (0..svd.singular_values.len())
            .filter(|&k| svd.singular_values[k] > 1.0 - 1e-9)
            .map(|k| &self.frame * u.column(k))
            .collect();
        if cols.is_empty() {
            return Ok(Self::zero(self.rows, self.cols));
        }
        let stacked = ComplexMatrix::from_columns(&cols);
        let frame = orthonormal_range(&stacked, 1e-10);
        Ok(Self::from_frame(self.rows, self.cols, frame))
    }

    /// Span of the adjoints.
    pub fn adjoint(&self) -> Self {
        let gens: Vec<ComplexMatrix> = self.frame_matrices().iter().map(|g| g.adjoint()).collect();
        let frame = if gens.is_empty() {
            ComplexMatrix::zeros(self.rows * self.cols, 0)
        } else {
            orthonormal_range(&stack_columns(&gens), 1e-10)
        };
        Self {
            rows: self.cols,
            cols: self.rows,
            generators: self.generators.iter().map(|g| g.adjoint()).collect(),
            frame,
        }
    }

    /// Span of `self ∪ other`.
    pub fn sum(&self, other: &Self, tol: &Tolerances) -> Result<Self> {
        if self.ambient() != other.ambient() {
            return Err(Error::ShapeMismatch {
                expected: self.ambient(),
                found: other.ambient(),
            });
        }
        let mut gens = self.generators.clone();
        gens.extend(other.generators.iter().cloned());
        Self::span_or_zero(self.rows, self.cols, &gens, tol)
    }

    /// Compression of every generator to the block at `(r0, c0)` of shape
    /// `nr × nc`.
    pub fn compress(&self, r0: usize, nr: usize, c0: usize, nc: usize, tol: &Tolerances) -> Result<Self> {
        let gens: Vec<ComplexMatrix> = self.generators.iter().map(|g| block(g, r0, nr, c0, nc)).collect();
        Self::span_or_zero(nr, nc, &gens, tol)
    }

    /// Every generator placed into a larger `rows × cols` ambient at `(r0, c0)`.
    pub fn embed(&self, rows: usize, cols: usize, r0: usize, c0: usize, tol: &Tolerances) -> Result<Self> {
        let gens: Vec<ComplexMatrix> = self.generators.iter().map(|g| embed(g, rows, cols, r0, c0)).collect();
        Self::span_or_zero(rows, cols, &gens, tol)
    }
}

/// Orthonormal basis of the column space of `a`, rank cut relative to σ_max.
fn orthonormal_range(a: &ComplexMatrix, rank_tol: f64) -> ComplexMatrix {
    let len = a.nrows();
    if a.ncols() == 0 || len == 0 {
        return ComplexMatrix::zeros(len, 0);
    }
    let svd = a.clone().svd(true, false);
    let sv = &svd.singular_values;
    let smax = sv.max();
    if smax <= 1e-300 {
        return ComplexMatrix::zeros(len, 0);
    }
    let u = svd.u.as_ref().unwrap();
    let cols: Vec<DVector<C64>> = (0..sv.len())
        .filter(|&k| sv[k] > rank_tol * smax)
        .map(|k| u.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        ComplexMatrix::zeros(len, 0)
    } else {
        ComplexMatrix::from_columns(&cols)
    }
}

/// Coordinates of `m` with respect to `basis` (least squares through the
/// Gram matrix) and the reconstruction residual in Frobenius norm.
pub fn coordinates(basis: &[ComplexMatrix], m: &ComplexMatrix) -> (DVector<C64>, f64) {
    let a = stack_columns(basis);
    lstsq(&a, &vectorize(m), 1e-12)
}

pub fn combination(basis: &[ComplexMatrix], coeffs: &[C64]) -> ComplexMatrix {
    let (r, c) = shape(&basis[0]);
    let mut out = ComplexMatrix::zeros(r, c);
    for (b, &k) in basis.iter().zip(coeffs) {
        if k != C64::new(0.0, 0.0) {
            out += b * k;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn sharp_p() -> ComplexMatrix {
        ComplexMatrix::from_fn(3, 3, |i, j| re(if i == j { 1.0 } else { 0.0 } + 1.0 / 3.0))
    }

    #[test]
    fn spectral_norm_examples() {
        assert_relative_eq!(spectral_norm(&identity(3)), 1.0, epsilon = 1e-12);
        assert_relative_eq!(spectral_norm(&real_matrix(2, 2, &[3.0, 0.0, 0.0, 4.0])), 4.0, epsilon = 1e-12);
        // P⁻¹ = I − J/6
        let p_inv = ComplexMatrix::from_fn(3, 3, |i, j| re(if i == j { 1.0 } else { 0.0 } - 1.0 / 6.0));
        let z = &p_inv * (unit(3, 3, 0, 1) - unit(3, 3, 0, 2));
        assert_relative_eq!(spectral_norm(&z), 1.5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn psd_sqrt_examples() {
        let t = tol();
        assert_relative_eq!((psd_sqrt(&identity(3), &t).unwrap() - identity(3)).norm(), 0.0, epsilon = 1e-12);
        let z = ComplexMatrix::zeros(2, 2);
        assert_relative_eq!(psd_sqrt(&z, &t).unwrap().norm(), 0.0, epsilon = 1e-12);
        let q = ComplexMatrix::from_fn(3, 3, |i, j| re(if i == j { 2.0 } else { 1.0 }));
        let p = psd_sqrt(&q, &t).unwrap();
        assert!((p - sharp_p()).norm() < 1e-12);
    }

    #[test]
    fn psd_sqrt_errors() {
        let t = tol();
        let not_herm = real_matrix(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(psd_sqrt(&not_herm, &t), Err(Error::NotHermitian { .. })));
        let neg = real_matrix(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(psd_sqrt(&neg, &t), Err(Error::NotPsd { .. })));
        // tiny negative eigenvalues are clamped
        let almost = real_matrix(2, 2, &[1.0, 0.0, 0.0, -1e-12]);
        assert!(psd_sqrt(&almost, &t).is_ok());
    }

    #[test]
    fn span_from_ranks() {
        let t = tol();
        let s = SubspaceBasis::span_from(&[unit(2, 2, 0, 0), unit(2, 2, 1, 0)], &t).unwrap();
        assert_eq!(s.rank(), 2);
        let s = SubspaceBasis::span_from(&[unit(2, 2, 0, 0), unit(2, 2, 0, 0) * re(2.0)], &t).unwrap();
        assert_eq!(s.rank(), 1);
        let g1 = unit(3, 3, 0, 0) + unit(3, 3, 2, 1);
        let g2 = unit(3, 3, 1, 0) + unit(3, 3, 2, 2);
        let s = SubspaceBasis::span_from(&[g1, g2], &t).unwrap();
        assert_eq!(s.rank(), 2);
    }

    #[test]
    fn span_from_errors() {
        let t = tol();
        assert!(matches!(SubspaceBasis::span_from(&[], &t), Err(Error::EmptyInput)));
        let r = SubspaceBasis::span_from(&[unit(2, 2, 0, 0), unit(2, 3, 0, 0)], &t);
        assert!(matches!(r, Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn span_contains_examples() {
        let t = tol();
        let s = SubspaceBasis::span_from(&[unit(2, 2, 0, 0), unit(2, 2, 1, 0)], &t).unwrap();
        let m = s.contains(&unit(2, 2, 0, 0), &t).unwrap();
        assert!(m.inside && m.residual < 1e-14);
        let m = s.contains(&unit(2, 2, 0, 1), &t).unwrap();
        assert!(!m.inside);
        assert_relative_eq!(m.residual, 1.0, epsilon = 1e-12);
        assert!(s.contains(&unit(3, 3, 0, 0), &t).is_err());
    }

    #[test]
    fn span_contains_max_space_against_projection_oracle() {
        let t = tol();
        let g1 = unit(3, 3, 0, 0) + unit(3, 3, 2, 1);
        let g2 = unit(3, 3, 1, 0) + unit(3, 3, 2, 2);
        let s = SubspaceBasis::span_from(&[g1.clone(), g2.clone()], &t).unwrap();
        // Oracle: g1, g2 are orthogonal with ‖g‖² = 2, so the projection of
        // E11 is ⟨g1,E11⟩/2 · g1 + ⟨g2,E11⟩/2 · g2 = g1/2.
        let e11 = unit(3, 3, 0, 0);
        let oracle_residual = (&e11 - &g1 * re(0.5)).norm();
        let m = s.contains(&e11, &t).unwrap();
        assert!(!m.inside);
        assert_relative_eq!(m.residual, oracle_residual, epsilon = 1e-12);
        assert_relative_eq!(oracle_residual, 0.5f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn span_equal_examples() {
        let t = tol();
        let a = SubspaceBasis::span_from(&[unit(2, 2, 0, 0)], &t).unwrap();
        let b = SubspaceBasis::span_from(&[unit(2, 2, 0, 0) * re(2.0)], &t).unwrap();
        let c = SubspaceBasis::span_from(&[unit(2, 2, 0, 1)], &t).unwrap();
        assert!(a.equals(&b, &t).unwrap());
        assert!(!a.equals(&c, &t).unwrap());
        let d = SubspaceBasis::span_from(&[unit(3, 3, 0, 1)], &t).unwrap();
        assert!(a.equals(&d, &t).is_err());
    }

    #[test]
    fn realify_examples() {
        let t = tol();
        let m = real_matrix(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let r = realify_hermitian(&m, &t).unwrap();
        assert_eq!(r.nrows(), 4);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(r[(i, j)], m[(i, j)].re);
                assert_eq!(r[(i + 2, j + 2)], m[(i, j)].re);
                assert_eq!(r[(i, j + 2)], 0.0);
            }
        }
        // Pauli Y; oracle: direct eigensolve of the 4×4 real output.
        let y = ComplexMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
        );
        let r = realify_hermitian(&y, &t).unwrap();
        let mut ev: Vec<f64> = SymmetricEigen::new(r).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in ev.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
        let r = realify_hermitian(&identity(3), &t).unwrap();
        assert_eq!(r, DMatrix::<f64>::identity(6, 6));
        assert!(realify_hermitian(&real_matrix(2, 2, &[0.0, 1.0, 0.0, 0.0]), &t).is_err());
    }

    #[test]
    fn intersection_and_adjoint() {
        let t = tol();
        let a = SubspaceBasis::span_from(&[unit(3, 3, 0, 0), unit(3, 3, 0, 1), unit(3, 3, 1, 1)], &t).unwrap();
        let adj = a.adjoint();
        let both = a.intersect(&adj).unwrap();
        let diag = SubspaceBasis::span_from(&[unit(3, 3, 0, 0), unit(3, 3, 1, 1)], &t).unwrap();
        assert!(both.equals(&diag, &t).unwrap());
    }

    #[test]
    fn nullspace_and_lstsq() {
        let a = real_matrix(1, 3, &[1.0, 1.0, 0.0]);
        let n = nullspace(&a, 1e-10);
        assert_eq!(n.ncols(), 2);
        assert!((&a * &n).norm() < 1e-12);
        let b = DVector::from_element(1, re(2.0));
        let (x, r) = lstsq(&a, &b, 1e-10);
        assert!(r < 1e-12);
        assert_relative_eq!(x[0].re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(x[2].re, 0.0, epsilon = 1e-12);
    }
}
