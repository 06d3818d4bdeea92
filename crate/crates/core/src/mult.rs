//! Multiplier and quasimultiplier spaces, ternary subspaces, one-sided
//! identities and quasicentralizer factorizations.
//!
//! Every space is the nullspace of `s ↦ (I − QQ*) vec(products)` over a
//! domain, where `Q` is an orthonormal frame of `X`. Without envelope data
//! the domain is the full ambient matrix space (relative spaces); with it,
//! the domain is the matching envelope corner.

use nalgebra::DVector;

use crate::cpcone::{min_norm_affine, min_norm_qm, QmSolveReport};
use crate::error::{Error, Result};
use crate::numerics::{
    block, embed, lstsq, nullspace, spectral_norm, unit, vectorize, ComplexMatrix, SubspaceBasis,
    Tolerances, C64,
};
use crate::opspace::{EnvelopeEmbedding, OperatorSpace};
use crate::product::{associativity_residual, BilinearProduct};
use crate::sdp::SdpOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Quasi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Computed in the given ambient matrix space.
    Relative,
    /// Computed inside supplied envelope corners.
    Envelope,
}

/// `X` either in its own ambient space or through envelope data.
#[derive(Debug, Clone, Copy)]
pub struct Realization<'a> {
    space: &'a OperatorSpace,
    envelope: Option<&'a EnvelopeEmbedding>,
}

/// Block position of a corner inside the envelope ambient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Corner {
    pub r0: usize,
    pub rows: usize,
    pub c0: usize,
    pub cols: usize,
}

impl<'a> Realization<'a> {
    pub fn relative(space: &'a OperatorSpace) -> Self {
        Self { space, envelope: None }
    }

    pub fn enveloped(envelope: &'a EnvelopeEmbedding) -> Self {
        Self {
            space: envelope.x(),
            envelope: Some(envelope),
        }
    }

    /// Uses the envelope when given. The envelope's copy of `X` must carry
    /// the same basis as `space` in its `(1,2)` corner, up to zero padding of
    /// `space` on the right and bottom.
    pub fn new(space: &'a OperatorSpace, envelope: Option<&'a EnvelopeEmbedding>, tol: &Tolerances) -> Result<Self> {
        let Some(env) = envelope else {
            return Ok(Self::relative(space));
        };
        let (n1, n2) = env.split();
        let (p, q) = space.ambient();
        if p < n1 || q < n2 || space.dim() != env.x().dim() {
            return Err(Error::DimensionMismatch(format!(
                "space {:?} of dimension {} does not match envelope corner {:?} of dimension {}",
                (p, q),
                space.dim(),
                (n1, n2),
                env.x().dim()
            )));
        }
        for (k, (f, g)) in space.basis().iter().zip(env.x().basis()).enumerate() {
            let r = (f - embed(&env.corner12(g), p, q, 0, 0)).norm();
            if r > tol.mem * (1.0 + f.norm()) {
                return Err(Error::DimensionMismatch(format!(
                    "basis element {k} differs from the envelope copy (residual {r:.3e})"
                )));
            }
        }
        Ok(Self::enveloped(env))
    }

    /// The copy of `X` all products are taken in.
    pub fn working(&self) -> &'a OperatorSpace {
        self.space
    }

    pub fn envelope(&self) -> Option<&'a EnvelopeEmbedding> {
        self.envelope
    }

    pub fn provenance(&self) -> Provenance {
        if self.envelope.is_some() {
            Provenance::Envelope
        } else {
            Provenance::Relative
        }
    }

    pub fn require_envelope(&self) -> Result<&'a EnvelopeEmbedding> {
        self.envelope.ok_or(Error::NoEnvelope)
    }

    /// Where the elements of a given side live, if an envelope is present.
    pub fn corner(&self, side: Side) -> Option<Corner> {
        let env = self.envelope?;
        let (n1, n2) = env.split();
        Some(match side {
            Side::Left => Corner {
                r0: 0,
                rows: n1,
                c0: 0,
                cols: n1,
            },
            Side::Right => Corner {
                r0: n1,
                rows: n2,
                c0: n1,
                cols: n2,
            },
            Side::Quasi => Corner {
                r0: n1,
                rows: n2,
                c0: 0,
                cols: n1,
            },
        })
    }

    pub fn left_domain(&self, tol: &Tolerances) -> Result<SubspaceBasis> {
        match self.envelope {
            Some(env) => Ok(env.i11().clone()),
            None => full_space(self.space.ambient().0, self.space.ambient().0, tol),
        }
    }

    pub fn right_domain(&self, tol: &Tolerances) -> Result<SubspaceBasis> {
        match self.envelope {
            Some(env) => Ok(env.i22().clone()),
            None => full_space(self.space.ambient().1, self.space.ambient().1, tol),
        }
    }

    /// `M_{q,p}`, or the adjoint of the `I(X)` corner.
    pub fn quasi_domain(&self, tol: &Tolerances) -> Result<SubspaceBasis> {
        match self.envelope {
            Some(env) => Ok(env.ix().adjoint()),
            None => {
                let (p, q) = self.space.ambient();
                full_space(q, p, tol)
            }
        }
    }

    pub fn domain(&self, side: Side, tol: &Tolerances) -> Result<SubspaceBasis> {
        match side {
            Side::Left => self.left_domain(tol),
            Side::Right => self.right_domain(tol),
            Side::Quasi => self.quasi_domain(tol),
        }
    }
}

fn full_space(rows: usize, cols: usize, tol: &Tolerances) -> Result<SubspaceBasis> {
    let gens: Vec<ComplexMatrix> = (0..rows)
        .flat_map(|i| (0..cols).map(move |j| unit(rows, cols, i, j)))
        .collect();
    SubspaceBasis::span_from(&gens, tol)
}

/// `M_l(X)`, `M_r(X)` or `QM(X)` (relative or envelope).
#[derive(Debug, Clone)]
pub struct MultiplierSpace {
    pub side: Side,
    pub provenance: Provenance,
    pub solution_basis: SubspaceBasis,
    /// Elements whose action on `X` is zero.
    pub action_kernel: SubspaceBasis,
    pub effective_dimension: usize,
    pub corner: Option<Corner>,
}

impl MultiplierSpace {
    pub fn dim(&self) -> usize {
        self.solution_basis.rank()
    }

    /// Solutions cut down to their envelope corner (unchanged without one).
    pub fn block_form(&self, tol: &Tolerances) -> Result<SubspaceBasis> {
        match self.corner {
            Some(c) => self.solution_basis.compress(c.r0, c.rows, c.c0, c.cols, tol),
            None => Ok(self.solution_basis.clone()),
        }
    }
}

/// The products defining containment for one side.
fn action(x: &OperatorSpace, side: Side, s: &ComplexMatrix) -> Vec<ComplexMatrix> {
    let b = x.basis();
    match side {
        Side::Left => b.iter().map(|f| s * f).collect(),
        Side::Right => b.iter().map(|f| f * s).collect(),
        Side::Quasi => {
            let mut out = Vec::with_capacity(b.len() * b.len());
            for fi in b {
                let fs = fi * s;
                for fj in b {
                    out.push(&fs * fj);
                }
            }
            out
        }
    }
}

fn concat(mats: &[ComplexMatrix]) -> DVector<C64> {
    let len: usize = mats.iter().map(|m| m.len()).sum();
    let mut v = DVector::zeros(len);
    let mut at = 0;
    for m in mats {
        v.rows_mut(at, m.len()).copy_from(&vectorize(m));
        at += m.len();
    }
    v
}

/// Orthogonal complement projection onto `X⊥` of each product, concatenated.
fn off_space(x: &OperatorSpace, mats: &[ComplexMatrix]) -> DVector<C64> {
    let q = x.span().frame();
    let projected: Vec<ComplexMatrix> = mats
        .iter()
        .map(|m| {
            let v = vectorize(m);
            let r = &v - q * (q.adjoint() * &v);
            ComplexMatrix::from_column_slice(m.nrows(), m.ncols(), r.as_slice())
        })
        .collect();
    concat(&projected)
}

/// Linear system of the containment conditions over the domain frame:
/// columns are `(I − QQ*)` of the products, and separately the raw products.
pub(crate) struct DomainSystem {
    pub domain: Vec<ComplexMatrix>,
    pub residual_map: ComplexMatrix,
    pub action_map: ComplexMatrix,
}

pub(crate) fn domain_system(x: &OperatorSpace, domain: &SubspaceBasis, side: Side) -> DomainSystem {
    let frame = domain.frame_matrices();
    let mut res_cols = Vec::with_capacity(frame.len());
    let mut act_cols = Vec::with_capacity(frame.len());
    for d in &frame {
        let prods = action(x, side, d);
        res_cols.push(off_space(x, &prods));
        act_cols.push(concat(&prods));
    }
    let rows = act_cols.first().map_or(0, |c| c.len());
    let to_matrix = |cols: &[DVector<C64>]| {
        if cols.is_empty() {
            ComplexMatrix::zeros(rows, 0)
        } else {
            ComplexMatrix::from_columns(cols)
        }
    };
    DomainSystem {
        residual_map: to_matrix(&res_cols),
        action_map: to_matrix(&act_cols),
        domain: frame,
    }
}

fn combine_columns(domain: &[ComplexMatrix], coeffs: &ComplexMatrix, rows: usize, cols: usize) -> Vec<ComplexMatrix> {
    (0..coeffs.ncols())
        .map(|c| {
            let mut m = ComplexMatrix::zeros(rows, cols);
            for (t, d) in domain.iter().enumerate() {
                let w = coeffs[(t, c)];
                if w != C64::new(0.0, 0.0) {
                    m += d * w;
                }
            }
            m
        })
        .collect()
}

fn multiplier_space(real: &Realization<'_>, side: Side, tol: &Tolerances) -> Result<MultiplierSpace> {
    let x = real.working();
    let domain = real.domain(side, tol)?;
    let (rows, cols) = domain.ambient();
    let sys = domain_system(x, &domain, side);
    let (solutions, kernel) = if sys.domain.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        let sol = nullspace(&sys.residual_map, tol.rank);
        let ker = nullspace(&sys.action_map, tol.rank);
        (
            combine_columns(&sys.domain, &sol, rows, cols),
            combine_columns(&sys.domain, &ker, rows, cols),
        )
    };
    let solution_basis = SubspaceBasis::span_or_zero(rows, cols, &solutions, tol)?;
    let action_kernel = SubspaceBasis::span_or_zero(rows, cols, &kernel, tol)?;
    let effective_dimension = solution_basis.rank().saturating_sub(action_kernel.rank());
    Ok(MultiplierSpace {
        side,
        provenance: real.provenance(),
        solution_basis,
        action_kernel,
        effective_dimension,
        corner: real.corner(side),
    })
}

/// `{a : aX ⊆ X}`.
pub fn left_mult_space(real: &Realization<'_>, tol: &Tolerances) -> Result<MultiplierSpace> {
    multiplier_space(real, Side::Left, tol)
}

/// `{a : Xa ⊆ X}`.
pub fn right_mult_space(real: &Realization<'_>, tol: &Tolerances) -> Result<MultiplierSpace> {
    multiplier_space(real, Side::Right, tol)
}

/// `{z : XzX ⊆ X}`.
pub fn quasi_mult_space(real: &Realization<'_>, tol: &Tolerances) -> Result<MultiplierSpace> {
    multiplier_space(real, Side::Quasi, tol)
}

/// `X ∩ QM(X)*` inside the envelope.
pub fn ter_space(real: &Realization<'_>, tol: &Tolerances) -> Result<SubspaceBasis> {
    let env = real.require_envelope()?;
    let qm = quasi_mult_space(real, tol)?;
    env.x().span().intersect(&qm.solution_basis.adjoint())
}

/// Outcome of the right contractive identity test.
#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub exists: bool,
    /// Least-norm solution of `m(F_k, e) = F_k`, when the system is solvable.
    pub e: Option<ComplexMatrix>,
    pub e_norm: Option<f64>,
    /// Dimension of the affine set of solutions `e`.
    pub e_solution_dim: usize,
    pub z: Option<ComplexMatrix>,
    /// `‖z* − e‖`.
    pub adjoint_match_residual: Option<f64>,
    /// `max_k ‖F_k zz* − F_k‖`.
    pub unit_residual: Option<f64>,
    pub z_report: Option<QmSolveReport>,
}

const IDENTITY_TOL: f64 = 1e-8;

/// Looks for a contractive right identity `e` and the quasimultiplier `z`
/// with `m = m_z`; the pair must satisfy `z* = e` and `zz*` acting as the
/// identity on `X`.
pub fn right_identity_analysis(
    real: &Realization<'_>,
    m: &BilinearProduct,
    opts: &SdpOptions,
    tol: &Tolerances,
) -> Result<IdentityReport> {
    let assoc = associativity_residual(m);
    if assoc > 1e-9 {
        return Err(Error::NotAssociative { residual: assoc });
    }
    let x = real.working();
    let d = x.dim();
    if m.dim() != d {
        return Err(Error::DimensionMismatch(format!("product of dimension {} on a space of dimension {d}", m.dim())));
    }
    // m(F_k, e) = F_k in coordinates: Σ_j e_j c_{kj}^l = δ_{kl}.
    let mut a = ComplexMatrix::zeros(d * d, d);
    let mut b = DVector::zeros(d * d);
    for k in 0..d {
        b[k * d + k] = C64::new(1.0, 0.0);
        for j in 0..d {
            for l in 0..d {
                a[(k * d + l, j)] = m.coeff(k, j, l);
            }
        }
    }
    let (e0, residual) = lstsq(&a, &b, tol.rank);
    let none = IdentityReport {
        exists: false,
        e: None,
        e_norm: None,
        e_solution_dim: 0,
        z: None,
        adjoint_match_residual: None,
        unit_residual: None,
        z_report: None,
    };
    if residual > tol.mem * (1.0 + b.norm()) {
        return Ok(none);
    }
    let null = nullspace(&a, tol.rank);
    let e_start = x.element(e0.as_slice());
    let directions: Vec<ComplexMatrix> = (0..null.ncols()).map(|c| x.element(null.column(c).as_slice())).collect();
    let best = min_norm_affine(&e_start, &directions, opts)?;
    let e = best.point;
    let e_norm = spectral_norm(&e);
    let mut report = IdentityReport {
        e: Some(e.clone()),
        e_norm: Some(e_norm),
        e_solution_dim: directions.len(),
        ..none
    };
    if e_norm > 1.0 + 1e-9 {
        return Ok(report);
    }
    let zr = min_norm_qm(real, m, opts, tol)?;
    let Some(z) = zr.z_opt.clone() else {
        return Err(Error::NoQuasimultiplierRepresentation {
            residual: zr.stage1_residual,
        });
    };
    let adjoint_match = (z.adjoint() - &e).norm();
    let zz = &z * z.adjoint();
    let unit = x.basis().iter().map(|f| (f * &zz - f).norm()).fold(0.0, f64::max);
    report.exists = adjoint_match < IDENTITY_TOL && unit < IDENTITY_TOL;
    report.z = Some(z);
    report.adjoint_match_residual = Some(adjoint_match);
    report.unit_residual = Some(unit);
    report.z_report = Some(zr);
    Ok(report)
}

/// Factorizations `m(x, y) = γ(x) y = x ψ(y)` through multipliers.
#[derive(Debug, Clone)]
pub struct QcReport {
    pub gamma_exists: bool,
    pub psi_exists: bool,
    pub gamma_images: Option<Vec<ComplexMatrix>>,
    pub psi_images: Option<Vec<ComplexMatrix>>,
    pub gamma_residual: f64,
    pub psi_residual: f64,
}

impl QcReport {
    pub fn is_quasicentralizer(&self) -> bool {
        self.gamma_exists && self.psi_exists
    }
}

/// Solves `Σ_t s_t act(D_t) = targets` over a multiplier span; returns the
/// min-norm combination and the worst relative residual.
fn solve_in_span(
    span: &SubspaceBasis,
    act: impl Fn(&ComplexMatrix) -> Vec<ComplexMatrix>,
    targets: &[ComplexMatrix],
    tol: &Tolerances,
) -> (Option<ComplexMatrix>, f64) {
    let (rows, cols) = span.ambient();
    let rhs = concat(targets);
    let frame = span.frame_matrices();
    if frame.is_empty() {
        let r = rhs.norm();
        return if r <= tol.mem * (1.0 + r) {
            (Some(ComplexMatrix::zeros(rows, cols)), r)
        } else {
            (None, r)
        };
    }
    let columns: Vec<DVector<C64>> = frame.iter().map(|d| concat(&act(d))).collect();
    let a = ComplexMatrix::from_columns(&columns);
    let (s, residual) = lstsq(&a, &rhs, tol.rank);
    if residual > tol.mem * (1.0 + rhs.norm()) {
        return (None, residual);
    }
    let mut out = ComplexMatrix::zeros(rows, cols);
    for (t, d) in frame.iter().enumerate() {
        out += d * s[t];
    }
    (Some(out), residual)
}

/// Quasicentralizer test. Associativity of `m` is not assumed.
pub fn qc_check(real: &Realization<'_>, m: &BilinearProduct, tol: &Tolerances) -> Result<QcReport> {
    let x = real.working();
    let d = x.dim();
    if m.dim() != d {
        return Err(Error::DimensionMismatch(format!("product of dimension {} on a space of dimension {d}", m.dim())));
    }
    let left = left_mult_space(real, tol)?;
    let right = right_mult_space(real, tol)?;
    let basis = x.basis();

    let mut gamma = Vec::with_capacity(d);
    let mut gamma_residual = 0.0f64;
    let mut gamma_ok = true;
    for i in 0..d {
        let targets: Vec<ComplexMatrix> = (0..d).map(|j| m.pair_matrix(x, i, j)).collect();
        let (img, r) = solve_in_span(&left.solution_basis, |a| basis.iter().map(|f| a * f).collect(), &targets, tol);
        gamma_residual = gamma_residual.max(r);
        match img {
            Some(g) => gamma.push(g),
            None => gamma_ok = false,
        }
    }

    let mut psi = Vec::with_capacity(d);
    let mut psi_residual = 0.0f64;
    let mut psi_ok = true;
    for j in 0..d {
        let targets: Vec<ComplexMatrix> = (0..d).map(|i| m.pair_matrix(x, i, j)).collect();
        let (img, r) = solve_in_span(&right.solution_basis, |b| basis.iter().map(|f| f * b).collect(), &targets, tol);
        psi_residual = psi_residual.max(r);
        match img {
            Some(g) => psi.push(g),
            None => psi_ok = false,
        }
    }

    Ok(QcReport {
        gamma_exists: gamma_ok,
        psi_exists: psi_ok,
        gamma_images: gamma_ok.then_some(gamma),
        psi_images: psi_ok.then_some(psi),
        gamma_residual,
        psi_residual,
    })
}

/// `max_{i,j} ‖γ(F_i)γ(F_j) − γ(γ(F_i)F_j)‖` with `γ` extended linearly.
pub fn quasihom_residual(x: &OperatorSpace, gamma_images: &[ComplexMatrix], tol: &Tolerances) -> Result<f64> {
    let d = x.dim();
    if gamma_images.len() != d {
        return Err(Error::DimensionMismatch(format!("{} images for dimension {d}", gamma_images.len())));
    }
    let mut worst = 0.0f64;
    for (i, gi) in gamma_images.iter().enumerate() {
        for (j, fj) in x.basis().iter().enumerate() {
            let inner = gi * fj;
            let (coords, r) = x.coordinates(&inner)?;
            if r > tol.mem * (1.0 + inner.norm()) {
                return Err(Error::ImageOutsideSpace {
                    left: i,
                    right: j,
                    residual: r,
                });
            }
            let mut g_inner = ComplexMatrix::zeros(gi.nrows(), gi.ncols());
            for (k, c) in coords.iter().enumerate() {
                g_inner += &gamma_images[k] * *c;
            }
            worst = worst.max((gi * &gamma_images[j] - g_inner).norm());
        }
    }
    Ok(worst)
}

/// `A_l = M_l ∩ M_l*` and `A_r = M_r ∩ M_r*`.
#[derive(Debug, Clone)]
pub struct AdjointableSpaces {
    pub a_l: SubspaceBasis,
    pub a_r: SubspaceBasis,
}

pub fn adjointable_spaces(real: &Realization<'_>, tol: &Tolerances) -> Result<AdjointableSpaces> {
    real.require_envelope()?;
    let l = left_mult_space(real, tol)?.solution_basis;
    let r = right_mult_space(real, tol)?.solution_basis;
    Ok(AdjointableSpaces {
        a_l: l.intersect(&l.adjoint())?,
        a_r: r.intersect(&r.adjoint())?,
    })
}

/// Envelope data for `Y = [X; M_r(X)]`: ambient `N + n2`, split `(N, n2)`,
/// with `I₁₁(Y)` the whole envelope algebra of `X`.
pub fn stacked_envelope(env: &EnvelopeEmbedding, tol: &Tolerances) -> Result<EnvelopeEmbedding> {
    let (n1, n2) = env.split();
    let n = env.size();
    let big = n + n2;
    let real = Realization::enveloped(env);
    let mr = right_mult_space(&real, tol)?;

    let mut y_basis: Vec<ComplexMatrix> =
        env.x().basis().iter().map(|f| embed(&env.corner12(f), big, big, 0, n)).collect();
    for r in mr.solution_basis.frame_matrices() {
        y_basis.push(embed(&block(&r, n1, n2, n1, n2), big, big, n1, n));
    }
    let i11: Vec<ComplexMatrix> = env
        .algebra_span(tol)?
        .frame_matrices()
        .iter()
        .map(|g| embed(g, big, big, 0, 0))
        .collect();
    let i22: Vec<ComplexMatrix> = env
        .i22()
        .generators()
        .iter()
        .map(|g| embed(&block(g, n1, n2, n1, n2), big, big, n, n))
        .collect();
    let mut ix: Vec<ComplexMatrix> = env
        .ix()
        .generators()
        .iter()
        .map(|g| embed(&env.corner12(g), big, big, 0, n))
        .collect();
    ix.extend(
        env.i22()
            .generators()
            .iter()
            .map(|g| embed(&block(g, n1, n2, n1, n2), big, big, n1, n)),
    );
    EnvelopeEmbedding::new(n, n2, y_basis, &i11, &i22, &ix, tol)
}

/// Block-multiplier comparison for the stacked space `Y = [X; M_r(X)]`.
#[derive(Debug, Clone)]
pub struct StackedReport {
    pub ml_dim: usize,
    pub ml_expected_dim: usize,
    pub ml_equal: bool,
    pub al_dim: usize,
    pub al_expected_dim: usize,
    pub al_equal: bool,
}

/// Computes `M_l(Y)` and `A_l(Y)` by direct nullspace and compares them with
/// `[[M_l(X), X], [QM(X), M_r(X)]]` and `[[A_l(X), TER(X)], [TER(X)*, A_r(X)]]`.
pub fn stacked_multiplier_check(env: &EnvelopeEmbedding, tol: &Tolerances) -> Result<StackedReport> {
    let n = env.size();
    let real = Realization::enveloped(env);
    let ml = left_mult_space(&real, tol)?.solution_basis;
    let mr = right_mult_space(&real, tol)?.solution_basis;
    let qm = quasi_mult_space(&real, tol)?.solution_basis;
    let ter = ter_space(&real, tol)?;
    let adj = adjointable_spaces(&real, tol)?;
    let x_span = env.x().span().clone();

    let ml_expected = ml.sum(&x_span, tol)?.sum(&qm, tol)?.sum(&mr, tol)?;
    let al_expected = adj.a_l.sum(&ter, tol)?.sum(&ter.adjoint(), tol)?.sum(&adj.a_r, tol)?;

    let y = stacked_envelope(env, tol)?;
    let y_real = Realization::enveloped(&y);
    let ml_y = left_mult_space(&y_real, tol)?.solution_basis.compress(0, n, 0, n, tol)?;
    let al_y = adjointable_spaces(&y_real, tol)?.a_l.compress(0, n, 0, n, tol)?;

    Ok(StackedReport {
        ml_dim: ml_y.rank(),
        ml_expected_dim: ml_expected.rank(),
        ml_equal: ml_y.equals(&ml_expected, tol)?,
        al_dim: al_y.rank(),
        al_expected_dim: al_expected.rank(),
        al_equal: al_y.equals(&al_expected, tol)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{identity, re, real_matrix};
    use crate::opspace::matrix_units_block;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn c2() -> OperatorSpace {
        OperatorSpace::new(2, 2, vec![unit(2, 2, 0, 0), unit(2, 2, 1, 0)], &tol()).unwrap()
    }

    fn c2_env() -> EnvelopeEmbedding {
        let t = tol();
        EnvelopeEmbedding::new(
            2,
            1,
            vec![unit(3, 3, 0, 2), unit(3, 3, 1, 2)],
            &matrix_units_block(3, 0, 2, 0, 2),
            &[unit(3, 3, 2, 2)],
            &[unit(3, 3, 0, 2), unit(3, 3, 1, 2)],
            &t,
        )
        .unwrap()
    }

    fn span(gens: &[ComplexMatrix]) -> SubspaceBasis {
        SubspaceBasis::span_from(gens, &tol()).unwrap()
    }

    #[test]
    fn c2_relative_spaces() {
        let t = tol();
        let x = c2();
        let real = Realization::relative(&x);
        let qm = quasi_mult_space(&real, &t).unwrap();
        assert_eq!(qm.dim(), 4);
        assert_eq!(qm.provenance, Provenance::Relative);
        // x z y = (z11 c + z12 d) x: kernel is {z11 = z12 = 0}.
        assert_eq!(qm.action_kernel.rank(), 2);
        let left = left_mult_space(&real, &t).unwrap();
        assert_eq!((left.dim(), left.action_kernel.rank()), (4, 0));
        let right = right_mult_space(&real, &t).unwrap();
        assert_eq!((right.dim(), right.action_kernel.rank(), right.effective_dimension), (3, 2, 1));
        assert!(!right.solution_basis.contains(&unit(2, 2, 0, 1), &t).unwrap().inside);
    }

    #[test]
    fn c2_envelope_spaces() {
        let t = tol();
        let env = c2_env();
        let x = c2();
        let real = Realization::new(&x, Some(&env), &t).unwrap();
        let qm = quasi_mult_space(&real, &t).unwrap();
        assert_eq!(qm.dim(), 2);
        let row = span(&[unit(1, 2, 0, 0), unit(1, 2, 0, 1)]);
        assert!(qm.block_form(&t).unwrap().equals(&row, &t).unwrap());
        // R2* = C2, so the ternary part is all of C2.
        let ter = ter_space(&real, &t).unwrap();
        assert_eq!(ter.rank(), 2);
        let adj = adjointable_spaces(&real, &t).unwrap();
        assert_eq!(adj.a_l.rank(), 4);
    }

    #[test]
    fn relative_realization_has_no_ter() {
        let x = c2();
        assert!(matches!(ter_space(&Realization::relative(&x), &tol()), Err(Error::NoEnvelope)));
    }

    #[test]
    fn t2_right_multipliers() {
        let t = tol();
        let t2 = OperatorSpace::new(2, 2, vec![unit(2, 2, 0, 0), unit(2, 2, 0, 1), unit(2, 2, 1, 1)], &t).unwrap();
        let r = right_mult_space(&Realization::relative(&t2), &t).unwrap();
        assert!(r.solution_basis.equals(t2.span(), &t).unwrap());
    }

    #[test]
    fn mismatched_envelope_is_rejected() {
        let t = tol();
        let env = c2_env();
        let other = OperatorSpace::new(2, 1, vec![unit(2, 1, 0, 0), unit(2, 1, 1, 0)], &t).unwrap();
        assert!(Realization::new(&other, Some(&env), &t).is_ok());
        assert!(Realization::new(&c2(), Some(&env), &t).is_ok());
        let r2 = OperatorSpace::new(2, 2, vec![unit(2, 2, 0, 0), unit(2, 2, 0, 1)], &t).unwrap();
        assert!(matches!(Realization::new(&r2, Some(&env), &t), Err(Error::DimensionMismatch(_))));
    }

    fn m1() -> BilinearProduct {
        BilinearProduct::from_fn(2, |i, j, k| re(if i == j && j == k { 1.0 } else { 0.0 }))
    }

    fn m2() -> BilinearProduct {
        BilinearProduct::from_fn(2, |i, j, k| re(if j == 0 && i == k { 1.0 } else { 0.0 }))
    }

    #[test]
    fn qc_examples() {
        let t = tol();
        let x = c2();
        let real = Realization::relative(&x);
        let r1 = qc_check(&real, &m1(), &t).unwrap();
        assert!(r1.gamma_exists && !r1.psi_exists);
        let g = r1.gamma_images.as_ref().unwrap();
        assert!((&g[0] - real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0])).norm() < 1e-12);
        assert!((&g[1] - real_matrix(2, 2, &[0.0, 0.0, 0.0, 1.0])).norm() < 1e-12);
        assert!(quasihom_residual(&x, g, &t).unwrap() < 1e-12);
        let r2 = qc_check(&real, &m2(), &t).unwrap();
        assert!(r2.is_quasicentralizer());
        assert!(quasihom_residual(&x, r2.gamma_images.as_ref().unwrap(), &t).unwrap() < 1e-12);
        let zero = vec![ComplexMatrix::zeros(2, 2); 2];
        assert_eq!(quasihom_residual(&x, &zero, &t).unwrap(), 0.0);
    }

    #[test]
    fn quasihom_detects_escape() {
        let t = tol();
        let x = c2();
        // E12 maps C2 into C2: E12·E11 = 0, E12·E21 = E11.
        let inside = vec![unit(2, 2, 0, 1), ComplexMatrix::zeros(2, 2)];
        assert!(quasihom_residual(&x, &inside, &t).is_ok());
        // Every matrix maps C2 into itself; R2 is not invariant under E21.
        let r2 = OperatorSpace::new(2, 2, vec![unit(2, 2, 0, 0), unit(2, 2, 0, 1)], &t).unwrap();
        let escape = vec![unit(2, 2, 1, 0), ComplexMatrix::zeros(2, 2)];
        assert!(matches!(quasihom_residual(&r2, &escape, &t), Err(Error::ImageOutsideSpace { .. })));
    }

    #[test]
    fn right_identity_examples() {
        let t = tol();
        let opts = SdpOptions::default();
        let t2 = OperatorSpace::new(2, 2, vec![unit(2, 2, 0, 0), unit(2, 2, 0, 1), unit(2, 2, 1, 1)], &t).unwrap();
        let prod = crate::product::algebra_closure_check(&t2, &t).unwrap().unwrap();
        let r = right_identity_analysis(&Realization::relative(&t2), &prod, &opts, &t).unwrap();
        assert!(r.exists);
        assert!((r.e.as_ref().unwrap() - identity(2)).norm() < 1e-10);
        assert!((r.z.as_ref().unwrap() - identity(2)).norm() < 1e-10);

        let env = c2_env();
        let real = Realization::enveloped(&env);
        let r = right_identity_analysis(&real, &m2(), &opts, &t).unwrap();
        assert!(r.exists);
        assert!((r.e.as_ref().unwrap() - unit(3, 3, 0, 2)).norm() < 1e-10);
        assert!((r.z.as_ref().unwrap() - unit(3, 3, 2, 0)).norm() < 1e-10);
        assert!(r.adjoint_match_residual.unwrap() < 1e-10 && r.unit_residual.unwrap() < 1e-10);

        // m1 forces e = (1, 1), which is not contractive.
        let r = right_identity_analysis(&real, &m1(), &opts, &t).unwrap();
        assert!(!r.exists);
        assert!((r.e_norm.unwrap() - 2f64.sqrt()).abs() < 1e-10);

        let mid = crate::product::combine(&[&m1(), &m2()], &[re(0.5), re(0.5)]).unwrap();
        assert!(matches!(
            right_identity_analysis(&real, &mid, &opts, &t),
            Err(Error::NotAssociative { .. })
        ));
    }
}
