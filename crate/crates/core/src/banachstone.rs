//! Structure carried by a linear complete isometry between operator algebras.
//!
//! For onto `ψ: A → B` the analysis recovers `z` with `ψ(a₁)ψ(a₂) = ψ(a₁za₂)`,
//! `w` with `ψ(a₁a₂) = ψ(a₁)wψ(a₂)`, and the homomorphisms `π_l(a) = ψ(a)w`,
//! `π_r(a) = wψ(a)`.

use crate::cpcone::{cb_norm, min_norm_qm, QmSolveReport};
use crate::error::{Error, Result};
use crate::mult::Realization;
use crate::numerics::{embed, lstsq, spectral_norm, stack_columns, vectorize, ComplexMatrix, SubspaceBasis, Tolerances};
use crate::opspace::{EnvelopeEmbedding, OperatorSpace};
use crate::product::{algebra_closure_check, associativity_residual, BilinearProduct};
use crate::sdp::SdpOptions;
use nalgebra::DVector;

/// Bound on `‖ψ‖_cb` and `‖ψ⁻¹‖_cb` accepted as a complete isometry.
pub const ISOMETRY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentitySide {
    Right,
    Left,
}

#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub side: IdentitySide,
    pub e: ComplexMatrix,
    /// `‖w − ψ(e)*‖`.
    pub w_vs_psi_e_star_residual: f64,
    /// `max_k ‖G_k ww* − G_k‖` (right) or `max_k ‖w*w G_k − G_k‖` (left).
    pub unit_residual: f64,
}

#[derive(Debug, Clone)]
pub struct HomResiduals {
    pub pi_l: f64,
    pub pi_r: f64,
}

#[derive(Debug, Clone)]
pub struct IsometryAnalysis {
    pub psi_images: Vec<ComplexMatrix>,
    pub is_complete_isometry: bool,
    pub psi_cb_norm: f64,
    pub psi_inverse_cb_norm: f64,
    pub z_report: QmSolveReport,
    pub w_report: QmSolveReport,
    pub pi_l_images: Vec<ComplexMatrix>,
    pub pi_r_images: Vec<ComplexMatrix>,
    pub hom_residuals: HomResiduals,
    /// `π_l(a)·B ⊆ B` and `B·π_r(a) ⊆ B` for every basis element.
    pub pi_l_multiplies: bool,
    pub pi_r_multiplies: bool,
    /// `max_k |‖π(F_k)‖ − ‖F_k‖|`.
    pub pi_l_isometry_defect: f64,
    pub pi_r_isometry_defect: f64,
    pub pi_l_rank: usize,
    pub pi_r_rank: usize,
    pub identity_report: Option<IdentityCheck>,
}

impl IsometryAnalysis {
    pub fn pi_l_isometric(&self) -> bool {
        self.pi_l_isometry_defect < 1e-8
    }

    pub fn pi_r_isometric(&self) -> bool {
        self.pi_r_isometry_defect < 1e-8
    }
}

/// Product of `space` (an algebra) in its own basis.
fn ambient_product(space: &OperatorSpace, tol: &Tolerances) -> Result<BilinearProduct> {
    algebra_closure_check(space, tol)?.ok_or_else(|| Error::NotAnAlgebra { residual: closure_residual(space) })
}

fn closure_residual(space: &OperatorSpace) -> f64 {
    let mut worst = 0.0f64;
    for fi in space.basis() {
        for fj in space.basis() {
            let prod = fi * fj;
            if let Ok(m) = space.contains(&prod, &Tolerances::default()) {
                worst = worst.max(m.residual);
            }
        }
    }
    worst
}

/// `B` re-expressed in the basis `ψ(F_k)`, after checking that ψ is a
/// bijection onto `B`.
fn image_space(a: &OperatorSpace, b: &OperatorSpace, psi: &[ComplexMatrix], tol: &Tolerances) -> Result<OperatorSpace> {
    if psi.len() != a.dim() {
        return Err(Error::DimensionMismatch(format!("{} images for a source of dimension {}", psi.len(), a.dim())));
    }
    let (r, c) = b.ambient();
    for (k, g) in psi.iter().enumerate() {
        crate::numerics::check_shape(g, (r, c))?;
        let m = b.contains(g, tol)?;
        if !m.inside {
            return Err(Error::DimensionMismatch(format!("ψ image {k} lies outside B (residual {:.3e})", m.residual)));
        }
    }
    let rank = SubspaceBasis::span_or_zero(r, c, psi, tol)?.rank();
    if rank != b.dim() {
        return Err(Error::NotOnto { rank, expected: b.dim() });
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!("ψ is onto but not injective ({} → {})", a.dim(), b.dim())));
    }
    OperatorSpace::new(r, c, psi.to_vec(), tol)
}

/// `m(a₁, a₂) = ψ⁻¹(ψ(a₁)ψ(a₂))` in the basis of `A`.
pub fn transported_product(
    a: &OperatorSpace,
    b: &OperatorSpace,
    psi: &[ComplexMatrix],
    tol: &Tolerances,
) -> Result<BilinearProduct> {
    ambient_product(a, tol)?;
    ambient_product(b, tol)?;
    let bp = image_space(a, b, psi, tol)?;
    let m = ambient_product(&bp, tol)?;
    let residual = associativity_residual(&m);
    if residual > 1e-9 {
        return Err(Error::NotAssociative { residual });
    }
    Ok(m)
}

fn realize<'a>(space: &'a OperatorSpace, env: Option<&'a EnvelopeEmbedding>, tol: &Tolerances) -> Result<Realization<'a>> {
    Realization::new(space, env, tol)
}

fn isometry_defect(source: &OperatorSpace, images: &[ComplexMatrix]) -> f64 {
    source
        .basis()
        .iter()
        .zip(images)
        .map(|(f, g)| (spectral_norm(g) - spectral_norm(f)).abs())
        .fold(0.0, f64::max)
}

fn hom_residual(a: &OperatorSpace, ma: &BilinearProduct, images: &[ComplexMatrix]) -> f64 {
    let d = a.dim();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let lhs = &images[i] * &images[j];
            let mut rhs = ComplexMatrix::zeros(lhs.nrows(), lhs.ncols());
            for (k, g) in images.iter().enumerate() {
                rhs += g * ma.coeff(i, j, k);
            }
            worst = worst.max((lhs - rhs).norm());
        }
    }
    worst
}

fn multiplies(b: &OperatorSpace, images: &[ComplexMatrix], left: bool, tol: &Tolerances) -> Result<bool> {
    for p in images {
        for g in b.basis() {
            let prod = if left { p * g } else { g * p };
            if !b.contains(&prod, tol)?.inside {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn rank_of(images: &[ComplexMatrix], tol: &Tolerances) -> Result<usize> {
    let (r, c) = images.first().map(|m| (m.nrows(), m.ncols())).unwrap_or((1, 1));
    Ok(SubspaceBasis::span_or_zero(r, c, images, tol)?.rank())
}

/// Exact one-sided identity of `A` as an element of `A`, if any.
fn one_sided_identity(a: &OperatorSpace, side: IdentitySide, tol: &Tolerances) -> Option<ComplexMatrix> {
    let cols: Vec<ComplexMatrix> = a
        .basis()
        .iter()
        .map(|fk| {
            let blocks: Vec<ComplexMatrix> = a
                .basis()
                .iter()
                .map(|fi| match side {
                    IdentitySide::Right => fi * fk,
                    IdentitySide::Left => fk * fi,
                })
                .collect();
            stack_vec(&blocks)
        })
        .collect();
    let sys = stack_columns(&cols);
    let rhs = vectorize(&stack_vec(a.basis()));
    let (c, residual) = lstsq(&sys, &rhs, tol.rank);
    if residual > tol.mem * (1.0 + rhs.norm()) {
        return None;
    }
    Some(a.element(c.as_slice()))
}

/// Column of vectorized blocks, kept as a one-column matrix.
fn stack_vec(blocks: &[ComplexMatrix]) -> ComplexMatrix {
    let parts: Vec<DVector<_>> = blocks.iter().map(vectorize).collect();
    let len = parts.iter().map(|p| p.len()).sum();
    let mut out = ComplexMatrix::zeros(len, 1);
    let mut at = 0;
    for p in parts {
        out.view_mut((at, 0), (p.len(), 1)).copy_from(&p);
        at += p.len();
    }
    out
}

fn lift_images(env: &EnvelopeEmbedding, psi: &[ComplexMatrix]) -> Result<Vec<ComplexMatrix>> {
    let (n1, n2) = env.split();
    let n = env.size();
    psi.iter()
        .map(|g| {
            if g.nrows() > n1 || g.ncols() > n2 {
                return Err(Error::DimensionMismatch(format!(
                    "{}×{} image does not fit the {n1}×{n2} envelope corner",
                    g.nrows(),
                    g.ncols()
                )));
            }
            Ok(embed(g, n, n, 0, n1))
        })
        .collect()
}

fn require_feasible(report: &QmSolveReport, what: &'static str) -> Result<()> {
    if report.feasible {
        Ok(())
    } else {
        Err(Error::NoAmbientSolution { what, residual: report.stage1_residual })
    }
}

/// Full analysis of an onto linear map `ψ: A → B` given by `psi[k] = ψ(F_k)`.
pub fn analyze(
    a: &OperatorSpace,
    b: &OperatorSpace,
    psi: &[ComplexMatrix],
    env_a: Option<&EnvelopeEmbedding>,
    env_b: Option<&EnvelopeEmbedding>,
    opts: &SdpOptions,
    tol: &Tolerances,
) -> Result<IsometryAnalysis> {
    let ma = ambient_product(a, tol)?;
    ambient_product(b, tol)?;
    let bp = image_space(a, b, psi, tol)?;
    let transported = ambient_product(&bp, tol)?;

    let (fwd, inv) = rayon::join(|| cb_norm(a, psi, opts, None), || cb_norm(&bp, a.basis(), opts, None));
    let (psi_cb, inv_cb) = (fwd?.value, inv?.value);
    let is_complete_isometry = psi_cb <= 1.0 + ISOMETRY_TOL && inv_cb <= 1.0 + ISOMETRY_TOL;

    let env_bp = env_b.map(|env| env.with_basis(lift_images(env, psi)?, tol)).transpose()?;
    let real_a = realize(a, env_a, tol)?;
    let real_b = realize(&bp, env_bp.as_ref(), tol)?;
    // The w-system is the quasimultiplier problem on B for the product
    // carried over from A.
    let (z_report, w_report) = rayon::join(
        || min_norm_qm(&real_a, &transported, opts, tol),
        || min_norm_qm(&real_b, &ma, opts, tol),
    );
    let (z_report, w_report) = (z_report?, w_report?);
    require_feasible(&z_report, "z")?;
    require_feasible(&w_report, "w")?;
    let w_big = w_report.z_opt.clone().expect("feasible report carries a point");
    // Envelope solutions live in the (2,1) corner; act with the b-sized block.
    let w = match env_bp.as_ref() {
        Some(env) => {
            let (n1, _) = env.split();
            crate::numerics::block(&w_big, n1, b.ambient().1, 0, b.ambient().0)
        }
        None => w_big,
    };

    let pi_l_images: Vec<ComplexMatrix> = psi.iter().map(|g| g * &w).collect();
    let pi_r_images: Vec<ComplexMatrix> = psi.iter().map(|g| &w * g).collect();
    let hom_residuals = HomResiduals {
        pi_l: hom_residual(a, &ma, &pi_l_images),
        pi_r: hom_residual(a, &ma, &pi_r_images),
    };

    let identity_report = [IdentitySide::Right, IdentitySide::Left].into_iter().find_map(|side| {
        let e = one_sided_identity(a, side, tol)?;
        if spectral_norm(&e) > 1.0 + 1e-9 {
            return None;
        }
        let (coords, _) = a.coordinates(&e).ok()?;
        let mut psi_e = ComplexMatrix::zeros(psi[0].nrows(), psi[0].ncols());
        for (k, g) in psi.iter().enumerate() {
            psi_e += g * coords[k];
        }
        let unit = match side {
            IdentitySide::Right => &w * w.adjoint(),
            IdentitySide::Left => w.adjoint() * &w,
        };
        let unit_residual = b
            .basis()
            .iter()
            .map(|g| match side {
                IdentitySide::Right => (g * &unit - g).norm(),
                IdentitySide::Left => (&unit * g - g).norm(),
            })
            .fold(0.0, f64::max);
        Some(IdentityCheck {
            side,
            w_vs_psi_e_star_residual: (&w - psi_e.adjoint()).norm(),
            e,
            unit_residual,
        })
    });

    Ok(IsometryAnalysis {
        psi_images: psi.to_vec(),
        is_complete_isometry,
        psi_cb_norm: psi_cb,
        psi_inverse_cb_norm: inv_cb,
        pi_l_multiplies: multiplies(b, &pi_l_images, true, tol)?,
        pi_r_multiplies: multiplies(b, &pi_r_images, false, tol)?,
        pi_l_isometry_defect: isometry_defect(a, &pi_l_images),
        pi_r_isometry_defect: isometry_defect(a, &pi_r_images),
        pi_l_rank: rank_of(&pi_l_images, tol)?,
        pi_r_rank: rank_of(&pi_r_images, tol)?,
        z_report,
        w_report,
        pi_l_images,
        pi_r_images,
        hom_residuals,
        identity_report,
    })
}
