//! Semidefinite decisions: complete contractivity through CP extensions of
//! the Paulsen system, cb norms of linear maps, least-norm quasimultipliers,
//! OAP membership, the bootstrap maps and scaled representations.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mult::{domain_system, left_mult_space, right_mult_space, Provenance, Realization, Side};
use crate::numerics::{
    block, embed, lstsq, nullspace, psd_sqrt, re, spectral_norm, stack_columns, vectorize, ComplexMatrix,
    SubspaceBasis, Tolerances, C64,
};
use crate::opspace::OperatorSpace;
use crate::product::{
    amplified_element, associativity_residual, linear_map_ascent, product_from_qm, AscentOptions, BilinearProduct,
    OperatorSpaceImages,
};
use crate::sdp::{sdp_solve, SdpOptions, SdpOutcome, SdpProblem, SdpStatus, Term};

type Entries = Vec<(usize, usize, C64)>;

fn check_images(x: &OperatorSpace, images: &[ComplexMatrix]) -> Result<(usize, usize)> {
    if images.len() != x.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} images for a space of dimension {}",
            images.len(),
            x.dim()
        )));
    }
    let shape = images[0].shape();
    for g in images {
        if g.shape() != shape {
            return Err(Error::ShapeMismatch {
                expected: shape,
                found: g.shape(),
            });
        }
    }
    Ok(shape)
}

/// Choi-matrix constraints `Φ(A) = B` for `Φ: M_P → M_R`, with Choi matrix
/// `C = Σ E_ij ⊗ Φ(E_ij)`. Entry `(k,l)` of `Φ(A)` is `tr(G C)` with
/// `G[(j,l), (i,k)] = A_ij`.
struct ChoiBuilder {
    big_p: usize,
    big_r: usize,
}

impl ChoiBuilder {
    fn functional(&self, a: &ComplexMatrix, k: usize, l: usize) -> Entries {
        let r = self.big_r;
        let mut g = Vec::new();
        for j in 0..self.big_p {
            for i in 0..self.big_p {
                let v = a[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    g.push((j * r + l, i * r + k, v));
                }
            }
        }
        g
    }

    /// `Φ(A) = B` entrywise. For Hermitian `A`, `B` the lower triangle is
    /// implied and skipped. With `scaled`, nonzero targets are multiplied by
    /// the scalar block `t`.
    fn add(&self, prob: &mut SdpProblem, a: &ComplexMatrix, b: &ComplexMatrix, hermitian: bool, scaled: bool) {
        let r = self.big_r;
        for l in 0..r {
            for k in 0..r {
                if hermitian && k > l {
                    continue;
                }
                let g = self.functional(a, k, l);
                if scaled && b[(k, l)] != C64::new(0.0, 0.0) {
                    // tr(G C) − b_kl · t = 0 with b_kl real on the diagonal.
                    let mut terms = vec![Term { block: 0, entries: hermitize(&g) }];
                    terms.push(Term {
                        block: 1,
                        entries: vec![(0, 0, -b[(k, l)])],
                    });
                    prob.constrain(terms, 0.0);
                    if k != l {
                        prob.constrain(vec![Term { block: 0, entries: anti_hermitize(&g) }], 0.0);
                    }
                } else if hermitian && k == l {
                    prob.constrain(vec![Term { block: 0, entries: hermitize(&g) }], b[(k, l)].re);
                } else {
                    prob.constrain_complex(0, &g, b[(k, l)]);
                }
            }
        }
    }
}

fn hermitize(g: &[(usize, usize, C64)]) -> Entries {
    g.iter()
        .flat_map(|&(a, b, v)| [(a, b, v * 0.5), (b, a, v.conj() * 0.5)])
        .collect()
}

fn anti_hermitize(g: &[(usize, usize, C64)]) -> Entries {
    let h = C64::new(0.0, -0.5);
    g.iter()
        .flat_map(|&(a, b, v)| [(a, b, v * h), (b, a, -v.conj() * h)])
        .collect()
}

/// Paulsen corner data: `P1`, `P2` and the lifted generators on both sides.
fn paulsen_data(
    x: &OperatorSpace,
    images: &[ComplexMatrix],
) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix, ComplexMatrix, Vec<(ComplexMatrix, ComplexMatrix)>) {
    let (p, q) = x.ambient();
    let (r, s) = images[0].shape();
    let (bp, br) = (p + q, r + s);
    let p1 = embed(&crate::numerics::identity(p), bp, bp, 0, 0);
    let p2 = embed(&crate::numerics::identity(q), bp, bp, p, p);
    let q1 = embed(&crate::numerics::identity(r), br, br, 0, 0);
    let q2 = embed(&crate::numerics::identity(s), br, br, r, r);
    let lifted = x
        .basis()
        .iter()
        .zip(images)
        .map(|(f, g)| (embed(f, bp, bp, 0, p), embed(g, br, br, 0, r)))
        .collect();
    (p1, p2, q1, q2, lifted)
}

/// Decides whether `F_k ↦ G_k` is completely contractive: feasibility of a
/// unital CP map on `M_{p+q}` extending it from the Paulsen system.
pub fn cc_feasibility(x: &OperatorSpace, images: &[ComplexMatrix], opts: &SdpOptions) -> Result<SdpOutcome> {
    let (r, s) = check_images(x, images)?;
    let (p, q) = x.ambient();
    let builder = ChoiBuilder {
        big_p: p + q,
        big_r: r + s,
    };
    let (p1, p2, q1, q2, lifted) = paulsen_data(x, images);
    let mut prob = SdpProblem::new(vec![(p + q) * (r + s)]);
    builder.add(&mut prob, &p1, &q1, true, false);
    builder.add(&mut prob, &p2, &q2, true, false);
    for (a, b) in &lifted {
        builder.add(&mut prob, a, b, false, false);
    }
    sdp_solve(&prob, opts)
}

#[derive(Debug, Clone)]
pub struct CbNormReport {
    pub value: f64,
    pub status: SdpStatus,
    pub choi_certificate: ComplexMatrix,
    /// Level-1 domain element (coefficients) and its ratio `‖u(x)‖ / ‖x‖`.
    pub lower_witness: Vec<C64>,
    pub witness_ratio: f64,
    /// Ascent lower bound at level `max(r, s) + 1`, when requested.
    pub ascent_bound: Option<f64>,
    /// Set when the ascent bound and the SDP value differ by more than 1e-4.
    pub mismatch: bool,
}

/// `‖u‖_cb` as `min t` over CP maps with `Φ(P1) = t·Q1`, `Φ(P2) = t·Q2`
/// extending `F̂_k ↦ Ĝ_k`.
pub fn cb_norm(
    x: &OperatorSpace,
    images: &[ComplexMatrix],
    opts: &SdpOptions,
    cross_check: Option<&AscentOptions>,
) -> Result<CbNormReport> {
    let (r, s) = check_images(x, images)?;
    let (p, q) = x.ambient();
    let builder = ChoiBuilder {
        big_p: p + q,
        big_r: r + s,
    };
    let (p1, p2, q1, q2, lifted) = paulsen_data(x, images);
    let mut prob = SdpProblem::new(vec![(p + q) * (r + s), 1]);
    builder.add(&mut prob, &p1, &q1, true, true);
    builder.add(&mut prob, &p2, &q2, true, true);
    for (a, b) in &lifted {
        builder.add(&mut prob, a, b, false, false);
    }
    prob.objective = vec![Term {
        block: 1,
        entries: vec![(0, 0, re(1.0))],
    }];
    let out = sdp_solve(&prob, opts)?;
    let value = out.point[1][(0, 0)].re;

    let imgs = OperatorSpaceImages { images };
    let witness = linear_map_ascent(
        x,
        &imgs,
        1,
        &AscentOptions {
            restarts: 4,
            iters: 200,
            seed: 0,
        },
    );
    let ascent_bound = cross_check.map(|o| linear_map_ascent(x, &imgs, r.max(s) + 1, o).lower_bound);
    let mismatch = ascent_bound.is_some_and(|b| (b - value).abs() > 1e-4);
    Ok(CbNormReport {
        value,
        status: out.status,
        choi_certificate: out.point[0].clone(),
        lower_witness: witness.witness,
        witness_ratio: witness.lower_bound,
        ascent_bound,
        mismatch,
    })
}

#[derive(Debug, Clone)]
pub struct AffineMinNorm {
    pub point: ComplexMatrix,
    pub norm: f64,
    /// Dimension of the direction space.
    pub dim: usize,
    /// False when the SDP stage hit its iteration limit; the point is then
    /// still feasible but possibly not optimal.
    pub certified: bool,
    pub sdp_value: Option<f64>,
}

/// Least spectral norm over `z0 + span(directions)`.
pub fn min_norm_affine(z0: &ComplexMatrix, directions: &[ComplexMatrix], opts: &SdpOptions) -> Result<AffineMinNorm> {
    let (rows, cols) = z0.shape();
    let dir_frame = if directions.is_empty() {
        ComplexMatrix::zeros(rows * cols, 0)
    } else {
        let sb = SubspaceBasis::span_or_zero(rows, cols, directions, &Tolerances::default())?;
        sb.frame().clone()
    };
    let k = dir_frame.ncols();
    let project_out = |m: &ComplexMatrix| -> ComplexMatrix {
        let v = vectorize(m);
        let w = &v - &dir_frame * (dir_frame.adjoint() * &v);
        ComplexMatrix::from_column_slice(rows, cols, w.as_slice())
    };
    // Frobenius-least point of the affine set.
    let z_f = project_out(z0);
    let norm_f = spectral_norm(&z_f);
    if k == 0 {
        return Ok(AffineMinNorm {
            point: z_f,
            norm: norm_f,
            dim: 0,
            certified: true,
            sdp_value: None,
        });
    }

    // Restrict to the rows and columns any element can touch.
    let mut all = directions.to_vec();
    all.push(z0.clone());
    let used_rows: Vec<usize> = (0..rows).filter(|&i| all.iter().any(|m| m.row(i).iter().any(|c| c.norm() > 0.0))).collect();
    let used_cols: Vec<usize> = (0..cols).filter(|&j| all.iter().any(|m| m.column(j).iter().any(|c| c.norm() > 0.0))).collect();
    let (a, b) = (used_rows.len(), used_cols.len());
    let shrink = |m: &ComplexMatrix| ComplexMatrix::from_fn(a, b, |i, j| m[(used_rows[i], used_cols[j])]);
    let small_z0 = shrink(z0);
    let small_dirs: Vec<ComplexMatrix> = directions.iter().map(&shrink).collect();
    let frame = SubspaceBasis::span_or_zero(a, b, &small_dirs, &Tolerances::default())?
        .frame()
        .clone();
    let complement = nullspace(&frame.adjoint(), 1e-10);

    // Y = [[tI_a, Z], [Z*, tI_b]] ⪰ 0
    let n = a + b;
    let mut prob = SdpProblem::new(vec![n]);
    for i in 1..n {
        prob.constrain(
            vec![Term {
                block: 0,
                entries: vec![(i, i, re(1.0)), (0, 0, re(-1.0))],
            }],
            0.0,
        );
    }
    for (lo, hi) in [(0, a), (a, n)] {
        for i in lo..hi {
            for j in (i + 1)..hi {
                prob.constrain_complex(0, &[(j, i, re(1.0))], C64::new(0.0, 0.0));
            }
        }
    }
    let z0v = vectorize(&small_z0);
    for c in 0..complement.ncols() {
        let w = complement.column(c);
        // ⟨w, vec Z⟩ = Σ conj(w_t) Z_(t), with Z_(i,j) = Y[i, a + j].
        let mut g = Vec::new();
        for j in 0..b {
            for i in 0..a {
                let wt = w[j * a + i];
                if wt.norm() > 0.0 {
                    g.push((a + j, i, wt.conj()));
                }
            }
        }
        prob.constrain_complex(0, &g, w.dotc(&z0v));
    }
    prob.objective = vec![Term {
        block: 0,
        entries: vec![(0, 0, re(1.0))],
    }];
    let out = sdp_solve(&prob, opts)?;
    let y = &out.point[0];
    let z_small = block(y, 0, a, a, b);
    let mut z_sdp = ComplexMatrix::zeros(rows, cols);
    for (i, &ri) in used_rows.iter().enumerate() {
        for (j, &cj) in used_cols.iter().enumerate() {
            z_sdp[(ri, cj)] = z_small[(i, j)];
        }
    }
    // Snap back onto the affine set exactly.
    let z_p = z_f.clone() + (&z_sdp - project_out(&z_sdp));
    let norm_p = spectral_norm(&z_p);
    let (point, norm) = if norm_f <= norm_p + 1e-7 { (z_f, norm_f) } else { (z_p, norm_p) };
    Ok(AffineMinNorm {
        point,
        norm,
        dim: k,
        certified: out.status == SdpStatus::Feasible,
        sdp_value: Some(out.objective_value),
    })
}

#[derive(Debug, Clone)]
pub struct QmSolveReport {
    pub feasible: bool,
    pub qm_norm: Option<f64>,
    pub z_opt: Option<ComplexMatrix>,
    pub solution_space_dim: usize,
    pub provenance: Provenance,
    /// Least-squares residual of the exact linear stage.
    pub stage1_residual: f64,
    /// `max_{i,j} ‖F_i z F_j − m(F_i, F_j)‖` at `z_opt`.
    pub reconstruction_residual: Option<f64>,
    /// False when the norm minimization did not converge.
    pub certified: bool,
}

/// `inf ‖z‖` over `{z : F_i z F_j = m(F_i, F_j)}` in the quasimultiplier
/// domain of the realization.
pub fn min_norm_qm(real: &Realization<'_>, m: &BilinearProduct, opts: &SdpOptions, tol: &Tolerances) -> Result<QmSolveReport> {
    let x = real.working();
    let d = x.dim();
    if m.dim() != d {
        return Err(Error::DimensionMismatch(format!("product of dimension {} on a space of dimension {d}", m.dim())));
    }
    let domain = real.quasi_domain(tol)?;
    let (zr, zc) = domain.ambient();
    let sys = domain_system(x, &domain, Side::Quasi);
    let mut targets = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            targets.push(m.pair_matrix(x, i, j));
        }
    }
    let rhs_len: usize = targets.iter().map(|t| t.len()).sum();
    let mut rhs = DVector::zeros(rhs_len);
    let mut at = 0;
    for t in &targets {
        rhs.rows_mut(at, t.len()).copy_from(&vectorize(t));
        at += t.len();
    }
    let infeasible = |residual: f64| QmSolveReport {
        feasible: false,
        qm_norm: None,
        z_opt: None,
        solution_space_dim: 0,
        provenance: real.provenance(),
        stage1_residual: residual,
        reconstruction_residual: None,
        certified: true,
    };
    if sys.domain.is_empty() {
        let r = rhs.norm();
        if r > tol.mem * (1.0 + r) {
            return Ok(infeasible(r));
        }
    }
    let (s0, residual) = if sys.domain.is_empty() {
        (DVector::zeros(0), rhs.norm())
    } else {
        lstsq(&sys.action_map, &rhs, tol.rank)
    };
    if residual > tol.mem * (1.0 + rhs.norm()) {
        return Ok(infeasible(residual));
    }
    let mut z0 = ComplexMatrix::zeros(zr, zc);
    for (t, dm) in sys.domain.iter().enumerate() {
        z0 += dm * s0[t];
    }
    let null = if sys.domain.is_empty() {
        ComplexMatrix::zeros(0, 0)
    } else {
        nullspace(&sys.action_map, tol.rank)
    };
    let directions: Vec<ComplexMatrix> = (0..null.ncols())
        .map(|c| {
            let mut dm = ComplexMatrix::zeros(zr, zc);
            for (t, base) in sys.domain.iter().enumerate() {
                dm += base * null[(t, c)];
            }
            dm
        })
        .collect();
    let best = min_norm_affine(&z0, &directions, opts)?;
    let z = best.point;
    let mut recon = 0.0f64;
    for (i, fi) in x.basis().iter().enumerate() {
        let fz = fi * &z;
        for (j, fj) in x.basis().iter().enumerate() {
            recon = recon.max((&fz * fj - &targets[i * d + j]).norm());
        }
    }
    Ok(QmSolveReport {
        feasible: true,
        qm_norm: Some(best.norm),
        z_opt: Some(z),
        solution_space_dim: directions.len(),
        provenance: real.provenance(),
        stage1_residual: residual,
        reconstruction_residual: Some(recon),
        certified: best.certified,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OapVerdict {
    InOap,
    NotInOap,
    /// Relative data only: the relative failure does not refute membership.
    UpperBoundOnly,
}

impl OapVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            OapVerdict::InOap => "in_OAP",
            OapVerdict::NotInOap => "not_in_OAP",
            OapVerdict::UpperBoundOnly => "upper_bound_only",
        }
    }
}

#[derive(Debug, Clone)]
pub struct OapDecision {
    pub verdict: OapVerdict,
    pub qm_norm: Option<f64>,
    /// The verdict rests on exact linear algebra (no SDP involved or needed).
    pub rigorous: bool,
    /// The SDP stage did not converge and the norm exceeds one, so the
    /// verdict may be wrong.
    pub inconclusive: bool,
    pub report: QmSolveReport,
}

pub const OAP_NORM_TOL: f64 = 1e-6;

pub fn oap_decide(real: &Realization<'_>, m: &BilinearProduct, opts: &SdpOptions, tol: &Tolerances) -> Result<OapDecision> {
    let assoc = associativity_residual(m);
    if assoc > 1e-9 {
        return Err(Error::NotAssociative { residual: assoc });
    }
    let report = min_norm_qm(real, m, opts, tol)?;
    let within = report.qm_norm.is_some_and(|v| v <= 1.0 + OAP_NORM_TOL);
    let verdict = match (real.provenance(), within) {
        (_, true) => OapVerdict::InOap,
        (Provenance::Envelope, false) => OapVerdict::NotInOap,
        (Provenance::Relative, false) => OapVerdict::UpperBoundOnly,
    };
    let rigorous = !report.feasible || report.solution_space_dim == 0 || within;
    let inconclusive = report.feasible && !within && !report.certified;
    Ok(OapDecision {
        verdict,
        qm_norm: report.qm_norm,
        rigorous,
        inconclusive,
        report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BootstrapSide {
    Beta,
    Alpha,
}

#[derive(Debug, Clone)]
pub enum BootstrapStatus {
    /// No `γ` (resp. `ψ`) through multipliers represents `m`.
    GammaNotRepresentable { residual: f64 },
    Decided(SdpOutcome),
}

#[derive(Debug, Clone)]
pub struct BootstrapReport {
    pub side: BootstrapSide,
    pub status: BootstrapStatus,
    /// Multiplier images `γ(F_k)` or `ψ(F_k)` from the linear stage.
    pub factor_images: Option<Vec<ComplexMatrix>>,
    /// Domain (`R₂(X)` or `C₂(X)`) and images of the assembled map.
    pub domain: Option<OperatorSpace>,
    pub images: Option<Vec<ComplexMatrix>>,
}

impl BootstrapReport {
    /// `Some(true)` if completely contractive, `None` if inconclusive.
    pub fn verdict(&self) -> Option<bool> {
        match &self.status {
            BootstrapStatus::GammaNotRepresentable { .. } => Some(false),
            BootstrapStatus::Decided(out) => match out.status {
                SdpStatus::Feasible => Some(true),
                SdpStatus::Infeasible => Some(false),
                SdpStatus::MaxIter => None,
            },
        }
    }
}

/// Solves `m(F_i, ·) = γ(F_i)·` (or `m(·, F_j) = ·ψ(F_j)`) over a multiplier span.
fn factor_images(
    x: &OperatorSpace,
    m: &BilinearProduct,
    span: &SubspaceBasis,
    side: BootstrapSide,
    tol: &Tolerances,
) -> (Option<Vec<ComplexMatrix>>, f64) {
    let d = x.dim();
    let (rows, cols) = span.ambient();
    let frame = span.frame_matrices();
    let mut out = Vec::with_capacity(d);
    let mut worst = 0.0f64;
    for i in 0..d {
        let targets: Vec<ComplexMatrix> = (0..d)
            .map(|j| match side {
                BootstrapSide::Beta => m.pair_matrix(x, i, j),
                BootstrapSide::Alpha => m.pair_matrix(x, j, i),
            })
            .collect();
        let rhs = vectorize(&stack_columns(&targets));
        let columns: Vec<DVector<C64>> = frame
            .iter()
            .map(|a| {
                let prods: Vec<ComplexMatrix> = x
                    .basis()
                    .iter()
                    .map(|f| match side {
                        BootstrapSide::Beta => a * f,
                        BootstrapSide::Alpha => f * a,
                    })
                    .collect();
                vectorize(&stack_columns(&prods))
            })
            .collect();
        let (s, residual) = if columns.is_empty() {
            (DVector::zeros(0), rhs.norm())
        } else {
            lstsq(&ComplexMatrix::from_columns(&columns), &rhs, tol.rank)
        };
        worst = worst.max(residual);
        if residual > tol.mem * (1.0 + rhs.norm()) {
            return (None, worst);
        }
        let mut g = ComplexMatrix::zeros(rows, cols);
        for (t, a) in frame.iter().enumerate() {
            g += a * s[t];
        }
        out.push(g);
    }
    (Some(out), worst)
}

/// Complete contractivity of `β(x₁, x₂) = [γ(x₁), x₂]` on `R₂(X)` or of
/// `α(x₁; x₂) = [x₁; ψ(x₂)]` on `C₂(X)`, after solving for the multiplier
/// factor.
pub fn bootstrap_check(
    real: &Realization<'_>,
    m: &BilinearProduct,
    side: BootstrapSide,
    opts: &SdpOptions,
    tol: &Tolerances,
) -> Result<BootstrapReport> {
    let env = real.require_envelope()?;
    let x = real.working();
    let (n1, n2) = env.split();
    let n = env.size();
    let span = match side {
        BootstrapSide::Beta => left_mult_space(real, tol)?.solution_basis,
        BootstrapSide::Alpha => right_mult_space(real, tol)?.solution_basis,
    };
    let (factors, residual) = factor_images(x, m, &span, side, tol);
    let Some(factors) = factors else {
        return Ok(BootstrapReport {
            side,
            status: BootstrapStatus::GammaNotRepresentable { residual },
            factor_images: None,
            domain: None,
            images: None,
        });
    };
    let corners: Vec<ComplexMatrix> = x.basis().iter().map(|f| env.corner12(f)).collect();
    let (dom_basis, images): (Vec<ComplexMatrix>, Vec<ComplexMatrix>) = match side {
        BootstrapSide::Beta => {
            let mut dom = Vec::new();
            let mut img = Vec::new();
            for (c, g) in corners.iter().zip(&factors) {
                dom.push(embed(c, n1, 2 * n2, 0, 0));
                img.push(block(g, 0, n1, 0, n));
            }
            for (c, f) in corners.iter().zip(x.basis()) {
                dom.push(embed(c, n1, 2 * n2, 0, n2));
                img.push(block(f, 0, n1, 0, n));
            }
            (dom, img)
        }
        BootstrapSide::Alpha => {
            let mut dom = Vec::new();
            let mut img = Vec::new();
            for (c, f) in corners.iter().zip(x.basis()) {
                dom.push(embed(c, 2 * n1, n2, 0, 0));
                img.push(block(f, 0, n, n1, n2));
            }
            for (c, g) in corners.iter().zip(&factors) {
                dom.push(embed(c, 2 * n1, n2, n1, 0));
                img.push(block(g, 0, n, n1, n2));
            }
            (dom, img)
        }
    };
    let (dr, dc) = dom_basis[0].shape();
    let domain = OperatorSpace::new(dr, dc, dom_basis, tol)?;
    let outcome = cc_feasibility(&domain, &images, opts)?;
    Ok(BootstrapReport {
        side,
        status: BootstrapStatus::Decided(outcome),
        factor_images: Some(factors),
        domain: Some(domain),
        images: Some(images),
    })
}

#[derive(Debug, Clone)]
pub struct SoapRepReport {
    pub r: f64,
    /// `π(F_k)`, square matrices whose products realize `m_z`.
    pub images: Vec<ComplexMatrix>,
    pub multiplicativity_residual: f64,
    /// `max |‖π(x)‖ − r‖x‖|` over random unit `x` at levels 1 and 2.
    pub level1_error: f64,
    pub level2_error: f64,
}

/// `π(x) = [xz, x·√(r² − zz*)]` placed in the top rows of a square matrix.
pub fn soap_scaled_rep(
    real: &Realization<'_>,
    z: &ComplexMatrix,
    r: f64,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<SoapRepReport> {
    let x = real.working();
    if !(r > 0.0) {
        return Err(Error::DimensionMismatch(format!("scale must be positive, got {r}")));
    }
    let prod = product_from_qm(real, z, tol)?;
    let zz = z * z.adjoint();
    // `x ↦ xz + xS` with S supported where x's columns act.
    let (size, pi): (usize, Box<dyn Fn(&ComplexMatrix) -> ComplexMatrix>) = match real.envelope() {
        Some(env) => {
            let (n1, n2) = env.split();
            let corner = block(&zz, n1, n2, n1, n2);
            let gap = crate::numerics::identity(n2) * re(r * r) - corner;
            let s = sqrt_gap(&gap, tol)?;
            let s_big = embed(&s, env.size(), env.size(), n1, n1);
            let zc = z.clone();
            (env.size(), Box::new(move |m: &ComplexMatrix| m * &zc + m * &s_big))
        }
        None => {
            let (p, q) = x.ambient();
            let gap = crate::numerics::identity(q) * re(r * r) - &zz;
            let s = sqrt_gap(&gap, tol)?;
            let zc = z.clone();
            (
                p + q,
                Box::new(move |m: &ComplexMatrix| {
                    let mut out = ComplexMatrix::zeros(p + q, p + q);
                    out.view_mut((0, 0), (p, p)).copy_from(&(m * &zc));
                    out.view_mut((0, p), (p, q)).copy_from(&(m * &s));
                    out
                }),
            )
        }
    };
    let images: Vec<ComplexMatrix> = x.basis().iter().map(&pi).collect();
    let d = x.dim();
    let mut mult = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let mut rhs = ComplexMatrix::zeros(size, size);
            for (k, c) in prod.pair(i, j).iter().enumerate() {
                rhs += &images[k] * *c;
            }
            mult = mult.max((&images[i] * &images[j] - rhs).norm());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level_error = |n: usize| -> f64 {
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let coeffs: Vec<C64> = (0..n * n * d)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let xm = amplified_element(x, n, &coeffs);
            let xn = spectral_norm(&xm);
            if xn == 0.0 {
                continue;
            }
            let mut pm = ComplexMatrix::zeros(n * size, n * size);
            for a in 0..n {
                for b in 0..n {
                    let blk = x.element(&coeffs[(a * n + b) * d..(a * n + b + 1) * d]);
                    pm.view_mut((a * size, b * size), (size, size)).copy_from(&pi(&blk));
                }
            }
            worst = worst.max((spectral_norm(&pm) / xn - r).abs());
        }
        worst
    };
    let level1_error = level_error(1);
    let level2_error = level_error(2);
    Ok(SoapRepReport {
        r,
        images,
        multiplicativity_residual: mult,
        level1_error,
        level2_error,
    })
}

fn sqrt_gap(gap: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    match psd_sqrt(gap, tol) {
        Err(Error::NotPsd { min_eigenvalue }) => Err(Error::RankDeficient { min_eigenvalue }),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{real_matrix, unit};
    use crate::opspace::{matrix_units_block, EnvelopeEmbedding};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn c2() -> OperatorSpace {
        OperatorSpace::new(2, 2, vec![unit(2, 2, 0, 0), unit(2, 2, 1, 0)], &tol()).unwrap()
    }

    fn c2_env() -> EnvelopeEmbedding {
        EnvelopeEmbedding::new(
            2,
            1,
            vec![unit(3, 3, 0, 2), unit(3, 3, 1, 2)],
            &matrix_units_block(3, 0, 2, 0, 2),
            &[unit(3, 3, 2, 2)],
            &[unit(3, 3, 0, 2), unit(3, 3, 1, 2)],
            &tol(),
        )
        .unwrap()
    }

    fn m1() -> BilinearProduct {
        BilinearProduct::from_fn(2, |i, j, k| re(if i == j && j == k { 1.0 } else { 0.0 }))
    }

    fn m2() -> BilinearProduct {
        BilinearProduct::from_fn(2, |i, j, k| re(if j == 0 && i == k { 1.0 } else { 0.0 }))
    }

    #[test]
    fn cc_examples() {
        let x = c2();
        let opts = SdpOptions::default();
        let id = cc_feasibility(&x, x.basis(), &opts).unwrap();
        assert_eq!(id.status, SdpStatus::Feasible);
        assert!(id.cone_residual > -1e-7);
        let doubled: Vec<ComplexMatrix> = x.basis().iter().map(|f| f * re(2.0)).collect();
        assert_eq!(cc_feasibility(&x, &doubled, &opts).unwrap().status, SdpStatus::Infeasible);
    }

    #[test]
    fn cb_norm_examples() {
        let x = c2();
        let opts = SdpOptions::default();
        let id = cb_norm(&x, x.basis(), &opts, None).unwrap();
        assert!((id.value - 1.0).abs() < 1e-6, "{}", id.value);
        let gamma = vec![real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]), real_matrix(2, 2, &[0.0, 0.0, 0.0, 1.0])];
        let g = cb_norm(&x, &gamma, &opts, None).unwrap();
        assert!((g.value - 1.0).abs() < 1e-6, "{}", g.value);
        assert!(g.value >= g.witness_ratio - 1e-6);
        // Column norm vs. max entry: the transpose-like map onto the row
        // space has cb norm √2.
        let r2: Vec<ComplexMatrix> = vec![unit(2, 2, 0, 0), unit(2, 2, 0, 1)];
        let t = cb_norm(&x, &r2, &opts, None).unwrap();
        assert!((t.value - 2f64.sqrt()).abs() < 1e-5, "{}", t.value);
    }

    #[test]
    fn min_norm_examples() {
        let t = tol();
        let opts = SdpOptions::default();
        let x = c2();
        let rep = min_norm_qm(&Realization::relative(&x), &m2(), &opts, &t).unwrap();
        assert!(rep.feasible);
        assert_eq!(rep.solution_space_dim, 2);
        assert!((rep.qm_norm.unwrap() - 1.0).abs() < 1e-9);
        assert!((rep.z_opt.as_ref().unwrap() - unit(2, 2, 0, 0)).norm() < 1e-9);

        let env = c2_env();
        let rep = min_norm_qm(&Realization::enveloped(&env), &m1(), &opts, &t).unwrap();
        assert!(!rep.feasible);
        let dec = oap_decide(&Realization::enveloped(&env), &m1(), &opts, &t).unwrap();
        assert_eq!(dec.verdict, OapVerdict::NotInOap);
        assert!(dec.rigorous);
        let dec = oap_decide(&Realization::enveloped(&env), &m2(), &opts, &t).unwrap();
        assert_eq!(dec.verdict, OapVerdict::InOap);
        assert!((dec.qm_norm.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn affine_min_norm_needs_sdp() {
        // diag(1 + s, 2s): the Frobenius-least point s = -1/5 has norm 0.8,
        // the spectral minimum balances |1 + s| = 2|s| at s = -1/3.
        let z0 = unit(2, 2, 0, 0);
        let dir = unit(2, 2, 0, 0) + unit(2, 2, 1, 1) * re(2.0);
        let rep = min_norm_affine(&z0, std::slice::from_ref(&dir), &SdpOptions::default()).unwrap();
        assert!(rep.certified);
        assert!(rep.norm >= 2.0 / 3.0 - 1e-12);
        assert!(rep.norm <= 2.0 / 3.0 + 1e-6, "{}", rep.norm);
    }

    #[test]
    fn bootstrap_examples() {
        let t = tol();
        let opts = SdpOptions::default();
        let env = c2_env();
        let real = Realization::enveloped(&env);
        let b2 = bootstrap_check(&real, &m2(), BootstrapSide::Beta, &opts, &t).unwrap();
        assert_eq!(b2.verdict(), Some(true));
        let b1 = bootstrap_check(&real, &m1(), BootstrapSide::Beta, &opts, &t).unwrap();
        assert_eq!(b1.verdict(), Some(false));
        let dom = b1.domain.as_ref().unwrap();
        let norm = cb_norm(dom, b1.images.as_ref().unwrap(), &opts, None).unwrap();
        assert!(norm.value > 1.5f64.sqrt() - 1e-4, "{}", norm.value);
        let a1 = bootstrap_check(&real, &m1(), BootstrapSide::Alpha, &opts, &t).unwrap();
        assert_eq!(a1.verdict(), Some(false));
    }

    #[test]
    fn soap_examples() {
        let t = tol();
        let env = c2_env();
        let real = Realization::enveloped(&env);
        let z = unit(3, 3, 2, 0);
        let rep = soap_scaled_rep(&real, &z, 1.0, 50, 1, &t).unwrap();
        assert!(rep.multiplicativity_residual < 1e-12);
        assert!(rep.level1_error < 1e-8 && rep.level2_error < 1e-8);
        let zero = ComplexMatrix::zeros(3, 3);
        let rep = soap_scaled_rep(&real, &zero, 1.0, 50, 1, &t).unwrap();
        assert!(rep.multiplicativity_residual < 1e-12);
        assert!(rep.level1_error < 1e-8);
        assert!(matches!(
            soap_scaled_rep(&real, &(z.clone() * re(2.0)), 1.0, 5, 1, &t),
            Err(Error::RankDeficient { .. })
        ));
    }
}
