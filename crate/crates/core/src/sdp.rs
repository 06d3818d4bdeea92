//! Splitting solver for semidefinite problems over block-diagonal Hermitian
//! variables with real affine constraints `⟨H_t, C⟩ = b_t`.
//!
//! Douglas–Rachford (ADMM) between the affine set and the PSD cone. The
//! affine projection uses a pseudo-inverse of `A Aᵀ`, factored separately on
//! each group of constraints that share variables.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::numerics::{min_eigenvalue, ComplexMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    pub eps: f64,
    pub max_iter: usize,
    pub relaxation: f64,
    /// Consecutive iterations of a stable nonzero gap before declaring
    /// infeasibility.
    pub stall: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            eps: 1e-7,
            max_iter: 50_000,
            relaxation: 1.5,
            stall: 2000,
        }
    }
}

/// `tr(H · C_block)` for the Hermitian `H = Σ value · E_(row, col)`
/// (repeated positions add up).
#[derive(Debug, Clone)]
pub struct Term {
    pub block: usize,
    pub entries: Vec<(usize, usize, C64)>,
}

impl Term {
    pub fn dense(block: usize, h: &ComplexMatrix) -> Self {
        let mut entries = Vec::new();
        for j in 0..h.ncols() {
            for i in 0..h.nrows() {
                if h[(i, j)] != C64::new(0.0, 0.0) {
                    entries.push((i, j, h[(i, j)]));
                }
            }
        }
        Self { block, entries }
    }

    fn merged(&self) -> BTreeMap<(usize, usize), C64> {
        let mut map = BTreeMap::new();
        for &(i, j, v) in &self.entries {
            *map.entry((i, j)).or_insert(C64::new(0.0, 0.0)) += v;
        }
        map
    }
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub terms: Vec<Term>,
    pub target: f64,
}

/// Find `C = diag(C_1, …, C_B) ⪰ 0` with all constraints satisfied,
/// minimizing the objective (if any terms are given).
#[derive(Debug, Clone, Default)]
pub struct SdpProblem {
    pub blocks: Vec<usize>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<Term>,
}

impl SdpProblem {
    pub fn new(blocks: Vec<usize>) -> Self {
        Self {
            blocks,
            constraints: Vec::new(),
            objective: Vec::new(),
        }
    }

    pub fn constrain(&mut self, terms: Vec<Term>, target: f64) {
        self.constraints.push(Constraint { terms, target });
    }

    /// Adds `⟨H, C⟩ = target` for the Hermitian parts `(G + G*)/2` and
    /// `(G − G*)/2i` of a general coefficient, i.e. `tr(G C) = target`.
    pub fn constrain_complex(&mut self, block: usize, g: &[(usize, usize, C64)], target: C64) {
        let half = C64::new(0.5, 0.0);
        let half_i = C64::new(0.0, -0.5);
        let mut re = Vec::with_capacity(2 * g.len());
        let mut im = Vec::with_capacity(2 * g.len());
        for &(a, b, v) in g {
            re.push((a, b, v * half));
            re.push((b, a, v.conj() * half));
            im.push((a, b, v * half_i));
            im.push((b, a, -v.conj() * half_i));
        }
        self.constrain(vec![Term { block, entries: re }], target.re);
        self.constrain(vec![Term { block, entries: im }], target.im);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Feasible,
    Infeasible,
    /// Iteration budget exhausted; inconclusive.
    MaxIter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Infeasibility {
    /// The affine constraints alone have no solution (exact).
    Inconsistent { residual: f64 },
    /// The iterates settled at a positive distance between the affine set
    /// and the cone (heuristic).
    Separated { distance: f64 },
}

#[derive(Debug, Clone)]
pub struct SdpOutcome {
    pub status: SdpStatus,
    pub point: Vec<ComplexMatrix>,
    pub objective_value: f64,
    /// `‖A c − b‖ / (1 + ‖b‖)` at the returned point.
    pub affine_residual: f64,
    /// Most negative eigenvalue of the returned point (0 when PSD).
    pub cone_residual: f64,
    pub iterations: usize,
    pub infeasibility: Option<Infeasibility>,
}

impl SdpOutcome {
    pub fn is_feasible(&self) -> bool {
        self.status == SdpStatus::Feasible
    }
}

type SparseRow = Vec<(usize, f64)>;

struct Layout {
    complex: bool,
    /// Real sizes of the cone blocks.
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    len: usize,
}

#[inline]
fn packed(a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    b * (b + 1) / 2 + a
}

impl Layout {
    fn new(blocks: &[usize], complex: bool) -> Self {
        let sizes: Vec<usize> = blocks.iter().map(|&n| if complex { 2 * n } else { n }).collect();
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut len = 0;
        for &s in &sizes {
            offsets.push(len);
            len += s * (s + 1) / 2;
        }
        Self {
            complex,
            sizes,
            offsets,
            len,
        }
    }

    /// Appends the svec coefficients of `⟨h, C_block⟩` to `row`.
    fn push_term(&self, row: &mut Vec<(usize, f64)>, term: &Term) {
        let off = self.offsets[term.block];
        let half_s2 = std::f64::consts::FRAC_1_SQRT_2;
        let mut push = |a: usize, b: usize, v: f64| {
            if v != 0.0 {
                row.push((off + packed(a, b), if a == b { v } else { v * half_s2 }));
            }
        };
        if self.complex {
            // ⟨H, C⟩ = ½⟨realify H, realify C⟩
            let n = self.sizes[term.block] / 2;
            for &(a, b, v) in &term.entries {
                push(a, b, 0.5 * v.re);
                push(n + a, n + b, 0.5 * v.re);
                push(a, n + b, -0.5 * v.im);
                push(n + a, b, 0.5 * v.im);
            }
        } else {
            for &(a, b, v) in &term.entries {
                push(a, b, v.re);
            }
        }
    }

    fn unpack(&self, v: &[f64], block: usize) -> DMatrix<f64> {
        let n = self.sizes[block];
        let off = self.offsets[block];
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        DMatrix::from_fn(n, n, |a, b| {
            let x = v[off + packed(a, b)];
            if a == b {
                x
            } else {
                x * inv
            }
        })
    }

    fn pack(&self, m: &DMatrix<f64>, v: &mut [f64], block: usize) {
        let n = self.sizes[block];
        let off = self.offsets[block];
        let s2 = std::f64::consts::SQRT_2;
        for b in 0..n {
            for a in 0..=b {
                v[off + packed(a, b)] = if a == b { m[(a, a)] } else { s2 * 0.5 * (m[(a, b)] + m[(b, a)]) };
            }
        }
    }

    fn project_cone(&self, v: &mut [f64]) {
        for block in 0..self.sizes.len() {
            let n = self.sizes[block];
            if n == 1 {
                let i = self.offsets[block];
                v[i] = v[i].max(0.0);
                continue;
            }
            let m = self.unpack(v, block);
            let eig = SymmetricEigen::new(m);
            if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
                continue;
            }
            let clipped = eig.eigenvalues.map(|l| l.max(0.0));
            let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
            self.pack(&rebuilt, v, block);
        }
    }

    fn to_complex(&self, v: &[f64], block: usize) -> ComplexMatrix {
        let y = self.unpack(v, block);
        if !self.complex {
            return y.map(|x| C64::new(x, 0.0));
        }
        let n = self.sizes[block] / 2;
        ComplexMatrix::from_fn(n, n, |a, b| {
            C64::new(
                0.5 * (y[(a, b)] + y[(n + a, n + b)]),
                0.5 * (y[(n + a, b)] - y[(a, n + b)]),
            )
        })
    }
}

/// Affine projector `v ↦ v − Aᵀ(AAᵀ)⁺(Av − b)`, factored per group of rows
/// that share variables.
struct AffineProjector {
    groups: Vec<Group>,
}

struct Group {
    rows: Vec<SparseRow>,
    rhs: DVector<f64>,
    pinv: DMatrix<f64>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl AffineProjector {
    fn new(rows: Vec<SparseRow>, rhs: Vec<f64>, nvars: usize) -> std::result::Result<Self, f64> {
        let m = rows.len();
        let mut parent: Vec<usize> = (0..m).collect();
        let mut owner = vec![usize::MAX; nvars];
        for (r, row) in rows.iter().enumerate() {
            for &(j, _) in row {
                if owner[j] == usize::MAX {
                    owner[j] = r;
                } else {
                    let (a, b) = (find(&mut parent, owner[j]), find(&mut parent, r));
                    if a != b {
                        parent[a] = b;
                    }
                }
            }
        }
        let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for r in 0..m {
            let root = find(&mut parent, r);
            members.entry(root).or_default().push(r);
        }
        let mut groups = Vec::with_capacity(members.len());
        let mut worst_inconsistency = 0.0f64;
        let mut dense = vec![0.0; nvars];
        for (_, idx) in members {
            let g_rows: Vec<SparseRow> = idx.iter().map(|&r| rows[r].clone()).collect();
            let g_rhs = DVector::from_iterator(idx.len(), idx.iter().map(|&r| rhs[r]));
            let k = g_rows.len();
            let mut gram = DMatrix::zeros(k, k);
            for a in 0..k {
                for &(j, v) in &g_rows[a] {
                    dense[j] = v;
                }
                for b in a..k {
                    let dot: f64 = g_rows[b].iter().map(|&(j, v)| dense[j] * v).sum();
                    gram[(a, b)] = dot;
                    gram[(b, a)] = dot;
                }
                for &(j, _) in &g_rows[a] {
                    dense[j] = 0.0;
                }
            }
            let eig = SymmetricEigen::new(gram);
            let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
            let cutoff = 1e-10 * lmax.max(1e-300);
            let mut pinv = DMatrix::zeros(k, k);
            let mut in_range = DVector::zeros(k);
            for (t, &l) in eig.eigenvalues.iter().enumerate() {
                if l > cutoff {
                    let v = eig.eigenvectors.column(t);
                    pinv += (v * v.transpose()) / l;
                    in_range += v * v.dot(&g_rhs);
                }
            }
            let gap = (&g_rhs - in_range).norm();
            if gap > 1e-9 * (1.0 + g_rhs.norm()) {
                worst_inconsistency = worst_inconsistency.max(gap);
            }
            groups.push(Group {
                rows: g_rows,
                rhs: g_rhs,
                pinv,
            });
        }
        if worst_inconsistency > 0.0 {
            return Err(worst_inconsistency);
        }
        Ok(Self { groups })
    }

    fn project(&self, v: &mut [f64]) {
        for g in &self.groups {
            let y = DVector::from_iterator(
                g.rows.len(),
                g.rows
                    .iter()
                    .zip(g.rhs.iter())
                    .map(|(row, b)| row.iter().map(|&(j, a)| a * v[j]).sum::<f64>() - b),
            );
            let w = &g.pinv * y;
            for (row, wt) in g.rows.iter().zip(w.iter()) {
                for &(j, a) in row {
                    v[j] -= a * wt;
                }
            }
        }
    }

    fn residual(&self, v: &[f64]) -> (f64, f64) {
        let mut r2 = 0.0;
        let mut b2 = 0.0;
        for g in &self.groups {
            for (row, b) in g.rows.iter().zip(g.rhs.iter()) {
                let d = row.iter().map(|&(j, a)| a * v[j]).sum::<f64>() - b;
                r2 += d * d;
                b2 += b * b;
            }
        }
        (r2.sqrt(), b2.sqrt())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn is_real(t: &Term) -> bool {
    t.merged().values().all(|c| c.im == 0.0)
}

fn is_imaginary(t: &Term) -> bool {
    t.merged().values().all(|c| c.re == 0.0)
}

pub fn sdp_solve(problem: &SdpProblem, opts: &SdpOptions) -> Result<SdpOutcome> {
    for c in problem.constraints.iter().flat_map(|c| c.terms.iter()).chain(problem.objective.iter()) {
        if c.block >= problem.blocks.len() {
            return Err(Error::DimensionMismatch(format!("term refers to missing block {}", c.block)));
        }
        let n = problem.blocks[c.block];
        if let Some(&(i, j, _)) = c.entries.iter().find(|&&(i, j, _)| i >= n || j >= n) {
            return Err(Error::ShapeMismatch {
                expected: (n, n),
                found: (i + 1, j + 1),
            });
        }
        let map = c.merged();
        let mut r2 = 0.0;
        let mut n2 = 0.0;
        for (&(i, j), v) in &map {
            let w = map.get(&(j, i)).copied().unwrap_or(C64::new(0.0, 0.0));
            r2 += (v - w.conj()).norm_sqr();
            n2 += v.norm_sqr();
        }
        if r2.sqrt() > 1e-9 * (1.0 + n2.sqrt()) {
            return Err(Error::NotHermitian { residual: r2.sqrt() });
        }
    }

    // Real data admits a real symmetric solution whenever a Hermitian one
    // exists (average with the conjugate), so skip the doubling.
    let mut kept: Vec<&Constraint> = Vec::with_capacity(problem.constraints.len());
    let mut real_mode = problem.objective.iter().all(is_real);
    for c in &problem.constraints {
        if c.terms.iter().all(is_real) {
            kept.push(c);
        } else if c.target == 0.0 && c.terms.iter().all(is_imaginary) {
            continue;
        } else {
            real_mode = false;
        }
    }
    let constraints: Vec<&Constraint> = if real_mode {
        kept
    } else {
        problem.constraints.iter().collect()
    };

    let layout = Layout::new(&problem.blocks, !real_mode);
    let mut rows = Vec::with_capacity(constraints.len());
    let mut rhs = Vec::with_capacity(constraints.len());
    for c in &constraints {
        let mut row = Vec::new();
        for t in &c.terms {
            layout.push_term(&mut row, t);
        }
        row.sort_by_key(|&(j, _)| j);
        let mut merged: SparseRow = Vec::with_capacity(row.len());
        for (j, v) in row {
            match merged.last_mut() {
                Some((k, w)) if *k == j => *w += v,
                _ => merged.push((j, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        if merged.is_empty() {
            if c.target.abs() > 1e-12 {
                return Ok(inconsistent(problem, c.target.abs()));
            }
            continue;
        }
        rows.push(merged);
        rhs.push(c.target);
    }
    let mut cost = Vec::new();
    for t in &problem.objective {
        layout.push_term(&mut cost, t);
    }
    let mut c = vec![0.0; layout.len];
    for (j, v) in cost {
        c[j] += v;
    }

    let projector = match AffineProjector::new(rows, rhs, layout.len) {
        Ok(p) => p,
        Err(gap) => return Ok(inconsistent(problem, gap)),
    };

    let n = layout.len;
    let alpha = opts.relaxation;
    let mut rho = 1.0f64;
    let mut x = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut xhat = vec![0.0; n];
    let mut z_prev = vec![0.0; n];
    let mut status = SdpStatus::MaxIter;
    let mut iterations = 0;
    let mut stable = 0usize;
    let mut last_gap = f64::NAN;
    let mut separation = 0.0;

    for it in 0..opts.max_iter {
        iterations = it + 1;
        for j in 0..n {
            x[j] = z[j] - u[j] - c[j] / rho;
        }
        projector.project(&mut x);
        for j in 0..n {
            xhat[j] = alpha * x[j] + (1.0 - alpha) * z[j];
        }
        z_prev.copy_from_slice(&z);
        for j in 0..n {
            z[j] = xhat[j] + u[j];
        }
        layout.project_cone(&mut z);
        for j in 0..n {
            u[j] += xhat[j] - z[j];
        }

        let r = x.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let s = rho * z.iter().zip(&z_prev).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let scale_p = 1.0 + norm(&x).max(norm(&z));
        let scale_d = 1.0 + rho * norm(&u);
        let (r_rel, s_rel) = (r / scale_p, s / scale_d);
        if r_rel < opts.eps && s_rel < opts.eps {
            status = SdpStatus::Feasible;
            break;
        }

        if r_rel > 10.0 * opts.eps && last_gap.is_finite() && ((r - last_gap).abs() <= 1e-7 * r) {
            stable += 1;
            if stable >= opts.stall {
                status = SdpStatus::Infeasible;
                separation = r;
                break;
            }
        } else {
            stable = 0;
        }
        last_gap = r;

        if (it + 1) % 50 == 0 {
            let old = rho;
            if r_rel > 10.0 * s_rel {
                rho = (rho * 2.0).min(1e4);
            } else if s_rel > 10.0 * r_rel {
                rho = (rho / 2.0).max(1e-4);
            }
            if rho != old {
                let f = old / rho;
                u.iter_mut().for_each(|v| *v *= f);
                stable = 0;
            }
        }
    }

    let point: Vec<ComplexMatrix> = (0..problem.blocks.len()).map(|b| layout.to_complex(&z, b)).collect();
    let (res, bnorm) = projector.residual(&z);
    let cone_residual = point.iter().map(|p| min_eigenvalue(p).min(0.0)).fold(0.0, f64::min);
    let objective_value = c.iter().zip(&z).map(|(a, b)| a * b).sum();
    Ok(SdpOutcome {
        status,
        point,
        objective_value,
        affine_residual: res / (1.0 + bnorm),
        cone_residual,
        iterations,
        infeasibility: (status == SdpStatus::Infeasible).then_some(Infeasibility::Separated { distance: separation }),
    })
}

fn inconsistent(problem: &SdpProblem, residual: f64) -> SdpOutcome {
    SdpOutcome {
        status: SdpStatus::Infeasible,
        point: problem.blocks.iter().map(|&n| ComplexMatrix::zeros(n, n)).collect(),
        objective_value: f64::NAN,
        affine_residual: residual,
        cone_residual: 0.0,
        iterations: 0,
        infeasibility: Some(Infeasibility::Inconsistent { residual }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{identity, re, unit};

    fn trace_problem(n: usize, target: f64) -> SdpProblem {
        let mut p = SdpProblem::new(vec![n]);
        p.constrain(vec![Term::dense(0, &identity(n))], target);
        p
    }

    #[test]
    fn unit_trace_is_feasible() {
        let out = sdp_solve(&trace_problem(2, 1.0), &SdpOptions::default()).unwrap();
        assert_eq!(out.status, SdpStatus::Feasible);
        let c = &out.point[0];
        assert!((c.trace().re - 1.0).abs() < 1e-6);
        assert!(out.cone_residual > -1e-7);
    }

    #[test]
    fn negative_trace_is_infeasible() {
        let out = sdp_solve(&trace_problem(2, -1.0), &SdpOptions::default()).unwrap();
        assert_eq!(out.status, SdpStatus::Infeasible);
        assert!(matches!(out.infeasibility, Some(Infeasibility::Separated { .. })));
    }

    #[test]
    fn contradictory_rows_are_inconsistent() {
        let mut p = trace_problem(2, 1.0);
        p.constrain(vec![Term::dense(0, &(identity(2) * re(2.0)))], 3.0);
        let out = sdp_solve(&p, &SdpOptions::default()).unwrap();
        assert!(matches!(out.infeasibility, Some(Infeasibility::Inconsistent { .. })));
    }

    #[test]
    fn minimizes_spectral_norm_of_fixed_block() {
        // [[t, 0, z],[., t, .]] with z = 2: min t subject to [[t, 2],[2, t]] ⪰ 0 is 2.
        let mut p = SdpProblem::new(vec![2]);
        p.constrain(vec![Term::dense(0, &((unit(2, 2, 0, 1) + unit(2, 2, 1, 0)) * re(0.5)))], 2.0);
        p.constrain(vec![Term::dense(0, &(unit(2, 2, 0, 0) - unit(2, 2, 1, 1)))], 0.0);
        p.objective = vec![Term::dense(0, &unit(2, 2, 0, 0))];
        let out = sdp_solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(out.status, SdpStatus::Feasible);
        assert!((out.objective_value - 2.0).abs() < 1e-5, "{}", out.objective_value);
    }

    #[test]
    fn complex_coefficients_use_doubled_cone() {
        // C[0][1] = i forces a complex point; min C00 + C11 is 2.
        let mut p = SdpProblem::new(vec![2]);
        p.constrain_complex(0, &[(1, 0, re(1.0))], C64::new(0.0, 1.0));
        p.objective = vec![Term::dense(0, &identity(2))];
        let out = sdp_solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(out.status, SdpStatus::Feasible);
        let c = &out.point[0];
        assert!((c[(0, 1)] - C64::new(0.0, 1.0)).norm() < 1e-5);
        assert!((out.objective_value - 2.0).abs() < 1e-5);
    }

    #[test]
    fn rejects_non_hermitian_coefficients() {
        let mut p = SdpProblem::new(vec![2]);
        p.constrain(vec![Term::dense(0, &unit(2, 2, 0, 1))], 0.0);
        assert!(matches!(sdp_solve(&p, &SdpOptions::default()), Err(Error::NotHermitian { .. })));
    }
}
