//! Bilinear products stored as structure tensors, and lower bounds on their
//! amplified (Christensen–Sinclair) norms by alternating ascent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mult::Realization;
use crate::numerics::{embed, re, top_singular_triple, ComplexMatrix, Tolerances, C64};
use crate::opspace::OperatorSpace;

/// `m(F_i, F_j) = Σ_k c[i][j][k] F_k` relative to the owning space's basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearProduct {
    d: usize,
    tensor: Vec<C64>,
}

impl BilinearProduct {
    pub fn zero(d: usize) -> Self {
        Self {
            d,
            tensor: vec![C64::new(0.0, 0.0); d * d * d],
        }
    }

    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize, usize) -> C64) -> Self {
        let mut m = Self::zero(d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    m.tensor[(i * d + j) * d + k] = f(i, j, k);
                }
            }
        }
        m
    }

    /// Tensor in `i, j, k` order, flattened.
    pub fn from_tensor(d: usize, tensor: Vec<C64>) -> Result<Self> {
        if tensor.len() != d * d * d {
            return Err(Error::DimensionMismatch(format!(
                "tensor has {} entries, expected {}",
                tensor.len(),
                d * d * d
            )));
        }
        Ok(Self { d, tensor })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn tensor(&self) -> &[C64] {
        &self.tensor
    }

    #[inline]
    pub fn coeff(&self, i: usize, j: usize, k: usize) -> C64 {
        self.tensor[(i * self.d + j) * self.d + k]
    }

    /// Coordinates of `m(F_i, F_j)`.
    pub fn pair(&self, i: usize, j: usize) -> &[C64] {
        let start = (i * self.d + j) * self.d;
        &self.tensor[start..start + self.d]
    }

    /// `m(x, y)` in coordinates.
    pub fn apply(&self, x: &[C64], y: &[C64]) -> Vec<C64> {
        let d = self.d;
        let mut out = vec![C64::new(0.0, 0.0); d];
        for i in 0..d {
            if x[i] == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..d {
                let w = x[i] * y[j];
                if w == C64::new(0.0, 0.0) {
                    continue;
                }
                for (k, o) in out.iter_mut().enumerate() {
                    *o += w * self.coeff(i, j, k);
                }
            }
        }
        out
    }

    /// `m(F_i, F_j)` as a matrix of `space`.
    pub fn pair_matrix(&self, space: &OperatorSpace, i: usize, j: usize) -> ComplexMatrix {
        space.element(self.pair(i, j))
    }

    pub fn is_zero(&self) -> bool {
        self.tensor.iter().all(|c| c.norm() == 0.0)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.tensor
            .iter()
            .zip(&other.tensor)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Structure tensor of `m_z(x, y) = x z y` on the working copy of `X`.
pub fn product_from_qm(real: &Realization<'_>, z: &ComplexMatrix, tol: &Tolerances) -> Result<BilinearProduct> {
    let domain = real.quasi_domain(tol)?;
    let membership = domain.contains(z, tol)?;
    if !membership.inside {
        return Err(Error::NotAQuasimultiplier {
            residual: membership.residual,
        });
    }
    let x = real.working();
    let d = x.dim();
    let mut tensor = Vec::with_capacity(d * d * d);
    for fi in x.basis() {
        let fz = fi * z;
        for fj in x.basis() {
            let target = &fz * fj;
            let (coords, residual) = x.coordinates(&target)?;
            if residual > tol.mem * (1.0 + target.norm()) {
                return Err(Error::NotAQuasimultiplier { residual });
            }
            tensor.extend(coords.iter().copied());
        }
    }
    BilinearProduct::from_tensor(d, tensor)
}

/// `max_{i,j,k} ‖m(m(F_i,F_j),F_k) − m(F_i,m(F_j,F_k))‖₂` in coefficient space.
pub fn associativity_residual(m: &BilinearProduct) -> f64 {
    let d = m.dim();
    let mut worst = 0.0f64;
    let mut e = vec![C64::new(0.0, 0.0); d];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                e.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
                e[k] = re(1.0);
                let left = m.apply(m.pair(i, j), &e);
                e[k] = C64::new(0.0, 0.0);
                e[i] = re(1.0);
                let right = m.apply(&e, m.pair(j, k));
                e[i] = C64::new(0.0, 0.0);
                let diff: f64 = left.iter().zip(&right).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
                worst = worst.max(diff);
            }
        }
    }
    worst
}

/// Entrywise linear combination of tensors.
pub fn combine(products: &[&BilinearProduct], weights: &[C64]) -> Result<BilinearProduct> {
    if products.is_empty() || products.len() != weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} products with {} weights",
            products.len(),
            weights.len()
        )));
    }
    let d = products[0].dim();
    if products.iter().any(|m| m.dim() != d) {
        return Err(Error::DimensionMismatch("products live on spaces of different dimension".into()));
    }
    let mut out = BilinearProduct::zero(d);
    for (m, w) in products.iter().zip(weights) {
        for (o, c) in out.tensor.iter_mut().zip(&m.tensor) {
            *o += w * c;
        }
    }
    Ok(out)
}

/// Ambient matrix product restricted to `X`, when `X` is closed under it.
pub fn algebra_closure_check(x: &OperatorSpace, tol: &Tolerances) -> Result<Option<BilinearProduct>> {
    let (p, q) = x.ambient();
    if p != q {
        return Err(Error::NotSquare { rows: p, cols: q });
    }
    let d = x.dim();
    let mut tensor = Vec::with_capacity(d * d * d);
    for fi in x.basis() {
        for fj in x.basis() {
            let prod = fi * fj;
            let (coords, residual) = x.coordinates(&prod)?;
            if residual > tol.mem * (1.0 + prod.norm()) {
                return Ok(None);
            }
            tensor.extend(coords.iter().copied());
        }
    }
    Ok(Some(BilinearProduct::from_tensor(d, tensor)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentOptions {
    pub restarts: usize,
    pub iters: usize,
    pub seed: u64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            iters: 500,
            seed: 0,
        }
    }
}

/// Lower bound on `‖m^(n)‖` with the witness pair that attains it.
#[derive(Debug, Clone)]
pub struct AscentReport {
    pub level: usize,
    pub lower_bound: f64,
    /// Coefficients of the level-`n` elements, index `(a·n + b)·d + k`.
    pub witness_x: Vec<C64>,
    pub witness_y: Vec<C64>,
    pub restarts: usize,
    pub iterations: usize,
    pub converged: bool,
    pub best_restart: usize,
}

/// `Σ_{a,b} E_ab ⊗ (Σ_k c_{abk} F_k)`.
pub fn amplified_element(x: &OperatorSpace, n: usize, coeffs: &[C64]) -> ComplexMatrix {
    let (p, q) = x.ambient();
    let d = x.dim();
    let mut out = ComplexMatrix::zeros(n * p, n * q);
    for a in 0..n {
        for b in 0..n {
            let blk = x.element(&coeffs[(a * n + b) * d..(a * n + b + 1) * d]);
            out.view_mut((a * p, b * q), (p, q)).copy_from(&blk);
        }
    }
    out
}

/// Coefficients of `m^(n)(x, y)`: `(x ⊙ y)_{ac} = Σ_b m(x_ab, y_bc)`.
pub fn amplified_product(m: &BilinearProduct, n: usize, alpha: &[C64], beta: &[C64]) -> Vec<C64> {
    let d = m.dim();
    let mut out = vec![C64::new(0.0, 0.0); n * n * d];
    for a in 0..n {
        for b in 0..n {
            let xab = &alpha[(a * n + b) * d..(a * n + b + 1) * d];
            for c in 0..n {
                let ybc = &beta[(b * n + c) * d..(b * n + c + 1) * d];
                let val = m.apply(xab, ybc);
                for (o, v) in out[(a * n + c) * d..(a * n + c + 1) * d].iter_mut().zip(val) {
                    *o += v;
                }
            }
        }
    }
    out
}

/// `h[(a·n+b)·d + k] = u_a* F_k v_b` for block vectors `u`, `v`.
fn block_pairings(x: &OperatorSpace, n: usize, u: &nalgebra::DVector<C64>, v: &nalgebra::DVector<C64>) -> Vec<C64> {
    let (p, q) = x.ambient();
    let d = x.dim();
    let mut h = vec![C64::new(0.0, 0.0); n * n * d];
    for a in 0..n {
        let ua = u.rows(a * p, p);
        for b in 0..n {
            let vb = v.rows(b * q, q);
            for (k, f) in x.basis().iter().enumerate() {
                h[(a * n + b) * d + k] = ua.dotc(&(f * vb));
            }
        }
    }
    h
}

fn norm_vec(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// One backtracking gradient step on a scale-invariant objective. Returns
/// the new value. The baseline is re-evaluated with the objective itself so
/// that a gradient computed from a slightly different decomposition cannot
/// admit a worse point.
fn ascent_step(point: &mut Vec<C64>, grad: &[C64], objective: &dyn Fn(&[C64]) -> f64) -> f64 {
    let value = objective(point);
    let gnorm = norm_vec(grad);
    let pnorm = norm_vec(point);
    if gnorm == 0.0 || pnorm == 0.0 || !gnorm.is_finite() {
        return value;
    }
    let mut eta = 0.5;
    while eta > 1e-14 {
        let scale = eta * pnorm / gnorm;
        let trial: Vec<C64> = point.iter().zip(grad).map(|(p, g)| p + g * scale).collect();
        let v = objective(&trial);
        if v > value {
            *point = trial;
            return v;
        }
        eta *= 0.5;
    }
    value
}

fn random_point(rng: &mut ChaCha8Rng, len: usize) -> Vec<C64> {
    (0..len)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

fn rescale(point: &mut [C64], norm: f64) {
    if norm > 0.0 {
        point.iter_mut().for_each(|c| *c /= norm);
    }
}

const GAP_PERTURB: f64 = 1e-8;

struct BilinearAscent<'a> {
    x: &'a OperatorSpace,
    m: &'a BilinearProduct,
    n: usize,
}

impl BilinearAscent<'_> {
    fn norm_of(&self, coeffs: &[C64]) -> f64 {
        crate::numerics::spectral_norm(&amplified_element(self.x, self.n, coeffs))
    }

    fn ratio(&self, alpha: &[C64], beta: &[C64]) -> f64 {
        let nx = self.norm_of(alpha);
        let ny = self.norm_of(beta);
        if nx == 0.0 || ny == 0.0 {
            return 0.0;
        }
        let val = amplified_product(self.m, self.n, alpha, beta);
        self.norm_of(&val) / (nx * ny)
    }

    /// Gradient of `σ(m(x,y)) / σ(y)` with respect to `beta` (or to `alpha`
    /// when `wrt_left`), holding the other argument fixed.
    fn gradient(&self, alpha: &[C64], beta: &[C64], wrt_left: bool, rng: &mut ChaCha8Rng) -> (f64, Vec<C64>) {
        let (n, d) = (self.n, self.m.dim());
        let moving = if wrt_left { alpha } else { beta };
        let val = amplified_product(self.m, n, alpha, beta);
        let (u, s_val, v, gap) = top_singular_triple(&amplified_element(self.x, n, &val));
        let (u2, s_den, v2, gap2) = top_singular_triple(&amplified_element(self.x, n, moving));
        if s_den == 0.0 {
            return (0.0, vec![C64::new(0.0, 0.0); moving.len()]);
        }
        let h = block_pairings(self.x, n, &u, &v);
        let h_den = block_pairings(self.x, n, &u2, &v2);
        let mut g_val = vec![C64::new(0.0, 0.0); n * n * d];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let hac = &h[(a * n + c) * d..(a * n + c + 1) * d];
                    if wrt_left {
                        // ∂/∂α_abi = Σ_c Σ_j β_bcj Σ_r c_ij^r h_acr
                        let ybc = &beta[(b * n + c) * d..(b * n + c + 1) * d];
                        for i in 0..d {
                            let mut acc = C64::new(0.0, 0.0);
                            for (j, yj) in ybc.iter().enumerate() {
                                if *yj == C64::new(0.0, 0.0) {
                                    continue;
                                }
                                let cij = self.m.pair(i, j);
                                let inner: C64 = cij.iter().zip(hac).map(|(c, h)| c * h).sum();
                                acc += yj * inner;
                            }
                            g_val[(a * n + b) * d + i] += acc;
                        }
                    } else {
                        // ∂/∂β_bcj = Σ_a Σ_i α_abi Σ_r c_ij^r h_acr
                        let xab = &alpha[(a * n + b) * d..(a * n + b + 1) * d];
                        for j in 0..d {
                            let mut acc = C64::new(0.0, 0.0);
                            for (i, xi) in xab.iter().enumerate() {
                                if *xi == C64::new(0.0, 0.0) {
                                    continue;
                                }
                                let cij = self.m.pair(i, j);
                                let inner: C64 = cij.iter().zip(hac).map(|(c, h)| c * h).sum();
                                acc += xi * inner;
                            }
                            g_val[(b * n + c) * d + j] += acc;
                        }
                    }
                }
            }
        }
        // Ascent direction is the conjugate of the holomorphic derivative.
        let mut grad: Vec<C64> = g_val
            .iter()
            .zip(&h_den)
            .map(|(gv, gd)| (gv.conj() * s_den - gd.conj() * s_val) / (s_den * s_den))
            .collect();
        if gap < GAP_PERTURB || gap2 < GAP_PERTURB {
            for g in grad.iter_mut() {
                *g += C64::new(rng.gen_range(-1e-9..1e-9), rng.gen_range(-1e-9..1e-9));
            }
        }
        (s_val / s_den, grad)
    }

    fn run(&self, opts: &AscentOptions, restart: usize) -> AscentReport {
        let (n, d) = (self.n, self.m.dim());
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(restart as u64));
        let alpha = random_point(&mut rng, n * n * d);
        let beta = random_point(&mut rng, n * n * d);
        self.climb(opts, restart, alpha, beta, rng)
    }

    fn climb(
        &self,
        opts: &AscentOptions,
        restart: usize,
        mut alpha: Vec<C64>,
        mut beta: Vec<C64>,
        mut rng: ChaCha8Rng,
    ) -> AscentReport {
        let n = self.n;
        let (nx, ny) = (self.norm_of(&alpha), self.norm_of(&beta));
        rescale(&mut alpha, nx);
        rescale(&mut beta, ny);
        let mut history = vec![self.ratio(&alpha, &beta)];
        let mut converged = false;
        let mut iterations = 0;
        for it in 0..opts.iters {
            iterations = it + 1;
            for wrt_left in [false, true] {
                let (_, grad) = self.gradient(&alpha, &beta, wrt_left, &mut rng);
                if wrt_left {
                    let b = beta.clone();
                    let obj = |a: &[C64]| {
                        let nx = self.norm_of(a);
                        if nx == 0.0 {
                            return 0.0;
                        }
                        self.norm_of(&amplified_product(self.m, n, a, &b)) / nx
                    };
                    ascent_step(&mut alpha, &grad, &obj);
                    let nx = self.norm_of(&alpha);
                    rescale(&mut alpha, nx);
                } else {
                    let a = alpha.clone();
                    let obj = |b: &[C64]| {
                        let ny = self.norm_of(b);
                        if ny == 0.0 {
                            return 0.0;
                        }
                        self.norm_of(&amplified_product(self.m, n, &a, b)) / ny
                    };
                    ascent_step(&mut beta, &grad, &obj);
                    let ny = self.norm_of(&beta);
                    rescale(&mut beta, ny);
                }
            }
            let current = self.ratio(&alpha, &beta);
            history.push(current);
            if history.len() > 20 {
                let old = history[history.len() - 21];
                if current - old <= 1e-10 * current.abs().max(1e-300) {
                    converged = true;
                    break;
                }
            }
        }
        AscentReport {
            level: n,
            lower_bound: self.ratio(&alpha, &beta),
            witness_x: alpha,
            witness_y: beta,
            restarts: opts.restarts,
            iterations,
            converged,
            best_restart: restart,
        }
    }
}

fn best_of(reports: Vec<AscentReport>, restarts: usize) -> AscentReport {
    let total_iters = reports.iter().map(|r| r.iterations).sum();
    let mut best = reports.into_iter().reduce(|acc, r| {
        if r.lower_bound > acc.lower_bound {
            r
        } else {
            acc
        }
    });
    let mut out = best.take().expect("at least one restart");
    out.restarts = restarts;
    out.iterations = total_iters;
    out
}

/// Lower bound on `sup ‖m^(n)(x, y)‖` over the unit balls of `M_n(X)` by
/// alternating projected gradient ascent with seeded restarts.
pub fn level_norm_ascent(x: &OperatorSpace, m: &BilinearProduct, n: usize, opts: &AscentOptions) -> AscentReport {
    let d = x.dim();
    assert_eq!(m.dim(), d, "product and space dimensions differ");
    assert!(n >= 1, "level must be at least 1");
    let restarts = opts.restarts.max(1);
    if m.is_zero() {
        let mut w = vec![C64::new(0.0, 0.0); n * n * d];
        w[0] = re(1.0 / crate::numerics::spectral_norm(&x.basis()[0]));
        return AscentReport {
            level: n,
            lower_bound: 0.0,
            witness_x: w.clone(),
            witness_y: w,
            restarts,
            iterations: 0,
            converged: true,
            best_restart: 0,
        };
    }
    let engine = BilinearAscent { x, m, n };
    let mut reports: Vec<AscentReport> = (0..restarts).into_par_iter().map(|r| engine.run(opts, r)).collect();
    if n > 1 {
        // The padded witness of the level below keeps levels monotone.
        let below = level_norm_ascent(x, m, n - 1, opts);
        let rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(restarts as u64));
        reports.push(engine.climb(
            opts,
            restarts,
            pad_level(&below.witness_x, d, n - 1, n),
            pad_level(&below.witness_y, d, n - 1, n),
            rng,
        ));
    }
    best_of(reports, restarts)
}

/// Lower bound on `‖u_n‖` for the linear map `F_k ↦ images[k]`.
#[derive(Debug, Clone)]
pub struct LinearAscentReport {
    pub level: usize,
    pub lower_bound: f64,
    pub witness: Vec<C64>,
    pub converged: bool,
}

/// Maximizes `‖u_n(x)‖ / ‖x‖` over `M_n(X)`.
pub fn linear_map_ascent(
    x: &OperatorSpace,
    images: &OperatorSpaceImages<'_>,
    n: usize,
    opts: &AscentOptions,
) -> LinearAscentReport {
    let d = x.dim();
    let restarts = opts.restarts.max(1);
    let run = |restart: usize| -> LinearAscentReport {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(restart as u64));
        let mut alpha = random_point(&mut rng, n * n * d);
        let objective = |a: &[C64]| {
            let den = crate::numerics::spectral_norm(&amplified_element(x, n, a));
            if den == 0.0 {
                0.0
            } else {
                crate::numerics::spectral_norm(&images.amplified(n, a)) / den
            }
        };
        let mut value = objective(&alpha);
        let mut history = vec![value];
        let mut converged = false;
        for _ in 0..opts.iters {
            let (u, s_num, v, _) = top_singular_triple(&images.amplified(n, &alpha));
            let (u2, s_den, v2, _) = top_singular_triple(&amplified_element(x, n, &alpha));
            let h_num = images.pairings(n, &u, &v);
            let h_den = block_pairings(x, n, &u2, &v2);
            let grad: Vec<C64> = h_num
                .iter()
                .zip(&h_den)
                .map(|(a, b)| (a.conj() * s_den - b.conj() * s_num) / (s_den * s_den))
                .collect();
            value = ascent_step(&mut alpha, &grad, &objective);
            let nx = crate::numerics::spectral_norm(&amplified_element(x, n, &alpha));
            rescale(&mut alpha, nx);
            history.push(value);
            if history.len() > 20 && value - history[history.len() - 21] <= 1e-10 * value.max(1e-300) {
                converged = true;
                break;
            }
        }
        LinearAscentReport {
            level: n,
            lower_bound: objective(&alpha),
            witness: alpha,
            converged,
        }
    };
    (0..restarts)
        .into_par_iter()
        .map(run)
        .collect::<Vec<_>>()
        .into_iter()
        .reduce(|acc, r| if r.lower_bound > acc.lower_bound { r } else { acc })
        .expect("at least one restart")
}

/// Images `G_k` of a linear map, amplified blockwise like the domain.
pub struct OperatorSpaceImages<'a> {
    pub images: &'a [ComplexMatrix],
}

impl OperatorSpaceImages<'_> {
    fn shape(&self) -> (usize, usize) {
        self.images[0].shape()
    }

    pub fn amplified(&self, n: usize, coeffs: &[C64]) -> ComplexMatrix {
        let (r, s) = self.shape();
        let d = self.images.len();
        let mut out = ComplexMatrix::zeros(n * r, n * s);
        for a in 0..n {
            for b in 0..n {
                let mut blk = ComplexMatrix::zeros(r, s);
                for (k, g) in self.images.iter().enumerate() {
                    let c = coeffs[(a * n + b) * d + k];
                    if c != C64::new(0.0, 0.0) {
                        blk += g * c;
                    }
                }
                out.view_mut((a * r, b * s), (r, s)).copy_from(&blk);
            }
        }
        out
    }

    fn pairings(&self, n: usize, u: &nalgebra::DVector<C64>, v: &nalgebra::DVector<C64>) -> Vec<C64> {
        let (r, s) = self.shape();
        let d = self.images.len();
        let mut h = vec![C64::new(0.0, 0.0); n * n * d];
        for a in 0..n {
            let ua = u.rows(a * r, r);
            for b in 0..n {
                let vb = v.rows(b * s, s);
                for (k, g) in self.images.iter().enumerate() {
                    h[(a * n + b) * d + k] = ua.dotc(&(g * vb));
                }
            }
        }
        h
    }
}

/// Embeds level-`n` coefficients into level `m ≥ n` by zero padding.
pub fn pad_level(coeffs: &[C64], d: usize, n: usize, m: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); m * m * d];
    for a in 0..n {
        for b in 0..n {
            out[(a * m + b) * d..(a * m + b + 1) * d].copy_from_slice(&coeffs[(a * n + b) * d..(a * n + b + 1) * d]);
        }
    }
    out
}

/// `‖m^(n)(x, y)‖ / (‖x‖‖y‖)` for explicit level-`n` coefficients.
pub fn witness_ratio(x: &OperatorSpace, m: &BilinearProduct, n: usize, alpha: &[C64], beta: &[C64]) -> f64 {
    let nx = crate::numerics::spectral_norm(&amplified_element(x, n, alpha));
    let ny = crate::numerics::spectral_norm(&amplified_element(x, n, beta));
    let val = amplified_product(m, n, alpha, beta);
    crate::numerics::spectral_norm(&amplified_element(x, n, &val)) / (nx * ny)
}

/// Single-block placement helper used by tests and the gallery.
pub fn single_block(x: &OperatorSpace, n: usize, a: usize, b: usize, coords: &[C64]) -> ComplexMatrix {
    let (p, q) = x.ambient();
    embed(&x.element(coords), n * p, n * q, a * p, b * q)
}
