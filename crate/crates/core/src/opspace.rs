//! Concrete operator spaces, Paulsen systems, amplifications and
//! validated injective-envelope data.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::numerics::{
    block, check_shape, combination, coordinates, embed, identity, min_eigenvalue, shape, unit, ComplexMatrix,
    Membership, SubspaceBasis, Tolerances, C64,
};

/// A linearly independent basis `F_1..F_d` of `p × q` matrices.
#[derive(Debug, Clone)]
pub struct OperatorSpace {
    p: usize,
    q: usize,
    basis: Vec<ComplexMatrix>,
    gram: ComplexMatrix,
    span: SubspaceBasis,
}

impl OperatorSpace {
    /// Validates independence; the first dependent generator is reported.
    pub fn new(p: usize, q: usize, generators: Vec<ComplexMatrix>, tol: &Tolerances) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::EmptyInput);
        }
        for g in &generators {
            check_shape(g, (p, q))?;
        }
        for k in 1..=generators.len() {
            let s = SubspaceBasis::span_from(&generators[..k], tol)?;
            if s.rank() < k {
                return Err(Error::DependentBasis { index: k - 1 });
            }
        }
        let span = SubspaceBasis::span_from(&generators, tol)?;
        let d = generators.len();
        let gram = ComplexMatrix::from_fn(d, d, |i, j| generators[i].dotc(&generators[j]));
        if min_eigenvalue(&gram) <= tol.rank {
            return Err(Error::DependentBasis { index: d - 1 });
        }
        Ok(Self {
            p,
            q,
            basis: generators,
            gram,
            span,
        })
    }

    pub fn ambient(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[ComplexMatrix] {
        &self.basis
    }

    pub fn gram(&self) -> &ComplexMatrix {
        &self.gram
    }

    pub fn span(&self) -> &SubspaceBasis {
        &self.span
    }

    pub fn element(&self, coeffs: &[C64]) -> ComplexMatrix {
        combination(&self.basis, coeffs)
    }

    /// Coordinates of `m` in the basis, with the reconstruction residual.
    pub fn coordinates(&self, m: &ComplexMatrix) -> Result<(DVector<C64>, f64)> {
        check_shape(m, (self.p, self.q))?;
        Ok(coordinates(&self.basis, m))
    }

    pub fn contains(&self, m: &ComplexMatrix, tol: &Tolerances) -> Result<Membership> {
        self.span.contains(m, tol)
    }
}

/// Generators of the Paulsen operator system `S_X ⊆ M_{p+q}`.
#[derive(Debug, Clone)]
pub struct PaulsenSystem {
    pub size: usize,
    pub p1: ComplexMatrix,
    pub p2: ComplexMatrix,
    /// `[[0, F_k], [0, 0]]`
    pub lifted: Vec<ComplexMatrix>,
    /// Linear dimension of the span of all generators and their adjoints.
    pub dimension: usize,
}

impl PaulsenSystem {
    pub fn generators(&self) -> Vec<ComplexMatrix> {
        let mut g = vec![self.p1.clone(), self.p2.clone()];
        g.extend(self.lifted.iter().cloned());
        g.extend(self.lifted.iter().map(|f| f.adjoint()));
        g
    }
}

/// `[[0, x], [0, 0]]` in `M_{p+q}`.
pub fn lift_corner(x: &ComplexMatrix) -> ComplexMatrix {
    let (p, q) = shape(x);
    embed(x, p + q, p + q, 0, p)
}

pub fn paulsen_system(x: &OperatorSpace, tol: &Tolerances) -> Result<PaulsenSystem> {
    let (p, q) = x.ambient();
    let n = p + q;
    let p1 = embed(&identity(p), n, n, 0, 0);
    let p2 = embed(&identity(q), n, n, p, p);
    let lifted: Vec<ComplexMatrix> = x.basis().iter().map(lift_corner).collect();
    let mut sys = PaulsenSystem {
        size: n,
        p1,
        p2,
        lifted,
        dimension: 0,
    };
    sys.dimension = SubspaceBasis::span_from(&sys.generators(), tol)?.rank();
    Ok(sys)
}

/// `M_n(X)` realized in `M_{np, nq}`: basis of single blocks `E_{rs} ⊗ F_k`.
pub fn amplify(x: &OperatorSpace, n: usize, tol: &Tolerances) -> Result<OperatorSpace> {
    if n == 0 {
        return Err(Error::DimensionMismatch("amplification level must be ≥ 1".into()));
    }
    let (p, q) = x.ambient();
    let mut gens = Vec::with_capacity(n * n * x.dim());
    for r in 0..n {
        for s in 0..n {
            for f in x.basis() {
                gens.push(embed(f, n * p, n * q, r * p, s * q));
            }
        }
    }
    OperatorSpace::new(n * p, n * q, gens, tol)
}

/// Residuals recorded while validating an envelope.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnvelopeResiduals {
    pub x_in_ix: f64,
    pub corner_products: f64,
    pub identities: f64,
    pub closure: f64,
}

impl EnvelopeResiduals {
    pub fn max(&self) -> f64 {
        self.x_in_ix.max(self.corner_products).max(self.identities).max(self.closure)
    }
}

/// Corner data of `I(S_X) ⊆ M_N` with split `N = n1 + n2`; `X` sits in the
/// `(1,2)` corner.
#[derive(Debug, Clone)]
pub struct EnvelopeEmbedding {
    n1: usize,
    n2: usize,
    x: OperatorSpace,
    i11: SubspaceBasis,
    i22: SubspaceBasis,
    ix: SubspaceBasis,
    residuals: EnvelopeResiduals,
}

fn stray_entries(m: &ComplexMatrix, r0: usize, nr: usize, c0: usize, nc: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let inside = i >= r0 && i < r0 + nr && j >= c0 && j < c0 + nc;
            if !inside {
                worst = worst.max(m[(i, j)].norm());
            }
        }
    }
    worst
}

impl EnvelopeEmbedding {
    /// Validates supplied envelope data. All matrices are `N × N`.
    pub fn new(
        n1: usize,
        n2: usize,
        x_corner_basis: Vec<ComplexMatrix>,
        i11: &[ComplexMatrix],
        i22: &[ComplexMatrix],
        ix: &[ComplexMatrix],
        tol: &Tolerances,
    ) -> Result<Self> {
        let n = n1 + n2;
        if n1 == 0 || n2 == 0 {
            return Err(Error::DimensionMismatch("corner sizes must be positive".into()));
        }
        let check_corner = |what: &'static str, gens: &[ComplexMatrix], r0, nr, c0, nc| -> Result<()> {
            for (index, g) in gens.iter().enumerate() {
                check_shape(g, (n, n))?;
                let residual = stray_entries(g, r0, nr, c0, nc);
                if residual > 0.0 {
                    return Err(Error::CornerViolation { what, index, residual });
                }
            }
            Ok(())
        };
        check_corner("X", &x_corner_basis, 0, n1, n1, n2)?;
        check_corner("I(X)", ix, 0, n1, n1, n2)?;
        check_corner("I11", i11, 0, n1, 0, n1)?;
        check_corner("I22", i22, n1, n2, n1, n2)?;

        let x = OperatorSpace::new(n, n, x_corner_basis, tol)?;
        let i11s = SubspaceBasis::span_from(i11, tol)?;
        let i22s = SubspaceBasis::span_from(i22, tol)?;
        let ixs = SubspaceBasis::span_from(ix, tol)?;
        let mut residuals = EnvelopeResiduals::default();

        for (index, f) in x.basis().iter().enumerate() {
            let m = ixs.contains(f, tol)?;
            residuals.x_in_ix = residuals.x_in_ix.max(m.residual);
            if !m.inside {
                return Err(Error::CornerViolation {
                    what: "X (not in I(X))",
                    index,
                    residual: m.residual,
                });
            }
        }
        for (i, a) in ix.iter().enumerate() {
            for (j, b) in ix.iter().enumerate() {
                let m = i11s.contains(&(a * b.adjoint()), tol)?;
                residuals.corner_products = residuals.corner_products.max(m.residual);
                if !m.inside {
                    return Err(Error::ProductEscapesCorner {
                        product: "I(X)·I(X)*",
                        left: i,
                        right: j,
                        residual: m.residual,
                    });
                }
                let m = i22s.contains(&(a.adjoint() * b), tol)?;
                residuals.corner_products = residuals.corner_products.max(m.residual);
                if !m.inside {
                    return Err(Error::ProductEscapesCorner {
                        product: "I(X)*·I(X)",
                        left: i,
                        right: j,
                        residual: m.residual,
                    });
                }
            }
        }
        let one11 = embed(&identity(n1), n, n, 0, 0);
        let one22 = embed(&identity(n2), n, n, n1, n1);
        for (corner, span, one) in [("I11", &i11s, &one11), ("I22", &i22s, &one22)] {
            let m = span.contains(one, tol)?;
            residuals.identities = residuals.identities.max(m.residual);
            if !m.inside {
                return Err(Error::MissingIdentity {
                    corner,
                    residual: m.residual,
                });
            }
        }
        for (name, gens, span) in [("I11", i11, &i11s), ("I22", i22, &i22s)] {
            for (i, a) in gens.iter().enumerate() {
                let m = span.contains(&a.adjoint(), tol)?;
                residuals.closure = residuals.closure.max(m.residual);
                if !m.inside {
                    return Err(Error::ProductEscapesCorner {
                        product: if name == "I11" { "I11 adjoint" } else { "I22 adjoint" },
                        left: i,
                        right: i,
                        residual: m.residual,
                    });
                }
                for (j, b) in gens.iter().enumerate() {
                    let m = span.contains(&(a * b), tol)?;
                    residuals.closure = residuals.closure.max(m.residual);
                    if !m.inside {
                        return Err(Error::ProductEscapesCorner {
                            product: if name == "I11" { "I11 product" } else { "I22 product" },
                            left: i,
                            right: j,
                            residual: m.residual,
                        });
                    }
                }
            }
        }
        Ok(Self {
            n1,
            n2,
            x,
            i11: i11s,
            i22: i22s,
            ix: ixs,
            residuals,
        })
    }

    /// Same corner data, new basis for the embedded copy of `X`.
    pub fn with_basis(&self, x_corner_basis: Vec<ComplexMatrix>, tol: &Tolerances) -> Result<Self> {
        Self::new(
            self.n1,
            self.n2,
            x_corner_basis,
            self.i11.generators(),
            self.i22.generators(),
            self.ix.generators(),
            tol,
        )
    }

    pub fn size(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn split(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn x(&self) -> &OperatorSpace {
        &self.x
    }

    pub fn i11(&self) -> &SubspaceBasis {
        &self.i11
    }

    pub fn i22(&self) -> &SubspaceBasis {
        &self.i22
    }

    pub fn ix(&self) -> &SubspaceBasis {
        &self.ix
    }

    pub fn residuals(&self) -> &EnvelopeResiduals {
        &self.residuals
    }

    pub fn one11(&self) -> ComplexMatrix {
        embed(&identity(self.n1), self.size(), self.size(), 0, 0)
    }

    pub fn one22(&self) -> ComplexMatrix {
        embed(&identity(self.n2), self.size(), self.size(), self.n1, self.n1)
    }

    /// The `(1,2)` block of an `N × N` matrix.
    pub fn corner12(&self, m: &ComplexMatrix) -> ComplexMatrix {
        block(m, 0, self.n1, self.n1, self.n2)
    }

    /// Places an `n1 × n2` block into the `(1,2)` corner.
    pub fn lift12(&self, m: &ComplexMatrix) -> ComplexMatrix {
        embed(m, self.size(), self.size(), 0, self.n1)
    }

    /// Span of the whole envelope algebra `I(S_X)`.
    pub fn algebra_span(&self, tol: &Tolerances) -> Result<SubspaceBasis> {
        let mut gens = self.i11.generators().to_vec();
        gens.extend(self.i22.generators().iter().cloned());
        gens.extend(self.ix.generators().iter().cloned());
        gens.extend(self.ix.generators().iter().map(|g| g.adjoint()));
        SubspaceBasis::span_from(&gens, tol)
    }
}

/// All matrix units of `M_{rows,cols}` placed at `(r0, c0)` of an `n × n` ambient.
pub fn matrix_units_block(n: usize, r0: usize, rows: usize, c0: usize, cols: usize) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            out.push(unit(n, n, r0 + i, c0 + j));
        }
    }
    out
}
