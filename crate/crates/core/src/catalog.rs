//! Named example spaces with envelope data, products and expected results.

use crate::error::{Error, Result};
use crate::mult::Realization;
use crate::numerics::{embed, identity, re, unit, ComplexMatrix, Tolerances};
use crate::opspace::{matrix_units_block, EnvelopeEmbedding, OperatorSpace};
use crate::product::{algebra_closure_check, product_from_qm, BilinearProduct};

pub const NAMES: [&str; 7] = [
    "c2",
    "r2",
    "sharp",
    "matrix_units",
    "max_c2_r2",
    "t2_upper",
    "nilpotent_pair",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// Closed-form value known for this example.
    Known,
    /// Obtained by an independent expansion of the definitions.
    Derived,
}

#[derive(Debug, Clone)]
pub struct Expectation {
    pub what: &'static str,
    pub value: &'static str,
    pub origin: Origin,
}

fn expect(what: &'static str, value: &'static str, origin: Origin) -> Expectation {
    Expectation { what, value, origin }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub description: &'static str,
    pub space: OperatorSpace,
    pub envelope: Option<EnvelopeEmbedding>,
    pub products: Vec<(&'static str, BilinearProduct)>,
    pub matrices: Vec<(&'static str, ComplexMatrix)>,
    /// Target algebra and the images of a linear map into it.
    pub target: Option<OperatorSpace>,
    pub psi: Option<Vec<ComplexMatrix>>,
    pub expectations: Vec<Expectation>,
}

impl Fixture {
    pub fn product(&self, name: &str) -> Option<&BilinearProduct> {
        self.products.iter().find(|(n, _)| *n == name).map(|(_, m)| m)
    }

    pub fn matrix(&self, name: &str) -> Option<&ComplexMatrix> {
        self.matrices.iter().find(|(n, _)| *n == name).map(|(_, m)| m)
    }

    /// Envelope realization when available, relative otherwise.
    pub fn realization(&self) -> Realization<'_> {
        match &self.envelope {
            Some(env) => Realization::enveloped(env),
            None => Realization::relative(&self.space),
        }
    }
}

pub fn catalog(name: &str, tol: &Tolerances) -> Result<Fixture> {
    match name {
        "c2" => c2(tol),
        "r2" => r2(tol),
        "sharp" => sharp(tol),
        "matrix_units" => matrix_units(tol),
        "max_c2_r2" => max_space(tol),
        "t2_upper" => t2_upper(tol),
        "nilpotent_pair" => nilpotent_pair(tol),
        other => Err(Error::UnknownName(other.to_string())),
    }
}

fn kron_delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// `m1((a,b),(c,d)) = (ac, bd)`.
pub fn c2_m1() -> BilinearProduct {
    BilinearProduct::from_fn(2, |i, j, k| re(kron_delta(i, j) * kron_delta(j, k)))
}

/// `m2((a,b),(c,d)) = (ac, bc)`, the ambient product.
pub fn c2_m2() -> BilinearProduct {
    BilinearProduct::from_fn(2, |i, j, k| re(kron_delta(j, 0) * kron_delta(i, k)))
}

fn c2(tol: &Tolerances) -> Result<Fixture> {
    let space = OperatorSpace::new(2, 2, vec![unit(2, 2, 0, 0), unit(2, 2, 1, 0)], tol)?;
    let envelope = EnvelopeEmbedding::new(
        2,
        1,
        vec![unit(3, 3, 0, 2), unit(3, 3, 1, 2)],
        &matrix_units_block(3, 0, 2, 0, 2),
        &[unit(3, 3, 2, 2)],
        &[unit(3, 3, 0, 2), unit(3, 3, 1, 2)],
        tol,
    )?;
    Ok(Fixture {
        name: "c2",
        description: "column space C2 in M2 (basis E11, E21); envelope M3 split (2,1)",
        space,
        envelope: Some(envelope),
        products: vec![("m1", c2_m1()), ("m2", c2_m2())],
        matrices: vec![("z", unit(3, 3, 2, 0))],
        target: None,
        psi: None,
        expectations: vec![
            expect("relative QM", "all of M2, dimension 4", Origin::Known),
            expect("envelope QM", "row corner, dimension 2", Origin::Known),
            expect("m1", "not in OAP: no representing z", Origin::Known),
            expect("m2", "in OAP with qm-norm 1 at z = (1, 0)", Origin::Derived),
            expect("TER", "all of C2 (the row corner adjoint is C2)", Origin::Derived),
        ],
    })
}

fn r2(tol: &Tolerances) -> Result<Fixture> {
    let space = OperatorSpace::new(2, 2, vec![unit(2, 2, 0, 0), unit(2, 2, 0, 1)], tol)?;
    let envelope = EnvelopeEmbedding::new(
        1,
        2,
        vec![unit(3, 3, 0, 1), unit(3, 3, 0, 2)],
        &[unit(3, 3, 0, 0)],
        &matrix_units_block(3, 1, 2, 1, 2),
        &[unit(3, 3, 0, 1), unit(3, 3, 0, 2)],
        tol,
    )?;
    Ok(Fixture {
        name: "r2",
        description: "row space R2 in M2 (basis E11, E12); envelope M3 split (1,2)",
        space,
        envelope: Some(envelope),
        products: vec![],
        matrices: vec![],
        target: None,
        psi: None,
        expectations: vec![expect("envelope QM", "column corner, dimension 2", Origin::Derived)],
    })
}

/// `P = I + J/3` and its inverse `I − J/6`.
pub fn sharp_p() -> (ComplexMatrix, ComplexMatrix) {
    let j = ComplexMatrix::from_element(3, 3, re(1.0));
    (identity(3) + &j * re(1.0 / 3.0), identity(3) - &j * re(1.0 / 6.0))
}

fn sharp(tol: &Tolerances) -> Result<Fixture> {
    let (p, p_inv) = sharp_p();
    let a_gens = vec![unit(3, 3, 0, 1), unit(3, 3, 0, 2), identity(3)];
    let x_gens: Vec<ComplexMatrix> = a_gens.iter().map(|a| a * &p).collect();
    let space = OperatorSpace::new(3, 3, x_gens.clone(), tol)?;
    let envelope = EnvelopeEmbedding::new(
        3,
        3,
        x_gens.iter().map(|x| embed(x, 6, 6, 0, 3)).collect(),
        &matrix_units_block(6, 0, 3, 0, 3),
        &matrix_units_block(6, 3, 3, 3, 3),
        &matrix_units_block(6, 0, 3, 3, 3),
        tol,
    )?;
    let z = &p_inv * (unit(3, 3, 0, 1) - unit(3, 3, 0, 2));
    let z_big = embed(&z, 6, 6, 3, 0);
    let m_z = product_from_qm(&Realization::enveloped(&envelope), &z_big, tol)?;
    let mut matrices = vec![("Z", z), ("z", z_big), ("P", p), ("P_inv", p_inv)];
    for (name, g) in ["A0", "A1", "A2"].into_iter().zip(a_gens) {
        matrices.push((name, g));
    }
    Ok(Fixture {
        name: "sharp",
        description: "X = A·P with A = span{E12, E13, I3}, P = I3 + J/3; envelope M6 split (3,3)",
        space,
        envelope: Some(envelope),
        products: vec![("m_Z", m_z)],
        matrices,
        target: None,
        psi: None,
        expectations: vec![
            expect("‖Z‖", "√(3/2)", Origin::Known),
            expect("‖m_Z‖_cb", "at most √(3/4)", Origin::Known),
            expect("‖m_Z‖ at levels 1 and 2", "√2/3", Origin::Derived),
            expect("QM", "P⁻¹A", Origin::Known),
            expect("M_l", "A", Origin::Known),
            expect("qm-norm of m_Z", "√(3/2) with a unique representing z", Origin::Derived),
        ],
    })
}

fn matrix_units(tol: &Tolerances) -> Result<Fixture> {
    let pos = [(0, 0), (0, 1), (1, 0), (2, 1)];
    let space = OperatorSpace::new(3, 2, pos.iter().map(|&(i, j)| unit(3, 2, i, j)).collect(), tol)?;
    let envelope = EnvelopeEmbedding::new(
        3,
        2,
        pos.iter().map(|&(i, j)| unit(5, 5, i, 3 + j)).collect(),
        &matrix_units_block(5, 0, 3, 0, 3),
        &matrix_units_block(5, 3, 2, 3, 2),
        &matrix_units_block(5, 0, 3, 3, 2),
        tol,
    )?;
    let z = unit(5, 5, 3, 1) + unit(5, 5, 4, 2);
    let m_z = product_from_qm(&Realization::enveloped(&envelope), &z, tol)?;
    Ok(Fixture {
        name: "matrix_units",
        description: "X = span{E11, E12, E21, E32} in M_{3,2}; envelope M5 split (3,2)",
        space,
        envelope: Some(envelope),
        products: vec![("m_z", m_z)],
        matrices: vec![("z", z)],
        target: None,
        psi: None,
        expectations: vec![
            expect("QM", "span{E12, E23}", Origin::Known),
            expect("M_l", "span{E11, E12, E13, E22, E33}", Origin::Known),
            expect("M_r", "span{E11, E22}", Origin::Known),
            expect("TER", "span{E21, E32}", Origin::Derived),
            expect("A_l", "diagonal of M3", Origin::Derived),
            expect("π_r for z = E12 + E23", "not injective", Origin::Known),
        ],
    })
}

fn max_space(tol: &Tolerances) -> Result<Fixture> {
    let x1 = unit(3, 3, 0, 0) + unit(3, 3, 2, 1);
    let x2 = unit(3, 3, 1, 0) + unit(3, 3, 2, 2);
    let space = OperatorSpace::new(3, 3, vec![x1.clone(), x2.clone()], tol)?;
    let mut i11 = matrix_units_block(6, 0, 2, 0, 2);
    i11.push(unit(6, 6, 2, 2));
    let mut i22 = vec![unit(6, 6, 3, 3)];
    i22.extend(matrix_units_block(6, 4, 2, 4, 2));
    let ix: Vec<ComplexMatrix> = [(0, 0), (2, 1), (1, 0), (2, 2)]
        .iter()
        .map(|&(i, j)| unit(6, 6, i, 3 + j))
        .collect();
    let envelope = EnvelopeEmbedding::new(
        3,
        3,
        vec![embed(&x1, 6, 6, 0, 3), embed(&x2, 6, 6, 0, 3)],
        &i11,
        &i22,
        &ix,
        tol,
    )?;
    // e1·e1 = e1, all other products zero.
    let idem = BilinearProduct::from_fn(2, |i, j, k| re(if i == 0 && j == 0 && k == 0 { 1.0 } else { 0.0 }));
    Ok(Fixture {
        name: "max_c2_r2",
        description: "X = span{E11 + E32, E21 + E33} in M3; envelope M6 split (3,3) with corners M2 ⊕ C and C ⊕ M2",
        space,
        envelope: Some(envelope),
        products: vec![("idempotent", idem)],
        matrices: vec![],
        target: None,
        psi: None,
        expectations: vec![
            expect("QM", "(0)", Origin::Known),
            expect("M_l, M_r", "scalar multiples of the identity", Origin::Known),
            expect("any nonzero associative product", "not in OAP", Origin::Known),
        ],
    })
}

fn t2_upper(tol: &Tolerances) -> Result<Fixture> {
    let space = OperatorSpace::new(2, 2, vec![unit(2, 2, 0, 0), unit(2, 2, 0, 1), unit(2, 2, 1, 1)], tol)?;
    let prod = algebra_closure_check(&space, tol)?.ok_or(Error::NotAnAlgebra { residual: f64::NAN })?;
    Ok(Fixture {
        name: "t2_upper",
        description: "upper triangular 2×2 matrices with the matrix product",
        space,
        envelope: None,
        products: vec![("ambient", prod)],
        matrices: vec![],
        target: None,
        psi: None,
        expectations: vec![
            expect("right identity", "e = I with z = I", Origin::Derived),
            expect("M_r", "T2", Origin::Derived),
        ],
    })
}

fn nilpotent_pair(tol: &Tolerances) -> Result<Fixture> {
    let space = OperatorSpace::new(2, 2, vec![unit(2, 2, 0, 0), unit(2, 2, 1, 1)], tol)?;
    let target = OperatorSpace::new(4, 4, vec![unit(4, 4, 0, 2), unit(4, 4, 1, 3)], tol)?;
    let prod = algebra_closure_check(&space, tol)?.ok_or(Error::NotAnAlgebra { residual: f64::NAN })?;
    let psi = target.basis().to_vec();
    Ok(Fixture {
        name: "nilpotent_pair",
        description: "A = diagonal 2×2 algebra, B = [[0, A], [0, 0]] in M4, ψ the identification",
        space,
        envelope: None,
        products: vec![("ambient", prod)],
        matrices: vec![],
        target: Some(target),
        psi: Some(psi),
        expectations: vec![
            expect("z", "0 (unique)", Origin::Derived),
            expect("w", "lower-left block I2, norm 1", Origin::Derived),
            expect("π_l(a)", "[[a, 0], [0, 0]]", Origin::Derived),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::spectral_norm;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn every_fixture_builds_with_valid_envelope() {
        for name in NAMES {
            let f = catalog(name, &tol()).unwrap();
            if let Some(env) = &f.envelope {
                assert!(env.residuals().max() < 1e-9, "{name}");
            }
            assert!(!f.expectations.is_empty());
        }
        assert!(matches!(catalog("nope", &tol()), Err(Error::UnknownName(_))));
    }

    #[test]
    fn sharp_data() {
        let f = catalog("sharp", &tol()).unwrap();
        let (p, p_inv) = sharp_p();
        assert!((&p * &p_inv - identity(3)).norm() < 1e-14);
        assert!((spectral_norm(f.matrix("Z").unwrap()) - 1.5f64.sqrt()).abs() < 1e-12);
        // m_Z(A_i P, A_j P) = A_i (E12 − E13) A_j P, so m_Z(P, P) = X_0 − X_1.
        let m = f.product("m_Z").unwrap();
        let c = m.pair(2, 2);
        assert!((c[0] - re(1.0)).norm() < 1e-12 && (c[1] + re(1.0)).norm() < 1e-12 && c[2].norm() < 1e-12);
    }

    #[test]
    fn matrix_units_product() {
        let f = catalog("matrix_units", &tol()).unwrap();
        // E11·z = E12 in M3, then E12·E21 = E11; E21·z = E22, then E22·E11 = 0.
        let m = f.product("m_z").unwrap();
        assert!((m.pair(0, 2)[0] - re(1.0)).norm() < 1e-12);
        assert_eq!(m.pair(2, 0).iter().filter(|c| c.norm() > 1e-12).count(), 0);
    }
}
