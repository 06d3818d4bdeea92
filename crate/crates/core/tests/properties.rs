//! Randomized invariants of the numerical kernels, multiplier spaces,
//! products, semidefinite decisions and isometry analysis.

mod common;

use common::*;
use proptest::prelude::*;
use quasimult::banachstone::{analyze, transported_product};
use quasimult::catalog::NAMES;
use quasimult::cpcone::{cb_norm, cc_feasibility, min_norm_qm, oap_decide, OapVerdict};
use quasimult::mult::{quasi_mult_space, ter_space};
use quasimult::numerics::{psd_sqrt, realify_hermitian, spectral_norm};
use quasimult::opspace::{amplify, paulsen_system};
use quasimult::product::{
    associativity_residual, combine, level_norm_ascent, linear_map_ascent, product_from_qm, AscentOptions,
    OperatorSpaceImages,
};
use quasimult::sdp::SdpOptions;
use quasimult::{ComplexMatrix, SubspaceBasis, C64};
use rand::Rng;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn quasi_fixtures() -> [&'static str; 3] {
    ["c2", "sharp", "matrix_units"]
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn spectral_norm_is_adjoint_invariant(seed in any::<u64>(), r in 1usize..5, c in 1usize..5) {
        let m = random_matrix(&mut rng(seed), r, c);
        prop_assert!((spectral_norm(&m) - spectral_norm(&m.adjoint())).abs() < 1e-12);
    }

    #[test]
    fn psd_sqrt_squares_back(seed in any::<u64>(), n in 1usize..5) {
        let g = random_matrix(&mut rng(seed), n, n);
        let m = &g * g.adjoint();
        let s = psd_sqrt(&m, &tol()).unwrap();
        prop_assert!((spectral_norm(&s).powi(2) - spectral_norm(&m)).abs() < 1e-9 * (1.0 + spectral_norm(&m)));
    }

    #[test]
    fn spans_contain_their_generators(seed in any::<u64>(), k in 1usize..5) {
        let mut g = rng(seed);
        let gens: Vec<ComplexMatrix> = (0..k).map(|_| random_matrix(&mut g, 3, 2)).collect();
        let span = SubspaceBasis::span_from(&gens, &tol()).unwrap();
        for m in &gens {
            let mem = span.contains(m, &tol()).unwrap();
            prop_assert!(mem.inside && mem.residual < 1e-10);
        }
    }

    #[test]
    fn span_equality_is_an_equivalence(seed in any::<u64>(), k in 1usize..4) {
        let mut g = rng(seed);
        let gens: Vec<ComplexMatrix> = (0..k).map(|_| random_matrix(&mut g, 2, 2)).collect();
        // Two re-mixings of the same generators.
        let mix = |g: &mut rand_chacha::ChaCha8Rng| -> Vec<ComplexMatrix> {
            (0..k)
                .map(|i| {
                    let mut m = gens[i].clone() * C64::new(2.0, 0.0);
                    for h in &gens {
                        m += h * C64::new(g.gen_range(-0.3..0.3), g.gen_range(-0.3..0.3));
                    }
                    m
                })
                .collect()
        };
        let a = SubspaceBasis::span_from(&gens, &tol()).unwrap();
        let b = SubspaceBasis::span_or_zero(2, 2, &mix(&mut g), &tol()).unwrap();
        let c = SubspaceBasis::span_or_zero(2, 2, &mix(&mut g), &tol()).unwrap();
        prop_assume!(b.rank() == k && c.rank() == k);
        prop_assert!(a.equals(&a, &tol()).unwrap());
        prop_assert_eq!(a.equals(&b, &tol()).unwrap(), b.equals(&a, &tol()).unwrap());
        prop_assert!(a.equals(&b, &tol()).unwrap() && b.equals(&c, &tol()).unwrap() && a.equals(&c, &tol()).unwrap());
    }

    #[test]
    fn realification_keeps_the_spectrum_floor(seed in any::<u64>(), n in 1usize..5) {
        let g = random_matrix(&mut rng(seed), n, n);
        let h = (&g + g.adjoint()) * C64::new(0.5, 0.0);
        let r = realify_hermitian(&h, &tol()).unwrap();
        let real_min = r.symmetric_eigenvalues().min();
        prop_assert!((real_min - min_eig(&h)).abs() < 1e-12 * (1.0 + h.norm()));
    }
}

#[test]
fn fixture_envelopes_and_corners() {
    for name in NAMES {
        let f = fixture(name);
        if let Some(env) = &f.envelope {
            assert!(env.residuals().max() < 1e-9, "{name}");
            let (n1, _) = env.split();
            let n = env.size();
            for b in env.x().basis() {
                for i in 0..n {
                    for j in 0..n {
                        if !(i < n1 && j >= n1) {
                            assert_eq!(b[(i, j)], C64::new(0.0, 0.0), "{name}: stray entry ({i},{j})");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn amplification_ranks() {
    for name in NAMES {
        let f = fixture(name);
        for n in 1..=3 {
            let amp = amplify(&f.space, n, &tol()).unwrap();
            assert_eq!(amp.dim(), n * n * f.space.dim(), "{name} level {n}");
        }
    }
}

#[test]
fn paulsen_projections_are_exact() {
    for name in NAMES {
        let f = fixture(name);
        let sys = paulsen_system(&f.space, &tol()).unwrap();
        let id = ComplexMatrix::identity(sys.size, sys.size);
        assert!((&sys.p1 + &sys.p2 - id).iter().all(|c| *c == C64::new(0.0, 0.0)));
        assert!((&sys.p1 * &sys.p2).iter().all(|c| *c == C64::new(0.0, 0.0)));
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn induced_products_are_linear_in_z(seed in any::<u64>(), fi in 0usize..3) {
        let f = fixture(quasi_fixtures()[fi]);
        let real = f.realization();
        let mut g = rng(seed);
        let z = random_qm_element(&real, &mut g, 1.0);
        let w = random_qm_element(&real, &mut g, 1.0);
        let (al, be) = (C64::new(g.gen_range(-2.0..2.0), g.gen_range(-2.0..2.0)), C64::new(g.gen_range(-2.0..2.0), 0.3));
        let mz = product_from_qm(&real, &z, &tol()).unwrap();
        let mw = product_from_qm(&real, &w, &tol()).unwrap();
        let mix = product_from_qm(&real, &(&z * al + &w * be), &tol()).unwrap();
        let lin = combine(&[&mz, &mw], &[al, be]).unwrap();
        prop_assert!(mix.max_abs_diff(&lin) < 1e-10);
    }

    #[test]
    fn induced_products_are_associative_and_multiplicative(seed in any::<u64>(), fi in 0usize..3) {
        let f = fixture(quasi_fixtures()[fi]);
        let real = f.realization();
        let mut g = rng(seed);
        let z = random_qm_element(&real, &mut g, 2.0);
        let m = product_from_qm(&real, &z, &tol()).unwrap();
        prop_assert!(associativity_residual(&m) < 1e-9);
        // π_l(x) = xz is a homomorphism for m_z.
        let x = real.working();
        for i in 0..x.dim() {
            for j in 0..x.dim() {
                let lhs = (&x.basis()[i] * &z) * (&x.basis()[j] * &z);
                let rhs = m.pair_matrix(x, i, j) * &z;
                prop_assert!((lhs - rhs).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn contractive_quasimultipliers_give_contractive_products(seed in any::<u64>(), fi in 0usize..3) {
        let f = fixture(quasi_fixtures()[fi]);
        let real = f.realization();
        let z = random_qm_element(&real, &mut rng(seed), 1.0);
        let m = product_from_qm(&real, &z, &tol()).unwrap();
        let opts = AscentOptions { restarts: 4, iters: 200, seed };
        let mut prev = 0.0;
        for n in 1..=3 {
            let v = level_norm_ascent(&f.space, &m, n, &opts).lower_bound;
            prop_assert!(v <= 1.0 + 1e-7, "level {} value {}", n, v);
            if n == 2 {
                prop_assert!(v >= prev - 1e-8, "level 2 {} below level 1 {}", v, prev);
            }
            prev = v;
        }
    }

    #[test]
    fn combine_is_exactly_linear(seed in any::<u64>()) {
        let f = fixture("c2");
        let (m1, m2) = (f.product("m1").unwrap(), f.product("m2").unwrap());
        let mut g = rng(seed);
        let (a, b) = (C64::new(g.gen_range(-3.0..3.0), g.gen_range(-3.0..3.0)), C64::new(g.gen_range(-3.0..3.0), 0.0));
        let c = combine(&[m1, m2], &[a, b]).unwrap();
        for (k, v) in c.tensor().iter().enumerate() {
            prop_assert_eq!(*v, a * m1.tensor()[k] + b * m2.tensor()[k]);
        }
    }

    #[test]
    fn cb_norm_dominates_level_one_ratios(seed in any::<u64>(), fi in 0usize..2) {
        let f = fixture(["c2", "matrix_units"][fi]);
        let mut g = rng(seed);
        let images: Vec<ComplexMatrix> = (0..f.space.dim()).map(|_| random_matrix(&mut g, 2, 2) * C64::new(0.6, 0.0)).collect();
        let opts = SdpOptions::default();
        let rep = cb_norm(&f.space, &images, &opts, None).unwrap();
        let imgs = OperatorSpaceImages { images: &images };
        for _ in 0..20 {
            let coeffs: Vec<C64> = (0..f.space.dim()).map(|_| C64::new(g.gen_range(-1.0..1.0), g.gen_range(-1.0..1.0))).collect();
            let x = f.space.element(&coeffs);
            let ratio = spectral_norm(&imgs.amplified(1, &coeffs)) / spectral_norm(&x);
            prop_assert!(rep.value >= ratio - 1e-6, "cb {} below ratio {}", rep.value, ratio);
        }
        let ascent = linear_map_ascent(&f.space, &imgs, 1, &AscentOptions { restarts: 2, iters: 100, seed }).lower_bound;
        prop_assert!(rep.value >= ascent - 1e-6);
        // Feasibility at the unit level agrees with the norm, away from the boundary.
        prop_assume!((rep.value - 1.0).abs() > 1e-4);
        let cc = cc_feasibility(&f.space, &images, &opts).unwrap();
        prop_assert_eq!(cc.is_feasible(), rep.value <= 1.0 + 1e-6);
    }

    #[test]
    fn midpoints_of_contractive_products_stay_in_oap(seed in any::<u64>(), fi in 0usize..3) {
        let f = fixture(quasi_fixtures()[fi]);
        let real = f.realization();
        let mut g = rng(seed);
        let z1 = random_qm_element(&real, &mut g, 1.0);
        let z2 = random_qm_element(&real, &mut g, 1.0);
        let mid = product_from_qm(&real, &((&z1 + &z2) * C64::new(0.5, 0.0)), &tol()).unwrap();
        let d = oap_decide(&real, &mid, &SdpOptions::default(), &tol()).unwrap();
        prop_assert_eq!(d.verdict, OapVerdict::InOap);
        prop_assert!(d.qm_norm.unwrap() <= 1.0 + 1e-6);
    }
}

#[test]
fn kernels_act_as_zero_and_ter_is_ternary() {
    for name in ["c2", "sharp", "matrix_units", "max_c2_r2"] {
        let f = fixture(name);
        let real = f.realization();
        let qm = quasi_mult_space(&real, &tol()).unwrap();
        let x = real.working();
        for k in qm.action_kernel.frame_matrices() {
            for a in x.basis() {
                for b in x.basis() {
                    assert!((a * &k * b).norm() < 1e-9, "{name}");
                }
            }
        }
        let ter = ter_space(&real, &tol()).unwrap();
        let t = ter.frame_matrices();
        for a in &t {
            for b in &t {
                for c in &t {
                    assert!(ter.contains(&(a * b.adjoint() * c), &tol()).unwrap().inside, "{name}");
                }
            }
        }
    }
}

#[test]
fn soundness_sandwich_on_fixture_products() {
    for (name, prod) in [("c2", "m2"), ("sharp", "m_Z"), ("matrix_units", "m_z")] {
        let f = fixture(name);
        let m = f.product(prod).unwrap();
        let q = min_norm_qm(&f.realization(), m, &SdpOptions::default(), &tol()).unwrap().qm_norm.unwrap();
        for n in 1..=2 {
            let a = level_norm_ascent(&f.space, m, n, &AscentOptions { restarts: 8, iters: 300, seed: 3 }).lower_bound;
            assert!(a <= q + 1e-5, "{name}: ascent {a} above {q}");
        }
    }
}

#[test]
fn isometries_transport_oap_products() {
    let opts = SdpOptions::default();
    let cases = [("nilpotent_pair", true), ("t2_upper", false), ("c2", false)];
    for (name, has_target) in cases {
        let f = fixture(name);
        let (b, psi) = if has_target {
            (f.target.clone().unwrap(), f.psi.clone().unwrap())
        } else {
            (f.space.clone(), f.space.basis().to_vec())
        };
        let res = analyze(&f.space, &b, &psi, None, None, &opts, &tol()).unwrap();
        assert!(res.is_complete_isometry, "{name}");
        assert!(res.hom_residuals.pi_l < 1e-8, "{name}");
        let m = transported_product(&f.space, &b, &psi, &tol()).unwrap();
        let d = oap_decide(&f.realization(), &m, &opts, &tol()).unwrap();
        assert!(d.qm_norm.is_some_and(|v| v <= 1.0 + 1e-6), "{name}: {:?}", d.qm_norm);
    }
}

#[test]
fn reversing_the_nilpotent_pair_swaps_z_and_w() {
    let opts = SdpOptions::default();
    let f = fixture("nilpotent_pair");
    let b = f.target.as_ref().unwrap();
    let fwd = analyze(&f.space, b, f.psi.as_ref().unwrap(), None, None, &opts, &tol()).unwrap();
    let rev = analyze(b, &f.space, f.space.basis(), None, None, &opts, &tol()).unwrap();
    let (w, z) = (fwd.w_report.z_opt.unwrap(), fwd.z_report.z_opt.unwrap());
    let (w_rev, z_rev) = (rev.w_report.z_opt.unwrap(), rev.z_report.z_opt.unwrap());
    // B has the zero product, so the reversed w-system forces w' = 0.
    assert!(w_rev.norm() < 1e-9 && (&w_rev - &z).norm() < 1e-9);
    assert!((&z_rev - &w).norm() < 1e-6);
}
