//! Regression gallery: every fixture with its expectations, run in parallel.

use std::path::Path;
use std::time::Instant;

use quasimult::banachstone::analyze;
use quasimult::catalog::{catalog, Fixture, NAMES};
use quasimult::cpcone::{min_norm_qm, oap_decide, soap_scaled_rep};
use quasimult::mult::{
    adjointable_spaces, left_mult_space, quasi_mult_space, right_identity_analysis, right_mult_space,
    stacked_multiplier_check, ter_space, Realization,
};
use quasimult::numerics::{embed, identity, spectral_norm, unit};
use quasimult::product::{level_norm_ascent, AscentOptions};
use quasimult::{ComplexMatrix, SubspaceBasis, Tolerances};
use rayon::prelude::*;

use crate::formats::{write_json, MapFile, MatrixFile, ProductFile, SpaceFile};
use crate::report::{CaseReport, Check, Origin, Outcome, RunReport};
use crate::{CliError, Settings};

/// Gallery cases: the catalog fixtures plus the stacked-multiplier case.
pub const CASES: [(&str, &str); 8] = [
    ("c2", "column space C2 in M2"),
    ("r2", "row space R2 in M2"),
    ("sharp", "X = A·P with a non-sharp quasimultiplier norm"),
    ("matrix_units", "span of four matrix units in M_{3,2}"),
    ("max_c2_r2", "the maximal space on C2 ∩ R2 data"),
    ("t2_upper", "upper triangular algebra T2"),
    ("nilpotent_pair", "complete isometry onto a nilpotent algebra"),
    ("mly_block", "block multipliers of the stacked space [X; M_r(X)]"),
];

const LINEAR_TOL: f64 = 1e-8;
const SDP_TOL: f64 = 1e-6;
const ASCENT_TOL: f64 = 1e-3;

struct Case {
    checks: Vec<Check>,
}

impl Case {
    fn push(&mut self, label: &str, expected: &str, computed: String, tolerance: Option<f64>, origin: Origin, passed: bool) {
        self.checks.push(Check {
            label: label.into(),
            expected: expected.into(),
            computed,
            tolerance,
            origin,
            passed,
        });
    }

    fn value(&mut self, label: &str, expected: f64, expected_text: &str, computed: f64, tol: f64, origin: Origin) {
        let ok = (computed - expected).abs() <= tol;
        self.push(label, expected_text, format!("{computed:.10}"), Some(tol), origin, ok);
    }

    fn at_most(&mut self, label: &str, bound: f64, expected_text: &str, computed: f64, tol: f64, origin: Origin) {
        let ok = computed <= bound + tol;
        self.push(label, expected_text, format!("{computed:.10}"), Some(tol), origin, ok);
    }

    fn count(&mut self, label: &str, expected: usize, computed: usize, origin: Origin) {
        self.push(label, &expected.to_string(), computed.to_string(), None, origin, expected == computed);
    }

    fn flag(&mut self, label: &str, expected: &str, computed: &str, origin: Origin) {
        self.push(label, expected, computed.into(), None, origin, expected == computed);
    }

    fn span(&mut self, label: &str, expected_text: &str, computed: &SubspaceBasis, expected: &SubspaceBasis, t: &Tolerances, origin: Origin) {
        let equal = computed.equals(expected, t).unwrap_or(false);
        let text = if equal {
            expected_text.to_string()
        } else {
            format!("a different span of dimension {}", computed.rank())
        };
        self.push(label, expected_text, text, None, origin, equal);
    }
}

fn units_span(rows: usize, cols: usize, pos: &[(usize, usize)], t: &Tolerances) -> Result<SubspaceBasis, CliError> {
    let gens: Vec<ComplexMatrix> = pos.iter().map(|&(i, j)| unit(rows, cols, i, j)).collect();
    Ok(SubspaceBasis::span_or_zero(rows, cols, &gens, t)?)
}

fn scalars(n: usize, t: &Tolerances) -> Result<SubspaceBasis, CliError> {
    Ok(SubspaceBasis::span_from(&[identity(n)], t)?)
}

fn fixture(name: &str, t: &Tolerances) -> Result<Fixture, CliError> {
    Ok(catalog(name, t)?)
}

fn c2_case(s: &Settings, c: &mut Case) -> Result<(), CliError> {
    let t = &s.tol;
    let f = fixture("c2", t)?;
    let real = f.realization();
    let rel = quasi_mult_space(&Realization::relative(&f.space), t)?;
    let m2 = units_span(2, 2, &[(0, 0), (0, 1), (1, 0), (1, 1)], t)?;
    c.span("relative QM", "M2", &rel.solution_basis, &m2, t, Origin::Known);
    let env = quasi_mult_space(&real, t)?.block_form(t)?;
    c.span("envelope QM", "row corner R2", &env, &units_span(1, 2, &[(0, 0), (0, 1)], t)?, t, Origin::Known);
    let d1 = oap_decide(&real, f.product("m1").expect("fixture product"), &s.sdp, t)?;
    c.flag("m1 membership", "not_in_OAP", d1.verdict.as_str(), Origin::Known);
    let d2 = oap_decide(&real, f.product("m2").expect("fixture product"), &s.sdp, t)?;
    c.flag("m2 membership", "in_OAP", d2.verdict.as_str(), Origin::Derived);
    c.value("m2 qm-norm", 1.0, "1", d2.qm_norm.unwrap_or(f64::NAN), SDP_TOL, Origin::Derived);
    let ter = ter_space(&real, t)?;
    c.count("TER dimension", 2, ter.rank(), Origin::Derived);
    Ok(())
}

fn r2_case(s: &Settings, c: &mut Case) -> Result<(), CliError> {
    let t = &s.tol;
    let f = fixture("r2", t)?;
    let env = quasi_mult_space(&f.realization(), t)?.block_form(t)?;
    c.span("envelope QM", "column corner C2", &env, &units_span(2, 1, &[(0, 0), (1, 0)], t)?, t, Origin::Derived);
    Ok(())
}

fn sharp_case(s: &Settings, c: &mut Case) -> Result<(), CliError> {
    let t = &s.tol;
    let f = fixture("sharp", t)?;
    let real = f.realization();
    let m = f.product("m_Z").expect("fixture product");
    let z = f.matrix("Z").expect("fixture matrix");
    c.value("‖Z‖", 1.5f64.sqrt(), "√(3/2)", spectral_norm(z), LINEAR_TOL, Origin::Known);
    let rep = min_norm_qm(&real, m, &s.sdp, t)?;
    c.value("qm-norm of m_Z", 1.5f64.sqrt(), "√(3/2)", rep.qm_norm.unwrap_or(f64::NAN), SDP_TOL, Origin::Derived);
    c.count("representing z solution dimension", 0, rep.solution_space_dim, Origin::Derived);
    let a1 = level_norm_ascent(&f.space, m, 1, &s.ascent).lower_bound;
    let a2 = level_norm_ascent(&f.space, m, 2, &s.ascent).lower_bound;
    let exact = 2f64.sqrt() / 3.0;
    c.value("‖m_Z‖ level-1 ascent", exact, "√2/3", a1, ASCENT_TOL, Origin::Derived);
    c.value("‖m_Z‖ level-2 ascent", exact, "√2/3", a2, ASCENT_TOL, Origin::Derived);
    c.at_most("‖m_Z‖ level-2 ascent bound", 0.75f64.sqrt(), "at most √(3/4)", a2, ASCENT_TOL, Origin::Known);
    let p_inv = f.matrix("P_inv").expect("fixture matrix");
    let a: Vec<ComplexMatrix> = ["A0", "A1", "A2"].iter().map(|n| f.matrix(n).expect("fixture matrix").clone()).collect();
    let p_inv_a: Vec<ComplexMatrix> = a.iter().map(|g| p_inv * g).collect();
    let qm = quasi_mult_space(&real, t)?.block_form(t)?;
    c.span("QM", "P⁻¹A", &qm, &SubspaceBasis::span_from(&p_inv_a, t)?, t, Origin::Known);
    let ml = left_mult_space(&real, t)?.block_form(t)?;
    c.span("M_l", "A", &ml, &SubspaceBasis::span_from(&a, t)?, t, Origin::Known);
    Ok(())
}

fn matrix_units_case(s: &Settings, c: &mut Case) -> Result<(), CliError> {
    let t = &s.tol;
    let f = fixture("matrix_units", t)?;
    let real = f.realization();
    let qm = quasi_mult_space(&real, t)?.block_form(t)?;
    c.span("QM", "span{E12, E23}", &qm, &units_span(2, 3, &[(0, 1), (1, 2)], t)?, t, Origin::Known);
    let ml = left_mult_space(&real, t)?.block_form(t)?;
    let ml_expected = units_span(3, 3, &[(0, 0), (0, 1), (0, 2), (1, 1), (2, 2)], t)?;
    c.span("M_l", "span{E11, E12, E13, E22, E33}", &ml, &ml_expected, t, Origin::Known);
    let mr = right_mult_space(&real, t)?.block_form(t)?;
    c.span("M_r", "span{E11, E22}", &mr, &units_span(2, 2, &[(0, 0), (1, 1)], t)?, t, Origin::Known);
    let ter = ter_space(&real, t)?.compress(0, 3, 3, 2, t)?;
    c.span("TER", "span{E21, E32}", &ter, &units_span(3, 2, &[(1, 0), (2, 1)], t)?, t, Origin::Derived);
    let al = adjointable_spaces(&real, t)?.a_l.compress(0, 3, 0, 3, t)?;
    c.span("A_l", "diagonal of M3", &al, &units_span(3, 3, &[(0, 0), (1, 1), (2, 2)], t)?, t, Origin::Derived);
    let zl = f.matrix("z").expect("fixture matrix");
    let rep = soap_scaled_rep(&real, zl, 1.0, 50, s.ascent.seed, t)?;
    let defect = rep.level1_error.max(rep.level2_error).max(rep.multiplicativity_residual);
    c.value("π_l defect for z = E12 + E23 (levels 1, 2)", 0.0, "0", defect, LINEAR_TOL, Origin::Known);
    let z = unit(2, 3, 0, 1) + unit(2, 3, 1, 2);
    let pi_r: Vec<ComplexMatrix> = f.space.basis().iter().map(|x| &z * x).collect();
    let rank = SubspaceBasis::span_or_zero(2, 2, &pi_r, t)?.rank();
    c.flag(
        "π_r for z = E12 + E23",
        "not injective",
        if rank < f.space.dim() { "not injective" } else { "injective" },
        Origin::Known,
    );
    Ok(())
}

fn max_case(s: &Settings, c: &mut Case) -> Result<(), CliError> {
    let t = &s.tol;
    let f = fixture("max_c2_r2", t)?;
    let real = f.realization();
    c.count("QM dimension", 0, quasi_mult_space(&real, t)?.dim(), Origin::Known);
    let sc = scalars(3, t)?;
    let ml = left_mult_space(&real, t)?.block_form(t)?;
    c.span("M_l", "scalars", &ml, &sc, t, Origin::Known);
    let mr = right_mult_space(&real, t)?.block_form(t)?;
    c.span("M_r", "scalars", &mr, &sc, t, Origin::Known);
    let d = oap_decide(&real, f.product("idempotent").expect("fixture product"), &s.sdp, t)?;
    c.flag("idempotent product", "not_in_OAP", d.verdict.as_str(), Origin::Known);
    Ok(())
}

fn t2_case(s: &Settings, c: &mut Case) -> Result<(), CliError> {
    let t = &s.tol;
    let f = fixture("t2_upper", t)?;
    let real = f.realization();
    let r = right_identity_analysis(&real, f.product("ambient").expect("fixture product"), &s.sdp, t)?;
    c.flag("right identity", "exists", if r.exists { "exists" } else { "absent" }, Origin::Derived);
    let dist = |m: &Option<ComplexMatrix>| m.as_ref().map_or(f64::NAN, |m| (m - identity(2)).norm());
    c.value("‖e − I‖", 0.0, "0", dist(&r.e), LINEAR_TOL, Origin::Derived);
    c.value("‖z − I‖", 0.0, "0", dist(&r.z), SDP_TOL, Origin::Derived);
    let mr = right_mult_space(&real, t)?.block_form(t)?;
    c.span("M_r", "T2", &mr, f.space.span(), t, Origin::Derived);
    Ok(())
}

fn nilpotent_case(s: &Settings, c: &mut Case) -> Result<(), CliError> {
    let t = &s.tol;
    let f = fixture("nilpotent_pair", t)?;
    let target = f.target.as_ref().expect("fixture target");
    let psi = f.psi.as_ref().expect("fixture map");
    let res = analyze(&f.space, target, psi, None, None, &s.sdp, t)?;
    let z_norm = res.z_report.z_opt.as_ref().map_or(f64::NAN, |z| z.norm());
    c.value("‖z‖", 0.0, "0", z_norm, LINEAR_TOL, Origin::Derived);
    c.count("z solution dimension", 0, res.z_report.solution_space_dim, Origin::Derived);
    c.value("‖w‖", 1.0, "1", res.w_report.qm_norm.unwrap_or(f64::NAN), SDP_TOL, Origin::Derived);
    let w_dev = res.w_report.z_opt.as_ref().map_or(f64::NAN, |w| (w - embed(&identity(2), 4, 4, 2, 0)).norm());
    c.value("‖w − lower-left I2‖", 0.0, "0", w_dev, SDP_TOL, Origin::Derived);
    let pi_dev = f
        .space
        .basis()
        .iter()
        .zip(&res.pi_l_images)
        .map(|(a, p)| (p - embed(a, 4, 4, 0, 0)).norm())
        .fold(0.0, f64::max);
    c.value("max ‖π_l(a) − [[a, 0], [0, 0]]‖", 0.0, "0", pi_dev, SDP_TOL, Origin::Derived);
    Ok(())
}

fn mly_case(s: &Settings, c: &mut Case) -> Result<(), CliError> {
    let t = &s.tol;
    let f = fixture("matrix_units", t)?;
    let rep = stacked_multiplier_check(f.envelope.as_ref().expect("fixture envelope"), t)?;
    c.count("M_l(Y) dimension", rep.ml_expected_dim, rep.ml_dim, Origin::Derived);
    c.flag("M_l(Y)", "block form", if rep.ml_equal { "block form" } else { "differs" }, Origin::Derived);
    c.count("A_l(Y) dimension", rep.al_expected_dim, rep.al_dim, Origin::Derived);
    c.flag("A_l(Y)", "block form", if rep.al_equal { "block form" } else { "differs" }, Origin::Derived);
    Ok(())
}

fn run_case(name: &str, s: &Settings) -> Case {
    let mut c = Case { checks: Vec::new() };
    let result = match name {
        "c2" => c2_case(s, &mut c),
        "r2" => r2_case(s, &mut c),
        "sharp" => sharp_case(s, &mut c),
        "matrix_units" => matrix_units_case(s, &mut c),
        "max_c2_r2" => max_case(s, &mut c),
        "t2_upper" => t2_case(s, &mut c),
        "nilpotent_pair" => nilpotent_case(s, &mut c),
        "mly_block" => mly_case(s, &mut c),
        _ => unreachable!("names are validated"),
    };
    if let Err(e) = result {
        c.push("evaluation", "completes", e.to_string(), None, Origin::Derived, false);
    }
    c
}

pub fn run(which: &str, s: &Settings, rep: &mut RunReport) -> Result<(), CliError> {
    let selected: Vec<(usize, &str, &str)> = CASES
        .iter()
        .enumerate()
        .filter(|(_, (n, _))| which == "all" || *n == which)
        .map(|(i, (n, a))| (i, *n, *a))
        .collect();
    if selected.is_empty() {
        return Err(CliError::Input(format!(
            "unknown gallery case `{which}`; choose `all` or one of {}",
            CASES.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
        )));
    }
    let mut cases: Vec<CaseReport> = selected
        .par_iter()
        .map(|&(i, name, anchor)| {
            let seed = s.ascent.seed ^ i as u64;
            let settings = Settings {
                ascent: AscentOptions { seed, ..s.ascent },
                ..*s
            };
            let started = Instant::now();
            let c = run_case(name, &settings);
            CaseReport {
                name: name.into(),
                anchor: anchor.into(),
                seed,
                timing_ms: started.elapsed().as_secs_f64() * 1e3,
                passed: c.checks.iter().all(|k| k.passed),
                checks: c.checks,
            }
        })
        .collect();
    cases.sort_by(|a, b| a.name.cmp(&b.name));
    let passed = cases.iter().filter(|c| c.passed).count();
    rep.count("cases", cases.len());
    rep.count("cases_passed", passed);
    if passed < cases.len() {
        rep.outcome = rep.outcome.worst(Outcome::ExpectationMiss);
    }
    rep.cases = cases;
    Ok(())
}

pub fn list(rep: &mut RunReport) {
    for (name, anchor) in CASES {
        rep.verdict(name, anchor);
    }
}

/// Writes the fixture's space, envelope, products, matrices and map.
pub fn export(name: &str, dir: &Path, t: &Tolerances, rep: &mut RunReport) -> Result<(), CliError> {
    if !NAMES.contains(&name) {
        return Err(CliError::Input(format!("unknown fixture `{name}`; choose one of {}", NAMES.join(", "))));
    }
    let f = fixture(name, t)?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    let mut put = |file: String, write: &dyn Fn(&Path) -> Result<(), CliError>| -> Result<(), CliError> {
        let path = dir.join(file);
        write(&path)?;
        written.push(path.display().to_string());
        Ok(())
    };
    put(format!("{name}.space.json"), &|p| write_json(p, &SpaceFile::from_space(&f.space)))?;
    if let Some(env) = &f.envelope {
        put(format!("{name}.envelope.json"), &|p| write_json(p, &SpaceFile::from_envelope(env)))?;
    }
    for (pname, m) in &f.products {
        put(format!("{name}.{pname}.product.json"), &|p| write_json(p, &ProductFile::from_product(m)))?;
    }
    for (mname, m) in &f.matrices {
        put(format!("{name}.{mname}.matrix.json"), &|p| {
            write_json(p, &MatrixFile { matrix: crate::formats::to_json(m) })
        })?;
    }
    if let Some(target) = &f.target {
        put(format!("{name}.target.json"), &|p| write_json(p, &SpaceFile::from_space(target)))?;
    }
    if let Some(psi) = &f.psi {
        put(format!("{name}.map.json"), &|p| {
            write_json(p, &MapFile { images: psi.iter().map(crate::formats::to_json).collect() })
        })?;
    }
    rep.count("files", written.len());
    for w in written {
        rep.note(format!("wrote {w}"));
    }
    Ok(())
}
