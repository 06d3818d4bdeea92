//! One function per subcommand; each fills a [`RunReport`].

use std::path::Path;

use quasimult::banachstone::{analyze, IdentitySide};
use quasimult::cpcone::{bootstrap_check, cb_norm, cc_feasibility, oap_decide, soap_scaled_rep, BootstrapSide, BootstrapStatus};
use quasimult::mult::{
    left_mult_space, qc_check, quasi_mult_space, quasihom_residual, right_mult_space, ter_space, Provenance, Realization,
    Side,
};
use quasimult::product::associativity_residual;
use quasimult::sdp::SdpStatus;
use quasimult::{BilinearProduct, ComplexMatrix, EnvelopeEmbedding, OperatorSpace, Tolerances, C64};

use crate::formats::{read_envelope, read_map, read_matrix, read_product, read_space};
use crate::report::RunReport;
use crate::{gallery, CliError, Command, GalleryAction, MapArgs, ProductArgs, Settings, SideArg, SpaceArgs};

pub fn execute(cmd: &Command, s: &Settings, mut rep: RunReport) -> Result<RunReport, CliError> {
    match cmd {
        Command::Qm(a) => multipliers(a, Side::Quasi, s, &mut rep)?,
        Command::Lmult(a) => multipliers(a, Side::Left, s, &mut rep)?,
        Command::Rmult(a) => multipliers(a, Side::Right, s, &mut rep)?,
        Command::Ter(a) => ter(a, s, &mut rep)?,
        Command::Assoc { product } => {
            input(&mut rep, product);
            let m = read_product(product)?;
            let r = associativity_residual(&m);
            rep.count("dimension", m.dim());
            rep.residual("associativity", r);
            rep.verdict("associative", yes_no(r <= 1e-9));
        }
        Command::Ccheck(a) => ccheck(a, s, &mut rep)?,
        Command::Cbnorm { map, cross_check } => cbnorm(map, *cross_check, s, &mut rep)?,
        Command::Oap(a) => oap(a, s, &mut rep)?,
        Command::Bootstrap { product, side } => bootstrap(product, *side, s, &mut rep)?,
        Command::Soaprep { space, z, r, samples } => soaprep(space, z, *r, *samples, s, &mut rep)?,
        Command::BanachStone {
            space,
            target,
            map,
            envelope,
            target_envelope,
        } => banach_stone(space, target, map, envelope.as_deref(), target_envelope.as_deref(), s, &mut rep)?,
        Command::Qc(a) => qc(a, s, &mut rep)?,
        Command::Gallery { action } => match action {
            GalleryAction::Run { name } => gallery::run(name, s, &mut rep)?,
            GalleryAction::List => gallery::list(&mut rep),
            GalleryAction::Export { name, dir } => gallery::export(name, dir, &s.tol, &mut rep)?,
        },
    }
    Ok(rep)
}

fn input(rep: &mut RunReport, path: &Path) {
    rep.inputs.push(path.display().to_string());
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// A space given directly, through an envelope, or both.
pub struct Loaded {
    pub space: Option<OperatorSpace>,
    pub envelope: Option<EnvelopeEmbedding>,
}

impl Loaded {
    pub fn load(args: &SpaceArgs, tol: &Tolerances, rep: &mut RunReport) -> Result<Self, CliError> {
        if args.space.is_none() && args.envelope.is_none() {
            return Err(CliError::Input("give --space, --envelope or both".into()));
        }
        let space = match &args.space {
            Some(p) => {
                input(rep, p);
                Some(read_space(p, tol)?)
            }
            None => None,
        };
        let envelope = match &args.envelope {
            Some(p) => {
                input(rep, p);
                Some(read_envelope(p, tol)?)
            }
            None => None,
        };
        Ok(Self { space, envelope })
    }

    pub fn realization(&self, tol: &Tolerances) -> Result<Realization<'_>, CliError> {
        Ok(match (&self.space, &self.envelope) {
            (Some(x), env) => Realization::new(x, env.as_ref(), tol)?,
            (None, Some(env)) => Realization::enveloped(env),
            (None, None) => unreachable!("checked on load"),
        })
    }
}

fn provenance(rep: &mut RunReport, p: Provenance) {
    rep.verdict(
        "provenance",
        match p {
            Provenance::Relative => "relative",
            Provenance::Envelope => "envelope",
        },
    );
}

fn product_for(real: &Realization<'_>, path: &Path, rep: &mut RunReport) -> Result<BilinearProduct, CliError> {
    input(rep, path);
    let m = read_product(path)?;
    let d = real.working().dim();
    if m.dim() != d {
        return Err(CliError::Input(format!("product has dimension {}, space has dimension {d}", m.dim())));
    }
    Ok(m)
}

/// Reduced row echelon form of the vectorized matrices, for display.
pub fn echelon(mats: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    let Some(first) = mats.first() else {
        return Vec::new();
    };
    let (rows, cols) = first.shape();
    let len = rows * cols;
    let mut m: Vec<Vec<C64>> = mats.iter().map(|a| (0..len).map(|t| a[(t / cols, t % cols)]).collect()).collect();
    let mut pivot_row = 0;
    for col in 0..len {
        if pivot_row == m.len() {
            break;
        }
        let (best, mag) = (pivot_row..m.len())
            .map(|r| (r, m[r][col].norm()))
            .fold((pivot_row, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if mag < 1e-9 {
            continue;
        }
        m.swap(pivot_row, best);
        let p = m[pivot_row][col];
        for v in m[pivot_row].iter_mut() {
            *v /= p;
        }
        let pivot = m[pivot_row].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != pivot_row {
                let f = row[col];
                for (v, pv) in row.iter_mut().zip(&pivot) {
                    *v -= f * pv;
                }
            }
        }
        pivot_row += 1;
    }
    m.truncate(pivot_row);
    let snap = |x: f64| if x.abs() < 1e-12 { 0.0 } else { x };
    m.iter()
        .map(|v| ComplexMatrix::from_fn(rows, cols, |i, j| C64::new(snap(v[i * cols + j].re), snap(v[i * cols + j].im))))
        .collect()
}

fn multipliers(a: &SpaceArgs, side: Side, s: &Settings, rep: &mut RunReport) -> Result<(), CliError> {
    let loaded = Loaded::load(a, &s.tol, rep)?;
    let real = loaded.realization(&s.tol)?;
    let ms = match side {
        Side::Left => left_mult_space(&real, &s.tol)?,
        Side::Right => right_mult_space(&real, &s.tol)?,
        Side::Quasi => quasi_mult_space(&real, &s.tol)?,
    };
    provenance(rep, ms.provenance);
    rep.count("dimension", ms.dim());
    rep.count("effective_dimension", ms.effective_dimension);
    rep.count("action_kernel_dimension", ms.action_kernel.rank());
    rep.matrices("basis", &echelon(&ms.block_form(&s.tol)?.frame_matrices()));
    if let Some(c) = ms.corner {
        rep.note(format!("basis shown in the {}×{} corner at ({}, {})", c.rows, c.cols, c.r0, c.c0));
    }
    Ok(())
}

fn ter(a: &SpaceArgs, s: &Settings, rep: &mut RunReport) -> Result<(), CliError> {
    let loaded = Loaded::load(a, &s.tol, rep)?;
    let real = loaded.realization(&s.tol)?;
    let env = real.require_envelope()?;
    let (n1, n2) = env.split();
    let t = ter_space(&real, &s.tol)?;
    rep.count("dimension", t.rank());
    rep.count("space_dimension", real.working().dim());
    rep.verdict("ternary_part_is_whole_space", yes_no(t.rank() == real.working().dim()));
    if t.rank() > 0 {
        rep.matrices("basis", &echelon(&t.compress(0, n1, n1, n2, &s.tol)?.frame_matrices()));
    }
    Ok(())
}

fn read_map_pair(a: &MapArgs, s: &Settings, rep: &mut RunReport) -> Result<(OperatorSpace, Vec<ComplexMatrix>), CliError> {
    input(rep, &a.space);
    input(rep, &a.map);
    Ok((read_space(&a.space, &s.tol)?, read_map(&a.map)?))
}

fn sdp_status(rep: &mut RunReport, key: &str, status: SdpStatus, yes: &str, no: &str) {
    let v = match status {
        SdpStatus::Feasible => yes,
        SdpStatus::Infeasible => no,
        SdpStatus::MaxIter => {
            rep.inconclusive();
            "inconclusive"
        }
    };
    rep.verdict(key, v);
}

fn ccheck(a: &MapArgs, s: &Settings, rep: &mut RunReport) -> Result<(), CliError> {
    let (x, images) = read_map_pair(a, s, rep)?;
    let out = cc_feasibility(&x, &images, &s.sdp)?;
    sdp_status(rep, "complete_contractivity", out.status, "completely_contractive", "not_completely_contractive");
    rep.count("solver_iterations", out.iterations);
    rep.residual("affine", out.affine_residual);
    rep.residual("cone", out.cone_residual);
    Ok(())
}

fn cbnorm(a: &MapArgs, cross_check: bool, s: &Settings, rep: &mut RunReport) -> Result<(), CliError> {
    let (x, images) = read_map_pair(a, s, rep)?;
    let out = cb_norm(&x, &images, &s.sdp, cross_check.then_some(&s.ascent))?;
    sdp_status(rep, "solver", out.status, "converged", "infeasible");
    rep.value("cb_norm", out.value);
    rep.value("level1_witness_ratio", out.witness_ratio);
    if let Some(b) = out.ascent_bound {
        rep.value("ascent_lower_bound", b);
        rep.verdict("cross_check", if out.mismatch { "mismatch" } else { "agree" });
    }
    rep.matrix("choi_certificate", &out.choi_certificate);
    Ok(())
}

fn oap(a: &ProductArgs, s: &Settings, rep: &mut RunReport) -> Result<(), CliError> {
    let loaded = Loaded::load(&a.space, &s.tol, rep)?;
    let real = loaded.realization(&s.tol)?;
    let m = product_for(&real, &a.product, rep)?;
    let d = oap_decide(&real, &m, &s.sdp, &s.tol)?;
    provenance(rep, d.report.provenance);
    rep.verdict("oap", d.verdict.as_str());
    rep.verdict("rigorous", yes_no(d.rigorous));
    rep.verdict("representable", yes_no(d.report.feasible));
    if let Some(v) = d.qm_norm {
        rep.value("qm_norm", v);
    }
    rep.count("solution_space_dimension", d.report.solution_space_dim);
    rep.residual("stage1", d.report.stage1_residual);
    if let Some(r) = d.report.reconstruction_residual {
        rep.residual("reconstruction", r);
    }
    if let Some(z) = &d.report.z_opt {
        rep.matrix("z_opt", z);
    }
    if d.inconclusive {
        rep.note("norm minimization did not converge and the norm exceeds one");
        rep.inconclusive();
    }
    Ok(())
}

fn bootstrap(a: &ProductArgs, side: SideArg, s: &Settings, rep: &mut RunReport) -> Result<(), CliError> {
    let loaded = Loaded::load(&a.space, &s.tol, rep)?;
    let real = loaded.realization(&s.tol)?;
    let m = product_for(&real, &a.product, rep)?;
    let side = match side {
        SideArg::Beta => BootstrapSide::Beta,
        SideArg::Alpha => BootstrapSide::Alpha,
    };
    let out = bootstrap_check(&real, &m, side, &s.sdp, &s.tol)?;
    rep.verdict("side", if side == BootstrapSide::Beta { "beta" } else { "alpha" });
    let verdict = match out.verdict() {
        Some(true) => "completely_contractive",
        Some(false) => "not_completely_contractive",
        None => {
            rep.inconclusive();
            "inconclusive"
        }
    };
    rep.verdict("complete_contractivity", verdict);
    match &out.status {
        BootstrapStatus::GammaNotRepresentable { residual } => {
            rep.verdict("factor", "not_representable");
            rep.residual("factor", *residual);
        }
        BootstrapStatus::Decided(o) => {
            rep.verdict("factor", "representable");
            rep.count("solver_iterations", o.iterations);
            rep.residual("affine", o.affine_residual);
            rep.residual("cone", o.cone_residual);
        }
    }
    if let Some(f) = &out.factor_images {
        rep.matrices("factor_images", f);
    }
    Ok(())
}

fn soaprep(a: &SpaceArgs, z: &Path, r: f64, samples: usize, s: &Settings, rep: &mut RunReport) -> Result<(), CliError> {
    let loaded = Loaded::load(a, &s.tol, rep)?;
    let real = loaded.realization(&s.tol)?;
    input(rep, z);
    let z = read_matrix(z)?;
    let out = soap_scaled_rep(&real, &z, r, samples.max(1), s.ascent.seed, &s.tol)?;
    rep.value("r", out.r);
    rep.residual("multiplicativity", out.multiplicativity_residual);
    rep.residual("level1_isometry", out.level1_error);
    rep.residual("level2_isometry", out.level2_error);
    let ok = out.multiplicativity_residual < 1e-9 && out.level1_error < 1e-8 && out.level2_error < 1e-8;
    rep.verdict("scaled_complete_isometry", yes_no(ok));
    rep.matrices("images", &out.images);
    Ok(())
}

fn banach_stone(
    space: &Path,
    target: &Path,
    map: &Path,
    env_a: Option<&Path>,
    env_b: Option<&Path>,
    s: &Settings,
    rep: &mut RunReport,
) -> Result<(), CliError> {
    for p in [Some(space), Some(target), Some(map), env_a, env_b].into_iter().flatten() {
        input(rep, p);
    }
    let a = read_space(space, &s.tol)?;
    let b = read_space(target, &s.tol)?;
    let psi = read_map(map)?;
    let ea = env_a.map(|p| read_envelope(p, &s.tol)).transpose()?;
    let eb = env_b.map(|p| read_envelope(p, &s.tol)).transpose()?;
    let res = analyze(&a, &b, &psi, ea.as_ref(), eb.as_ref(), &s.sdp, &s.tol)?;
    rep.verdict("complete_isometry", yes_no(res.is_complete_isometry));
    rep.value("psi_cb_norm", res.psi_cb_norm);
    rep.value("psi_inverse_cb_norm", res.psi_inverse_cb_norm);
    for (key, r) in [("z", &res.z_report), ("w", &res.w_report)] {
        if let Some(v) = r.qm_norm {
            rep.value(&format!("{key}_norm"), v);
        }
        rep.count(&format!("{key}_solution_space_dimension"), r.solution_space_dim);
        if let Some(m) = &r.z_opt {
            rep.matrix(key, m);
        }
    }
    rep.verdict("pi_l_multiplies", yes_no(res.pi_l_multiplies));
    rep.verdict("pi_r_multiplies", yes_no(res.pi_r_multiplies));
    rep.verdict("pi_l_isometric", yes_no(res.pi_l_isometric()));
    rep.verdict("pi_r_isometric", yes_no(res.pi_r_isometric()));
    rep.count("pi_l_rank", res.pi_l_rank);
    rep.count("pi_r_rank", res.pi_r_rank);
    rep.residual("pi_l_homomorphism", res.hom_residuals.pi_l);
    rep.residual("pi_r_homomorphism", res.hom_residuals.pi_r);
    rep.residual("pi_l_isometry", res.pi_l_isometry_defect);
    rep.residual("pi_r_isometry", res.pi_r_isometry_defect);
    rep.matrices("pi_l_images", &res.pi_l_images);
    rep.matrices("pi_r_images", &res.pi_r_images);
    match &res.identity_report {
        Some(id) => {
            rep.verdict(
                "identity",
                match id.side {
                    IdentitySide::Right => "right",
                    IdentitySide::Left => "left",
                },
            );
            rep.matrix("identity_e", &id.e);
            rep.residual("w_vs_psi_e_star", id.w_vs_psi_e_star_residual);
            rep.residual("identity_unit", id.unit_residual);
        }
        None => rep.verdict("identity", "none"),
    }
    Ok(())
}

fn qc(a: &ProductArgs, s: &Settings, rep: &mut RunReport) -> Result<(), CliError> {
    let loaded = Loaded::load(&a.space, &s.tol, rep)?;
    let real = loaded.realization(&s.tol)?;
    let m = product_for(&real, &a.product, rep)?;
    let out = qc_check(&real, &m, &s.tol)?;
    rep.verdict("gamma_exists", yes_no(out.gamma_exists));
    rep.verdict("psi_exists", yes_no(out.psi_exists));
    rep.verdict("quasicentralizer", yes_no(out.is_quasicentralizer()));
    rep.residual("gamma", out.gamma_residual);
    rep.residual("psi", out.psi_residual);
    if let Some(g) = &out.gamma_images {
        rep.matrices("gamma_images", g);
        rep.residual("gamma_quasihomomorphism", quasihom_residual(real.working(), g, &s.tol)?);
    }
    if let Some(p) = &out.psi_images {
        rep.matrices("psi_images", p);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use quasimult::numerics::unit;

    #[test]
    fn echelon_recovers_units() {
        let a = unit(2, 2, 0, 0) + unit(2, 2, 1, 1);
        let b = unit(2, 2, 0, 0) - unit(2, 2, 1, 1);
        let e = echelon(&[a, b]);
        assert_eq!(e, vec![unit(2, 2, 0, 0), unit(2, 2, 1, 1)]);
    }
}
