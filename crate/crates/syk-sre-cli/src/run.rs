//! Mode dispatch: solve, tabulate, write CSV + manifest.

use std::f64::consts::LN_2;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use syk_sre::domain::{GridPolicy, ModelParams, TauGrid};
use syk_sre::exact_reference::{
    build_hamiltonian, build_majorana_ops, disorder_average, ed_sre, free_pair_m2, sre_cross_checked, thermal_state,
    CouplingSample,
};
use syk_sre::sre_solver::{iterate_sre_with, SreInit, SreOptions, SreSaddleResult};
use syk_sre::sweep_driver::{
    figure_data, select_dominant, sre_branch, sre_curve, thermal_branch, thermal_curve, SeedTag, TransitionEstimate,
};
use syk_sre::thermal_solver::renyi2;

use crate::config::{InitChoice, Mode, RunConfig};
use crate::output::{curve_rows, emit_csv, Row, RunManifest};

/// What a run produced. `exit_code` is 0 when every point converged.
#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

struct Tables {
    tables: Vec<(String, Vec<Row>)>,
    summary: String,
}

fn sre_options(cfg: &RunConfig) -> SreOptions {
    let d = SreOptions::default();
    SreOptions {
        tol: cfg.tol.unwrap_or(d.tol),
        max_iter: cfg.max_iter.unwrap_or(d.max_iter),
        damping: cfg.damping.unwrap_or(d.damping),
        with_renyi2: false,
        ..d
    }
}

fn policy(cfg: &RunConfig) -> anyhow::Result<GridPolicy> {
    cfg.grid.ok_or_else(|| anyhow!("mode {} needs 'slices_m' or 'dtau'", cfg.mode.as_str()))
}

fn transition_line(m: &mut RunManifest, name: &str, t: &Option<TransitionEstimate>) {
    match t {
        Some(t) => {
            m.set(format!("transition.{name}.beta_star"), format!("{:.16e}", t.beta_star));
            m.set(format!("transition.{name}.bracket"), format!("{:.16e}, {:.16e}", t.bracket.0, t.bracket.1));
            m.set(format!("transition.{name}.method"), format!("{:?}", t.method));
        }
        None => m.set(format!("transition.{name}"), "none (crossover)"),
    }
}

fn run_ed(cfg: &RunConfig, m: &mut RunManifest) -> anyhow::Result<Tables> {
    let nq = cfg.params.n_per_side as f64;
    let mut rows = Vec::new();
    for &beta in &cfg.beta_grid {
        let p = cfg.params.with_beta(beta);
        let mut samples = Vec::with_capacity(cfg.n_samples);
        for i in 0..cfg.n_samples as u64 {
            let seed = cfg.rng_seed.wrapping_add(i);
            let (state, vals) = ed_sre(&p, seed).with_context(|| format!("ED sample with seed {seed}"))?;
            samples.push((state.ln_z, vals));
        }
        let pick = |f: &dyn Fn(&(f64, syk_sre::exact_reference::SreValues)) -> f64| {
            disorder_average(|s| Ok(f(&samples[(s - cfg.rng_seed) as usize]) / nq), cfg.n_samples, cfg.rng_seed)
        };
        let ln_z = pick(&|s| s.0)?;
        let m2 = pick(&|s| s.1.m2)?;
        let s2 = pick(&|s| s.1.s2)?;
        let mt = pick(&|s| s.1.m2_tilde)?;
        m.set(format!("ed.beta={beta:?}.m2_stderr"), format!("{:.6e}", m2.stderr));
        m.set(format!("ed.beta={beta:?}.s2_stderr"), format!("{:.6e}", s2.stderr));
        m.set(format!("ed.beta={beta:?}.m2tilde_stderr"), format!("{:.6e}", mt.stderr));
        let mut r = Row::blank(beta, p.energy_unit(), "ed");
        r.action = -ln_z.mean;
        r.m2 = m2.mean;
        r.s2 = s2.mean;
        r.m2_tilde = mt.mean;
        r.converged = true;
        rows.push(r);
    }
    Ok(Tables { tables: vec![("ed.csv".into(), rows)], summary: String::new() })
}

fn run_thermal(cfg: &RunConfig, m: &mut RunManifest) -> anyhow::Result<Tables> {
    let pol = policy(cfg)?;
    let p = cfg.params;
    let betas = &cfg.beta_grid;
    let unit = p.energy_unit();
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for tag in [SeedTag::BlackHole, SeedTag::Wormhole] {
        let saddles = thermal_branch(&p, betas, tag, cfg.seeds, pol)?;
        for (k, s) in saddles.iter().enumerate() {
            m.set(format!("point.{}.beta={:?}.residual", tag.as_str(), betas[k]), format!("{:.3e}", s.residual));
        }
        let c = thermal_curve(betas, &saddles, tag);
        rows.extend(curve_rows(&c, unit, tag.as_str(), |_, _| {}));
        curves.push(c);
    }
    let dom = select_dominant(&curves)?;
    let mut dom_rows = curve_rows(&dom, unit, "dominant", |_, _| {});
    for (k, r) in dom_rows.iter_mut().enumerate() {
        let b = betas[k];
        let s2 = renyi2(&p.with_beta(b), pol.grid(b))?;
        r.s2 = s2;
    }
    rows.extend(dom_rows);
    let t = syk_sre::sweep_driver::locate_transition(&curves[0], &curves[1]).ok();
    transition_line(m, "hp", &t);
    Ok(Tables { tables: vec![("thermal.csv".into(), rows)], summary: String::new() })
}

fn sre_rows(betas: &[f64], results: &[SreSaddleResult], tag: SeedTag, unit: f64) -> Vec<Row> {
    let c = sre_curve(betas, results, tag);
    curve_rows(&c, unit, tag.as_str(), |r, v| r.m2 = v)
}

fn run_sre(cfg: &RunConfig, m: &mut RunManifest) -> anyhow::Result<Tables> {
    let pol = policy(cfg)?;
    let p = cfg.params;
    let betas = &cfg.beta_grid;
    let unit = p.energy_unit();
    let opts = sre_options(cfg);
    let tags: &[SeedTag] = match cfg.init {
        InitChoice::Disconnected => &[SeedTag::Disconnected],
        InitChoice::Connected => &[SeedTag::Connected],
        InitChoice::Both => &[SeedTag::Disconnected, SeedTag::Connected],
    };
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for &tag in tags {
        let res = sre_branch(&p, betas, tag, cfg.seeds, pol, opts)?;
        for (k, r) in res.iter().enumerate() {
            let key = format!("point.{}.beta={:?}", tag.as_str(), betas[k]);
            m.set(format!("{key}.residual"), format!("{:.3e}", r.residual));
            m.set(format!("{key}.iterations"), r.iterations);
            m.set(format!("{key}.connectivity"), format!("{:?}", r.branch_tag));
        }
        rows.extend(sre_rows(betas, &res, tag, unit));
        curves.push(sre_curve(betas, &res, tag));
    }
    let dom = select_dominant(&curves)?;
    let mut dom_rows = curve_rows(&dom, unit, "dominant", |r, v| r.m2 = v);
    for (k, r) in dom_rows.iter_mut().enumerate() {
        let b = betas[k];
        r.s2 = renyi2(&p.with_beta(b), pol.grid(b))?;
        r.m2_tilde = r.m2 - r.s2;
    }
    rows.extend(dom_rows);
    if curves.len() == 2 {
        let t = syk_sre::sweep_driver::locate_transition(&curves[0], &curves[1]).ok();
        transition_line(m, "sre", &t);
    }
    Ok(Tables { tables: vec![("sre.csv".into(), rows)], summary: String::new() })
}

fn run_sweep(cfg: &RunConfig, m: &mut RunManifest) -> anyhow::Result<Tables> {
    let pol = policy(cfg)?;
    let p = cfg.params;
    let unit = p.energy_unit();
    let fd = figure_data(&p, &cfg.beta_grid, pol, pol, cfg.seeds, sre_options(cfg))?;
    let mut m2_rows = Vec::new();
    for c in &fd.sre_branches {
        m2_rows.extend(curve_rows(c, unit, c.seed_tag.as_str(), |r, v| r.m2 = v));
    }
    m2_rows.extend(curve_rows(&fd.m2, unit, "dominant", |r, v| r.m2 = v));
    let mut s2_rows = Vec::new();
    for c in &fd.thermal_branches {
        s2_rows.extend(curve_rows(c, unit, c.seed_tag.as_str(), |_, _| {}));
    }
    s2_rows.extend(curve_rows(&fd.s2, unit, "dominant", |r, v| r.s2 = v));
    let m2t_rows: Vec<Row> = (0..fd.m2_tilde.len())
        .map(|k| {
            let mut r = Row::blank(cfg.beta_grid[k], unit, "dominant");
            r.action = fd.m2.action_values[k];
            r.m2 = fd.m2.observable_values[k];
            r.s2 = fd.s2.observable_values[k];
            r.m2_tilde = fd.m2_tilde.observable_values[k];
            r.converged = fd.m2_tilde.converged[k];
            r
        })
        .collect();
    transition_line(m, "sre", &fd.sre_transition);
    transition_line(m, "hp", &fd.hp_transition);
    transition_line(m, "hp_half", &fd.hp_half_transition);
    Ok(Tables {
        tables: vec![
            ("sweep_m2.csv".into(), m2_rows),
            ("sweep_s2.csv".into(), s2_rows),
            ("sweep_m2tilde.csv".into(), m2t_rows),
        ],
        summary: String::new(),
    })
}

/// Quick invariant suite; every line is one pass/fail check.
fn run_check(_cfg: &RunConfig, m: &mut RunManifest) -> anyhow::Result<Tables> {
    let mut lines: Vec<(String, bool, String)> = Vec::new();

    // direct Pauli-spectrum vs replicated trace, small ED
    let p = ModelParams::new(2, 1.0, 0.1, 2.0);
    let ops = build_majorana_ops(4)?;
    let h = build_hamiltonian(&p, &CouplingSample::draw(2, 1.0, 3), &ops)?;
    let st = thermal_state(&h, 2.0)?;
    let ok = sre_cross_checked(&st, &ops).is_ok();
    lines.push(("ed: direct == replicated (N=2)".into(), ok, String::new()));

    // β = 0 anchors in ED
    let (_, v) = ed_sre(&ModelParams::new(2, 1.0, 0.1, 0.0), 1)?;
    let nl2 = 2.0 * LN_2;
    let ok = (v.m2 - nl2).abs() < 1e-12 && (v.s2 - nl2).abs() < 1e-12 && v.m2_tilde.abs() < 1e-12;
    lines.push(("ed: beta=0 anchors".into(), ok, format!("m2={:.12} s2={:.12}", v.m2, v.s2)));

    // free pair closed form in ED
    let (_, v) = ed_sre(&ModelParams::new(2, 0.0, 1.0, 2.0), 1)?;
    let want = 2.0 * free_pair_m2(2.0);
    lines.push((
        "ed: free pair closed form".into(),
        (v.m2 - want).abs() < 1e-10,
        format!("{:.12} vs {:.12}", v.m2, want),
    ));

    // discretization anchor at J = μ = 0
    let opts = SreOptions { with_renyi2: false, ..SreOptions::default() };
    let r =
        iterate_sre_with(&ModelParams::new(1, 0.0, 0.0, 2.0), TauGrid::new(2.0, 32), SreInit::DisconnectedSeed, opts)?;
    lines.push(("sre: S_SRE(J=mu=0) = -4 ln 2".into(), r.s_sre == -4.0 * LN_2, format!("{:.17}", r.s_sre)));

    // sector pairing on the dense contour
    let dbg = SreOptions { debug_pairing: true, ..opts };
    let r =
        iterate_sre_with(&ModelParams::new(1, 1.0, 0.1, 3.0), TauGrid::new(3.0, 16), SreInit::DisconnectedSeed, dbg)?;
    let d = r.pairing_defect.unwrap_or(f64::INFINITY);
    lines.push(("sre: sector pairing (debug)".into(), d < 1e-8 && r.converged, format!("max defect {d:.3e}")));

    // μ = 0 flatness
    let r =
        iterate_sre_with(&ModelParams::new(1, 1.0, 0.0, 5.0), TauGrid::new(5.0, 64), SreInit::DisconnectedSeed, opts)?;
    lines.push(("sre: mu=0 flatness".into(), (r.m2 - LN_2).abs() < 1e-2 && r.converged, format!("m2={:.10}", r.m2)));

    let mut summary = String::new();
    let mut rows = Vec::new();
    for (k, (name, ok, detail)) in lines.iter().enumerate() {
        let verdict = if *ok { "PASS" } else { "FAIL" };
        summary.push_str(&format!("{verdict}  {name}  {detail}\n"));
        m.set(format!("check.{k}"), format!("{verdict} {name}"));
        let mut r = Row::blank(0.0, 1.0, &name.replace([',', ' '], "_"));
        r.converged = *ok;
        rows.push(r);
    }
    Ok(Tables { tables: vec![("check.csv".into(), rows)], summary })
}

/// Runs one configuration, writing every table and the manifest into
/// `out_dir`. The manifest is written even when the run fails.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> RunOutcome {
    let start = Instant::now();
    let text = cfg.to_text();
    let mut manifest = RunManifest::new(&text);
    let hash = manifest.hash();
    let result = fs::create_dir_all(out_dir).context("creating output directory").and_then(|_| match cfg.mode {
        Mode::Ed => run_ed(cfg, &mut manifest),
        Mode::Thermal => run_thermal(cfg, &mut manifest),
        Mode::Sre => run_sre(cfg, &mut manifest),
        Mode::Sweep => run_sweep(cfg, &mut manifest),
        Mode::Check => run_check(cfg, &mut manifest),
    });
    let mut files = Vec::new();
    let (exit_code, summary) = match result {
        Ok(t) => {
            let mut all = true;
            let mut write_err = None;
            for (name, rows) in &t.tables {
                all &= rows.iter().all(|r| r.converged);
                let path = out_dir.join(name);
                match emit_csv(rows, &path, &hash) {
                    Ok(()) => files.push(path),
                    Err(e) => write_err = Some(format!("{}: {e}", path.display())),
                }
                let bad = rows.iter().filter(|r| !r.converged).count();
                manifest.set(format!("table.{name}.rows"), rows.len());
                manifest.set(format!("table.{name}.unconverged"), bad);
            }
            match write_err {
                Some(e) => {
                    manifest.set("status", "failed");
                    manifest.set("error", &e);
                    (1, e)
                }
                None => {
                    manifest.set("status", if all { "ok" } else { "partial" });
                    (if all { 0 } else { 1 }, t.summary)
                }
            }
        }
        Err(e) => {
            manifest.set("status", "failed");
            manifest.set("error", format!("{e:#}"));
            (1, format!("error: {e:#}\n"))
        }
    };
    manifest.set("wall_time_s", format!("{:.3}", start.elapsed().as_secs_f64()));
    let mpath = out_dir.join("manifest.txt");
    if manifest.write(&mpath).is_ok() {
        files.push(mpath);
    }
    RunOutcome { exit_code, files, summary }
}
