//! Four-replica saddle-point solver for the stabilizer Rényi entropy.
//!
//! Production path (replica-diagonal ansatz):
//! * Each sector `(σ_L, σ_R)` is gauge-fixed by `ψ⁽²⁾_s → σ_s ψ⁽²⁾_s`. After
//!   that only `η = σ_L σ_R` survives.
//! * Replicas (1,2) and (3,4) form two identical, decoupled 2β loops.
//! * On one loop the kernel is block-diagonal plus a rank-4 junction
//!   coupling. A Woodbury reduction therefore needs a single 2M×2M LU per
//!   iteration for both η sectors.
//!
//! [`dense`] builds the full 8M contour per sector with explicit junction
//! signs. It is used for debug pairing checks and the replica-symmetry
//! verification.

pub mod dense;

use faer::linalg::solvers::Solve;
use faer::Mat;
use std::f64::consts::LN_2;

use crate::domain::{validate_params, ModelParams, SectorLabel, TauGrid, Temperature};
use crate::error::{Error, Result};
use crate::numerics::{apply_g0c_rows, g0c_dense, log_sum_exp, lu_log_det};
use crate::thermal_solver::{self, ThermalGreen, ThermalInit, LL, LR, RL, RR};

/// Thresholds on `|G_LL(0⁺, β⁻)|` for branch classification.
pub const DISCONNECTED_ABOVE: f64 = 0.35;
pub const CONNECTED_BELOW: f64 = 0.15;

/// Replica-1 block `G^{(11)}_{ss'}(τ_i, τ_j)` as a 2M×2M matrix, row index
/// `s·M + i` (s = 0 for L, 1 for R), in the real gauge.
#[derive(Debug, Clone)]
pub struct ReplicaGreen {
    pub grid: TauGrid,
    pub g: Mat<f64>,
}

impl ReplicaGreen {
    pub fn m(&self) -> usize {
        self.grid.slices_m
    }

    pub fn at(&self, s: usize, i: usize, t: usize, j: usize) -> f64 {
        let m = self.m();
        self.g[(s * m + i, t * m + j)]
    }

    /// Embeds a translation-invariant thermal solution (first M slices of it).
    pub fn from_thermal(th: &ThermalGreen, m: usize, grid: TauGrid) -> Self {
        let mt = th.grid.slices_m;
        let comps = [[LL, LR], [RL, RR]];
        let g = Mat::from_fn(2 * m, 2 * m, |r, c| {
            let (s, i) = (r / m, r % m);
            let (t, j) = (c / m, c % m);
            let comp = comps[s][t];
            if i >= j {
                th.g[comp][i - j]
            } else {
                -th.g[comp][mt + i - j]
            }
        });
        Self { grid, g }
    }
}

/// `Σ'_{ss'} = s_{ss'} J² G'³` elementwise.
#[derive(Debug, Clone)]
pub struct SelfEnergy {
    pub sigma: Mat<f64>,
}

pub fn self_energy(g: &Mat<f64>, m: usize, j: f64) -> SelfEnergy {
    let j2 = j * j;
    let sigma = Mat::from_fn(g.nrows(), g.ncols(), |r, c| {
        let sign = if (r / m) % 2 == (c / m) % 2 { 1.0 } else { -1.0 };
        sign * j2 * g[(r, c)].powi(3)
    });
    SelfEnergy { sigma }
}

/// Fixed-boundary-condition sector result.
#[derive(Debug, Clone)]
pub struct SectorGreen {
    pub sector: SectorLabel,
    /// Replica-1 block of the sector propagator.
    pub g: Mat<f64>,
    /// `ln det g_σ` over the full four-replica contour, relative to the free
    /// twisted propagator of the same sector.
    pub log_det: f64,
    /// Sign of `det(I − G₀V)` on one loop; negative values are unphysical.
    pub det_sign: f64,
}

/// `w_σ ∝ exp(−½ log_det_σ)`, normalized via log-sum-exp.
pub fn sector_weights(log_dets: &[f64; 4]) -> Result<[f64; 4]> {
    let a: Vec<f64> = log_dets.iter().map(|l| -0.5 * l).collect();
    if a.iter().any(|x| x.is_nan()) {
        return Err(Error::Other("NaN sector log-determinant".into()));
    }
    let lse = log_sum_exp(&a);
    if !lse.is_finite() {
        return Err(Error::Other("all sector log-determinants are infinite".into()));
    }
    let mut w = [0.0; 4];
    for (k, x) in a.iter().enumerate() {
        w[k] = (x - lse).exp();
    }
    Ok(w)
}

/// Quantities shared by both η sectors of one loop solve.
struct LoopSolve {
    /// `(I − D V₁)⁻¹ D`: the propagator with junctions removed.
    y: Mat<f64>,
    /// `(I − D V₁)⁻¹ Ê`, n×2.
    f: Mat<f64>,
    /// `Êᵀ V₁ Y`, 2×n.
    ev_y: Mat<f64>,
    /// `Êᵀ V₁ F`, 2×2.
    q: [[f64; 2]; 2],
    /// `ln|det(I − D V₁)|` and its sign.
    ld1: f64,
    sign1: f64,
}

fn mat2_mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn mat2_inv(a: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]
}

/// `V₁ = −μΔτ X + Δτ² Σ` on one replica (2M×2M).
fn interaction(sigma: &Mat<f64>, m: usize, mu: f64, dtau: f64) -> Mat<f64> {
    let d2 = dtau * dtau;
    Mat::from_fn(2 * m, 2 * m, |r, c| {
        let hop = if r % m == c % m && r / m != c / m { -mu * dtau } else { 0.0 };
        hop + d2 * sigma[(r, c)]
    })
}

fn loop_solve(v1: &Mat<f64>, m: usize, iteration: usize) -> Result<LoopSolve> {
    let n = 2 * m;
    let dv = apply_g0c_rows(v1.as_ref(), m);
    let a1 = Mat::from_fn(n, n, |r, c| if r == c { 1.0 } else { 0.0 } - dv[(r, c)]);
    let lu = a1.partial_piv_lu();
    let (sign1, ld1) = lu_log_det(&lu);
    if sign1 == 0.0 || !ld1.is_finite() {
        return Err(Error::Singular { sector: "loop".into(), iteration });
    }
    let g0 = g0c_dense(m);
    let mut d = Mat::<f64>::zeros(n, n);
    d.as_mut().submatrix_mut(0, 0, m, m).copy_from(&g0);
    d.as_mut().submatrix_mut(m, m, m, m).copy_from(&g0);
    let y = lu.solve(&d);
    let e_hat = Mat::from_fn(n, 2, |r, c| if r / m == c { 1.0 } else { 0.0 });
    let f = lu.solve(&e_hat);
    let ev = Mat::from_fn(2, n, |s, c| (0..m).map(|i| v1[(s * m + i, c)]).sum::<f64>());
    let ev_y = &ev * &y;
    let qm = &ev * &f;
    let q = [[qm[(0, 0)], qm[(0, 1)]], [qm[(1, 0)], qm[(1, 1)]]];
    Ok(LoopSolve { y, f, ev_y, q, ld1, sign1 })
}

/// Per-η pieces: `ln|det L_η|` on one loop, its sign, and the 2×n
/// correction `T_η` with `g_η = Y + F T_η`.
fn eta_sector(ls: &LoopSolve, eta: f64, m: usize) -> (f64, f64, Mat<f64>) {
    let ps = [[1.0, 0.0], [0.0, eta]];
    let q1 = ls.q;
    let q2 = mat2_mul(mat2_mul(ps, q1), ps);
    // K = [[I, ½q₂], [−½q₁, I]];  det K = det(I + ¼ q₁ q₂)
    let qq = mat2_mul(q1, q2);
    let schur = [[1.0 + 0.25 * qq[0][0], 0.25 * qq[0][1]], [0.25 * qq[1][0], 1.0 + 0.25 * qq[1][1]]];
    let det_k = schur[0][0] * schur[1][1] - schur[0][1] * schur[1][0];
    // block inverse: k11 = (I + ¼ q₂ q₁)⁻¹, k12 = −½ k11 q₂
    let qq21 = mat2_mul(q2, q1);
    let s2 = [[1.0 + 0.25 * qq21[0][0], 0.25 * qq21[0][1]], [0.25 * qq21[1][0], 1.0 + 0.25 * qq21[1][1]]];
    let k11 = mat2_inv(s2);
    let k12 = mat2_mul(k11, q2).map(|r| r.map(|x| -0.5 * x));
    let k11q2 = mat2_mul(k11, q2);
    let n = 2 * m;
    let t = Mat::from_fn(2, n, |a, c| {
        let ind = |s: usize| if c / m == s { 1.0 } else { 0.0 };
        let mut v = 0.0;
        for b in 0..2 {
            v += 0.5 * k12[a][b] * ls.ev_y[(b, c)] - 0.25 * k11q2[a][b] * ind(b);
        }
        v
    });
    let ld = 2.0 * ls.ld1 + det_k.abs().ln();
    let sign = det_k.signum() * ls.sign1 * ls.sign1;
    (ld, sign, t)
}

/// Orthogonal projection onto `G = −P Gᵀ P`, `P = diag(1, −1)` on species.
pub fn project_physical(g: &Mat<f64>, m: usize) -> Mat<f64> {
    let p = |r: usize| if (r / m).is_multiple_of(2) { 1.0 } else { -1.0 };
    Mat::from_fn(g.nrows(), g.ncols(), |r, c| 0.5 * (g[(r, c)] - p(r) * g[(c, r)] * p(c)))
}

fn sum_g4(g: &Mat<f64>) -> f64 {
    let mut s = 0.0;
    for c in 0..g.ncols() {
        for r in 0..g.nrows() {
            s += g[(r, c)].powi(4);
        }
    }
    s
}

/// One full map `G ↦ Σ_η w_η g_η` (projected) plus sector data and
/// `ln Z_SRE / N_q` evaluated at the input `G`.
pub struct SreStep {
    pub g_new: Mat<f64>,
    pub sectors: [SectorGreen; 4],
    pub weights: [f64; 4],
    pub ln_z_sre: f64,
}

pub fn sre_step(g: &Mat<f64>, params: &ModelParams, grid: TauGrid, iteration: usize) -> Result<SreStep> {
    let m = grid.slices_m;
    let (j, mu, dt) = (params.coupling_j, params.hopping_mu, grid.dtau);
    let sig = self_energy(g, m, j);
    let v1 = interaction(&sig.sigma, m, mu, dt);
    let ls = loop_solve(&v1, m, iteration)?;
    let (ldp, sp, tp) = eta_sector(&ls, 1.0, m);
    let (ldm, sm, tm) = eta_sector(&ls, -1.0, m);
    // full-contour ln det g_σ = −2 · (one-loop ln det(I − G₀V))
    let log_dets = [-2.0 * ldp, -2.0 * ldm, -2.0 * ldm, -2.0 * ldp];
    let weights = sector_weights(&log_dets)?;
    let wp = weights[0] + weights[3];
    let wm = weights[1] + weights[2];
    let n = 2 * m;
    let mix = Mat::from_fn(2, n, |a, c| wp * tp[(a, c)] + wm * tm[(a, c)]);
    let raw = &ls.y + &ls.f * &mix;
    let g_new = project_physical(&raw, m);
    let lse = log_sum_exp(&[ldp, ldm]);
    let ln_z_sre = 4.0 * LN_2 + (lse - LN_2) - 1.5 * j * j * dt * dt * sum_g4(g);
    let sector_green = |s: SectorLabel, t: &Mat<f64>, ld: f64, sign: f64| SectorGreen {
        sector: s,
        g: &ls.y + &ls.f * t,
        log_det: -2.0 * ld,
        det_sign: sign,
    };
    let [s0, s1, s2, s3] = SectorLabel::ALL;
    let sectors = [
        sector_green(s0, &tp, ldp, sp),
        sector_green(s1, &tm, ldm, sm),
        sector_green(s2, &tm, ldm, sm),
        sector_green(s3, &tp, ldp, sp),
    ];
    Ok(SreStep { g_new, sectors, weights, ln_z_sre })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SreBranch {
    Connected,
    Disconnected,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SreStatus {
    Converged,
    Unconverged,
    /// Did not converge and the iterate wandered between branches.
    Bistable,
}

// warm-start payloads are built once per solve; boxing buys nothing
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
pub enum SreInit {
    /// Thermal solution at β copied onto every branch.
    DisconnectedSeed,
    /// First β-half of the 2β wormhole-seeded thermal solution.
    ConnectedSeed,
    From(SreSaddleResult),
    Green(ReplicaGreen),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SreOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    /// Solve all four sectors on the dense contour every iteration and
    /// record the `σ ↔ −σ` log-det mismatch.
    pub debug_pairing: bool,
    /// Compute S₂ and `M̃₂` (two extra thermal solves at 2β).
    pub with_renyi2: bool,
}

impl Default for SreOptions {
    fn default() -> Self {
        Self { tol: 1e-7, max_iter: 3000, damping: 0.3, debug_pairing: false, with_renyi2: true }
    }
}

#[derive(Debug, Clone)]
pub struct SreSaddleResult {
    pub params: ModelParams,
    pub green: ReplicaGreen,
    pub self_energy: SelfEnergy,
    pub sector_weights: [f64; 4],
    pub sector_log_dets: [f64; 4],
    /// `S_SRE / N_q`.
    pub s_sre: f64,
    /// Dominant thermal `S_β / N_q` used for `M₂`.
    pub s_beta: f64,
    pub m2: f64,
    pub s2: Option<f64>,
    pub m2_tilde: Option<f64>,
    pub branch_tag: SreBranch,
    pub status: SreStatus,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    pub negative_det_seen: bool,
    /// Max `|log_det(σ) − log_det(−σ)|` over iterations (debug mode only).
    pub pairing_defect: Option<f64>,
}

/// Reads `|G_LL(0⁺, β⁻)|` of replica 1.
pub fn connectivity_diagnostic(green: &ReplicaGreen) -> SreBranch {
    let m = green.m();
    let v = green.at(0, 0, 0, m - 1).abs();
    if v > DISCONNECTED_ABOVE {
        SreBranch::Disconnected
    } else if v < CONNECTED_BELOW {
        SreBranch::Connected
    } else {
        SreBranch::Indeterminate
    }
}

fn seed_green(params: &ModelParams, grid: TauGrid, init: &SreInit) -> Result<ReplicaGreen> {
    let m = grid.slices_m;
    match init {
        SreInit::DisconnectedSeed => {
            let th = thermal_solver::solve_thermal(params, grid, ThermalInit::Free)?;
            Ok(ReplicaGreen::from_thermal(&th.green, m, grid))
        }
        SreInit::ConnectedSeed => {
            let p2 = params.with_beta(2.0 * params.beta);
            let th = thermal_solver::solve_thermal(&p2, grid.doubled(), ThermalInit::WormholeSeed)?;
            Ok(ReplicaGreen::from_thermal(&th.green, m, grid))
        }
        SreInit::From(r) => Ok(resample_green(&r.green, grid)),
        SreInit::Green(g) => Ok(resample_green(g, grid)),
    }
}

/// Nearest-slice resampling of a replica Green's function onto a new grid,
/// preserving the time ordering of every pair of slices.
pub fn resample_green(src: &ReplicaGreen, grid: TauGrid) -> ReplicaGreen {
    let (mo, mn) = (src.m(), grid.slices_m);
    if mo == mn {
        return ReplicaGreen { grid, g: src.g.clone() };
    }
    let map = |i: usize| (((i as f64) * mo as f64 / mn as f64).round() as usize).min(mo - 1);
    let g = Mat::from_fn(2 * mn, 2 * mn, |r, c| {
        let (s, i) = (r / mn, r % mn);
        let (t, j) = (c / mn, c % mn);
        let (mut io, mut jo) = (map(i), map(j));
        if i == j {
            jo = io;
        } else if i > j && io <= jo {
            if jo + 1 < mo {
                io = jo + 1;
            } else {
                jo = io - 1;
            }
        } else if i < j && io >= jo {
            if io + 1 < mo {
                jo = io + 1;
            } else {
                io = jo - 1;
            }
        }
        src.g[(s * mo + io, t * mo + jo)]
    });
    ReplicaGreen { grid, g: project_physical(&g, mn) }
}

fn infinite_temperature(params: &ModelParams, grid: TauGrid) -> SreSaddleResult {
    let m = grid.slices_m;
    let th = thermal_solver::solve_thermal(params, grid, ThermalInit::Free).expect("β = 0 closed form");
    let green = ReplicaGreen::from_thermal(&th.green, m, grid);
    SreSaddleResult {
        params: *params,
        self_energy: self_energy(&green.g, m, params.coupling_j),
        green,
        sector_weights: [0.25; 4],
        sector_log_dets: [0.0; 4],
        s_sre: -4.0 * LN_2,
        s_beta: -LN_2,
        m2: LN_2,
        s2: Some(LN_2),
        m2_tilde: Some(0.0),
        branch_tag: SreBranch::Disconnected,
        status: SreStatus::Converged,
        converged: true,
        iterations: 0,
        residual: 0.0,
        negative_det_seen: false,
        pairing_defect: None,
    }
}

/// Damped fixed-point iteration of the sector-summed saddle equations.
pub fn iterate_sre(params: &ModelParams, grid: TauGrid, init: SreInit) -> Result<SreSaddleResult> {
    iterate_sre_with(params, grid, init, SreOptions::default())
}

pub fn iterate_sre_with(
    params: &ModelParams,
    grid: TauGrid,
    init: SreInit,
    opts: SreOptions,
) -> Result<SreSaddleResult> {
    let checked = validate_params(*params, grid)?;
    if checked.temperature == Temperature::Infinite {
        return Ok(infinite_temperature(params, grid));
    }
    let m = grid.slices_m;
    let mut g = seed_green(params, grid, &init)?.g;
    // without coupling the map ignores its input: one full step is exact
    let mut x = if params.coupling_j == 0.0 { 1.0 } else { opts.damping };
    let mut prev = f64::INFINITY;
    let mut rises = 0;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut negative_det_seen = false;
    let mut pairing_defect: Option<f64> = None;
    let mut tags_seen = [false; 2];
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let step = sre_step(&g, params, grid, it)?;
        if step.sectors.iter().any(|s| s.det_sign < 0.0) {
            negative_det_seen = true;
        }
        if opts.debug_pairing {
            let d = dense::pairing_defect(&g, params, grid, it)?;
            pairing_defect = Some(pairing_defect.map_or(d, |p: f64| p.max(d)));
        }
        residual = 0.0;
        for c in 0..g.ncols() {
            for r in 0..g.nrows() {
                let d = step.g_new[(r, c)] - g[(r, c)];
                if !d.is_finite() {
                    return Err(Error::NotANumber { iteration: it, detail: format!("entry ({r}, {c})") });
                }
                residual = residual.max(d.abs());
                g[(r, c)] += x * d;
            }
        }
        match connectivity_diagnostic(&ReplicaGreen { grid, g: g.clone() }) {
            SreBranch::Connected => tags_seen[0] = true,
            SreBranch::Disconnected => tags_seen[1] = true,
            SreBranch::Indeterminate => {}
        }
        if residual < opts.tol {
            break;
        }
        if residual > prev {
            rises += 1;
            if rises >= 2 {
                x = (0.5 * x).max(1e-3);
                rises = 0;
            }
        } else {
            rises = 0;
        }
        prev = residual;
    }
    let converged = residual < opts.tol;
    let status = if converged {
        SreStatus::Converged
    } else if tags_seen[0] && tags_seen[1] {
        SreStatus::Bistable
    } else {
        SreStatus::Unconverged
    };
    let fin = sre_step(&g, params, grid, iterations)?;
    let green = ReplicaGreen { grid, g };
    let s_sre = -fin.ln_z_sre;
    let thermal = thermal_solver::dominant_thermal(params, grid)?;
    let s_beta = thermal.action;
    let m2 = s_sre - 4.0 * s_beta + LN_2;
    let (s2, m2_tilde) = if opts.with_renyi2 {
        let two = thermal_solver::dominant_thermal(&params.with_beta(2.0 * params.beta), grid.doubled())?;
        let s2 = two.action - 2.0 * s_beta;
        (Some(s2), Some(m2 - s2))
    } else {
        (None, None)
    };
    Ok(SreSaddleResult {
        params: *params,
        self_energy: self_energy(&green.g, m, params.coupling_j),
        branch_tag: connectivity_diagnostic(&green),
        green,
        sector_weights: fin.weights,
        sector_log_dets: fin.sectors.each_ref().map(|s| s.log_det),
        s_sre,
        s_beta,
        m2,
        s2,
        m2_tilde,
        status,
        converged,
        iterations,
        residual,
        negative_det_seen,
        pairing_defect,
    })
}

/// `S_SRE / N_q` of a converged saddle, re-evaluated from its Green's function.
pub fn action_sre(result: &SreSaddleResult) -> Result<f64> {
    if !result.converged {
        return Err(Error::Unconverged { residual: result.residual, iterations: result.iterations });
    }
    let step = sre_step(&result.green.g, &result.params, result.green.grid, 0)?;
    Ok(-step.ln_z_sre)
}

/// Solve one sector against a given self-energy via the production loop
/// reduction (equivalent to the dense path, see tests).
pub fn solve_sector(sigma: SectorLabel, self_energy: &SelfEnergy, mu: f64, grid: TauGrid) -> Result<SectorGreen> {
    let m = grid.slices_m;
    let v1 = interaction(&self_energy.sigma, m, mu, grid.dtau);
    let ls = loop_solve(&v1, m, 0)?;
    let (ld, sign, t) = eta_sector(&ls, sigma.eta() as f64, m);
    Ok(SectorGreen { sector: sigma, g: &ls.y + &ls.f * &t, log_det: -2.0 * ld, det_sign: sign })
}

pub use dense::{
    build_kinetic, build_kinetic_with, full_replica_check, full_replica_solve, pairing_defect, sector_log_dets,
    FullReplicaOptions, FullReplicaReport, SectorKinetic, CHECK_PERTURBATION,
};
