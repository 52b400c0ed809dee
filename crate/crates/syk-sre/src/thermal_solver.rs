//! Translation-invariant Schwinger–Dyson solver for the thermal partition
//! function of the coupled model.
//!
//! Works in the real gauge `ψ_R → iψ_R`, where `G_LR` is real and the hopping
//! enters as `μσ_x`. The discrete kernel on `M` antiperiodic slices is
//! `K = G₀⁻¹ + μΔτ X − Δτ² Σ` with `G₀(i,j) = ½ sgn(i−j)`. It is diagonal
//! in the antiperiodic Fourier basis, `θ_n = π(2n+1)/M`.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

use crate::domain::{validate_params, GridPolicy, ModelParams, TauGrid, Temperature};
use crate::error::{Error, Result};
use crate::sweep_driver::{
    locate_transition, thermal_branch, thermal_curve, BranchCurve, SeedStrategy, SeedTag, TransitionEstimate,
};

/// Component order: LL, LR, RL, RR.
pub const LL: usize = 0;
pub const LR: usize = 1;
pub const RL: usize = 2;
pub const RR: usize = 3;

/// Sign of `Σ'_ab = s_ab J² G'_ab³` in the real gauge.
const SIGMA_SIGN: [f64; 4] = [1.0, -1.0, -1.0, 1.0];

/// `G_ab(τ_k)`, `τ_k = kΔτ`, `k = 0..M`; the `k = 0` entry is the
/// equal-time average (zero for LL/RR).
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalGreen {
    pub grid: TauGrid,
    pub g: [Vec<f64>; 4],
}

impl ThermalGreen {
    pub fn g_ll(&self) -> &[f64] {
        &self.g[LL]
    }

    pub fn g_lr(&self) -> &[f64] {
        &self.g[LR]
    }

    /// Value at arbitrary `τ ∈ (−β, β)` for component `c`, using
    /// antiperiodicity for negative arguments.
    pub fn at_slice(&self, c: usize, k: isize) -> f64 {
        let m = self.grid.slices_m as isize;
        if k >= 0 {
            self.g[c][k as usize]
        } else {
            -self.g[c][(k + m) as usize]
        }
    }

    /// Linear resampling onto another grid over its own β (for warm starts).
    pub fn resample(&self, grid: TauGrid) -> ThermalGreen {
        let m_old = self.grid.slices_m;
        let m_new = grid.slices_m;
        if m_old == m_new {
            return ThermalGreen { grid, g: self.g.clone() };
        }
        let mut g: [Vec<f64>; 4] = Default::default();
        for (out, src) in g.iter_mut().zip(&self.g) {
            // knots at slice positions 0..=m_old with one-sided 0⁺ / β⁻ limits
            let mut knots = Vec::with_capacity(m_old + 1);
            knots.push(2.0 * src[1] - src[2.min(m_old - 1)]);
            knots.extend_from_slice(&src[1..]);
            knots.push(2.0 * src[m_old - 1] - src[m_old - 2]);
            let mut dst = vec![0.0; m_new];
            for (k, d) in dst.iter_mut().enumerate().skip(1) {
                let x = k as f64 * m_old as f64 / m_new as f64;
                let i = (x.floor() as usize).min(m_old - 1);
                let f = x - i as f64;
                *d = (1.0 - f) * knots[i] + f * knots[i + 1];
            }
            dst[0] = src[0];
            *out = dst;
        }
        ThermalGreen { grid, g }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThermalBranch {
    BlackHole,
    Wormhole,
}

#[derive(Debug, Clone)]
pub struct ThermalSaddle {
    pub green: ThermalGreen,
    pub self_energy: [Vec<f64>; 4],
    /// `ln Z_β / N_q`.
    pub ln_z: f64,
    /// `S_β / N_q = −ln Z_β / N_q`.
    pub action: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    pub branch_tag: ThermalBranch,
}

// warm-start payloads are built once per solve; boxing buys nothing
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
pub enum ThermalInit {
    /// `G = ½ sgn`, the decoupled free Majorana.
    Free,
    /// Converged μ = 0 SYK solution at the same β.
    BlackHoleSeed,
    /// Exact `J = 0` solution at the same `(β, μ)`.
    WormholeSeed,
    From(ThermalSaddle),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
}

impl Default for ThermalOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 20_000, damping: 0.3 }
    }
}

/// Precomputed FFT plans and free-propagator symbols for one grid.
struct Kernel {
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    phase: Vec<Complex64>,
    g0: Vec<Complex64>,
}

impl Kernel {
    fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        let phase = (0..m).map(|k| Complex64::from_polar(1.0, -PI * k as f64 / m as f64)).collect();
        let g0 = (0..m)
            .map(|n| {
                let e = Complex64::from_polar(1.0, -PI * (2 * n + 1) as f64 / m as f64);
                0.5 * (1.0 + e) / (1.0 - e)
            })
            .collect();
        Self { m, fwd: planner.plan_fft_forward(m), inv: planner.plan_fft_inverse(m), phase, g0 }
    }

    /// One Schwinger–Dyson map `G ↦ (G₀⁻¹ + μΔτX − Δτ²Σ[G])⁻¹`, followed by
    /// projection onto the antisymmetric (physical) subspace.
    /// Returns the new Green's function and `ln det(I − G₀V)` summed over
    /// frequencies.
    fn step(&self, g: &[Vec<f64>; 4], j: f64, mu: f64, dtau: f64) -> ([Vec<f64>; 4], f64) {
        let m = self.m;
        let mut sig: [Vec<Complex64>; 4] = Default::default();
        for c in 0..4 {
            let mut buf: Vec<Complex64> =
                (0..m).map(|k| self.phase[k] * (SIGMA_SIGN[c] * j * j * g[c][k].powi(3))).collect();
            self.fwd.process(&mut buf);
            sig[c] = buf;
        }
        let mut out: [Vec<Complex64>; 4] = Default::default();
        for c in out.iter_mut() {
            *c = vec![Complex64::new(0.0, 0.0); m];
        }
        let d2 = dtau * dtau;
        let mut log_det = 0.0;
        for n in 0..m {
            let g0 = self.g0[n];
            let inv0 = 1.0 / g0;
            let a = inv0 - d2 * sig[LL][n];
            let b = mu * dtau - d2 * sig[LR][n];
            let c = mu * dtau - d2 * sig[RL][n];
            let d = inv0 - d2 * sig[RR][n];
            let det = a * d - b * c;
            log_det += (det * g0 * g0).norm().ln();
            out[LL][n] = d / det;
            out[LR][n] = -b / det;
            out[RL][n] = -c / det;
            out[RR][n] = a / det;
        }
        let scale = 1.0 / m as f64;
        let mut raw: [Vec<f64>; 4] = Default::default();
        for c in 0..4 {
            let mut buf = std::mem::take(&mut out[c]);
            self.inv.process(&mut buf);
            raw[c] = (0..m).map(|k| (buf[k] / self.phase[k]).re * scale).collect();
        }
        (project(&raw), log_det)
    }
}

/// `G ← ½(G − P Gᵀ P)` written in the translation-invariant representation.
fn project(g: &[Vec<f64>; 4]) -> [Vec<f64>; 4] {
    let m = g[0].len();
    let mut p: [Vec<f64>; 4] = Default::default();
    for c in p.iter_mut() {
        *c = vec![0.0; m];
    }
    for k in 1..m {
        let r = m - k;
        p[LL][k] = 0.5 * (g[LL][k] + g[LL][r]);
        p[RR][k] = 0.5 * (g[RR][k] + g[RR][r]);
        p[LR][k] = 0.5 * (g[LR][k] - g[RL][r]);
        p[RL][k] = 0.5 * (g[RL][k] - g[LR][r]);
    }
    let avg = 0.5 * (g[LR][0] + g[RL][0]);
    p[LR][0] = avg;
    p[RL][0] = avg;
    p
}

fn gg4(g: &[Vec<f64>; 4]) -> f64 {
    g.iter().flat_map(|c| c.iter()).map(|x| x.powi(4)).sum()
}

fn free_green(m: usize) -> [Vec<f64>; 4] {
    let half: Vec<f64> = (0..m).map(|k| if k == 0 { 0.0 } else { 0.5 }).collect();
    [half.clone(), vec![0.0; m], vec![0.0; m], half]
}

fn self_energy(g: &[Vec<f64>; 4], j: f64) -> [Vec<f64>; 4] {
    let mut s: [Vec<f64>; 4] = Default::default();
    for c in 0..4 {
        s[c] = g[c].iter().map(|x| SIGMA_SIGN[c] * j * j * x.powi(3)).collect();
    }
    s
}

fn infinite_temperature(grid: TauGrid) -> ThermalSaddle {
    let g = free_green(grid.slices_m);
    ThermalSaddle {
        self_energy: self_energy(&g, 0.0),
        green: ThermalGreen { grid, g },
        ln_z: LN_2,
        action: -LN_2,
        converged: true,
        iterations: 0,
        residual: 0.0,
        branch_tag: ThermalBranch::BlackHole,
    }
}

/// Damped fixed-point iteration; returns the best iterate flagged
/// unconverged when `max_iter` is exhausted.
pub fn solve_thermal(params: &ModelParams, grid: TauGrid, init: ThermalInit) -> Result<ThermalSaddle> {
    solve_thermal_with(params, grid, init, ThermalOptions::default())
}

pub fn solve_thermal_with(
    params: &ModelParams,
    grid: TauGrid,
    init: ThermalInit,
    opts: ThermalOptions,
) -> Result<ThermalSaddle> {
    let checked = validate_params(*params, grid)?;
    if checked.temperature == Temperature::Infinite {
        return Ok(infinite_temperature(grid));
    }
    let m = grid.slices_m;
    let kernel = Kernel::new(m);
    let (j, mu, dt) = (params.coupling_j, params.hopping_mu, grid.dtau);
    let (mut g, tag) = match init {
        ThermalInit::Free => (free_green(m), ThermalBranch::BlackHole),
        ThermalInit::WormholeSeed => (kernel.step(&free_green(m), 0.0, mu, dt).0, ThermalBranch::Wormhole),
        ThermalInit::BlackHoleSeed => {
            let syk = solve_thermal_with(&params.with_hopping(0.0), grid, ThermalInit::Free, opts)?;
            (syk.green.g, ThermalBranch::BlackHole)
        }
        ThermalInit::From(s) => (s.green.resample(grid).g, s.branch_tag),
    };
    let mut x = if j == 0.0 { 1.0 } else { opts.damping };
    let mut prev = f64::INFINITY;
    let mut rises = 0;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let (gn, _) = kernel.step(&g, j, mu, dt);
        residual = 0.0;
        for c in 0..4 {
            for k in 0..m {
                let d = gn[c][k] - g[c][k];
                if !d.is_finite() {
                    return Err(Error::NotANumber { iteration: it, detail: format!("component {c}, slice {k}") });
                }
                residual = residual.max(d.abs());
                g[c][k] += x * d;
            }
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
    let (_, log_det) = kernel.step(&g, j, mu, dt);
    let ln_z = LN_2 + 0.5 * log_det - 0.375 * j * j * dt * dt * m as f64 * gg4(&g);
    Ok(ThermalSaddle {
        self_energy: self_energy(&g, j),
        green: ThermalGreen { grid, g },
        ln_z,
        action: -ln_z,
        converged,
        iterations,
        residual,
        branch_tag: tag,
    })
}

/// `ln Z_β / N_q` of a converged saddle.
pub fn ln_z(_params: &ModelParams, saddle: &ThermalSaddle) -> Result<f64> {
    if !saddle.converged {
        return Err(Error::Unconverged { residual: saddle.residual, iterations: saddle.iterations });
    }
    Ok(saddle.ln_z)
}

/// `⟨H⟩ / N_q` from the saddle: `−(J²/4)Δτ Σ_k Σ_ab G⁴ − μ G_LR(0)`.
pub fn energy(params: &ModelParams, saddle: &ThermalSaddle) -> f64 {
    let g = &saddle.green.g;
    let j = params.coupling_j;
    -0.25 * j * j * saddle.green.grid.dtau * gg4(g) - params.hopping_mu * g[LR][0]
}

/// Solves both branches and keeps the one with the larger `ln Z`.
pub fn dominant_thermal(params: &ModelParams, grid: TauGrid) -> Result<ThermalSaddle> {
    let bh = solve_thermal(params, grid, ThermalInit::Free)?;
    if params.hopping_mu == 0.0 {
        return Ok(bh);
    }
    let wh = solve_thermal(params, grid, ThermalInit::WormholeSeed)?;
    Ok(pick_dominant(bh, wh))
}

fn pick_dominant(a: ThermalSaddle, b: ThermalSaddle) -> ThermalSaddle {
    match (a.converged, b.converged) {
        (true, false) => a,
        (false, true) => b,
        _ => {
            if b.ln_z > a.ln_z {
                b
            } else {
                a
            }
        }
    }
}

/// `S₂ / N_q = S_{2β} − 2 S_β`, each from its own dominant branch.
pub fn renyi2(params: &ModelParams, grid: TauGrid) -> Result<f64> {
    if params.beta == 0.0 {
        return Ok(LN_2);
    }
    let one = dominant_thermal(params, grid)?;
    let two = dominant_thermal(&params.with_beta(2.0 * params.beta), grid.doubled())?;
    Ok(two.action - 2.0 * one.action)
}

/// Black-hole branch continued upward and wormhole branch continued
/// downward in β; β*_HP from their action crossing.
#[derive(Debug, Clone)]
pub struct HpScan {
    pub black_hole: BranchCurve,
    pub wormhole: BranchCurve,
    pub black_hole_saddles: Vec<ThermalSaddle>,
    pub wormhole_saddles: Vec<ThermalSaddle>,
    pub transition: Option<TransitionEstimate>,
}

pub fn hp_scan(params: &ModelParams, beta_grid: &[f64], policy: GridPolicy) -> Result<HpScan> {
    let bh = thermal_branch(params, beta_grid, SeedTag::BlackHole, SeedStrategy::Continuation, policy)?;
    let wh = thermal_branch(params, beta_grid, SeedTag::Wormhole, SeedStrategy::Continuation, policy)?;
    let black_hole = thermal_curve(beta_grid, &bh, SeedTag::BlackHole);
    let wormhole = thermal_curve(beta_grid, &wh, SeedTag::Wormhole);
    let transition = locate_transition(&black_hole, &wormhole).ok();
    Ok(HpScan { black_hole, wormhole, black_hole_saddles: bh, wormhole_saddles: wh, transition })
}

/// Fit of `ln Z / (2N_q) = −β e₀ + s₀ + c₁/β + c₂/β²` on decoupled SYK (μ = 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyFit {
    pub s0: f64,
    pub e0: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Zero-temperature entropy per Majorana from a β window at `μ = 0`.
pub fn zero_temperature_entropy(coupling_j: f64, betas: &[f64], policy: GridPolicy) -> Result<EntropyFit> {
    if betas.len() < 4 {
        return Err(Error::InvalidParams("entropy fit needs at least 4 temperatures".into()));
    }
    let mut design = Vec::new();
    let mut y = Vec::new();
    let mut prev: Option<ThermalSaddle> = None;
    for &b in betas {
        let p = ModelParams::new(1, coupling_j, 0.0, b);
        let init = prev.take().map(ThermalInit::From).unwrap_or(ThermalInit::Free);
        let s = solve_thermal(&p, policy.grid(b), init)?;
        let lz = ln_z(&p, &s)?;
        design.push(vec![-b, 1.0, 1.0 / b, 1.0 / (b * b)]);
        y.push(0.5 * lz);
        prev = Some(s);
    }
    let c = crate::numerics::least_squares(&design, &y);
    Ok(EntropyFit { e0: c[0], s0: c[1], c1: c[2], c2: c[3] })
}
