//! β sweeps with branch continuation, dominant-saddle selection,
//! transition location and curve assembly.

use std::f64::consts::LN_2;

use crate::domain::{GridPolicy, ModelParams};
use crate::error::{Error, Result};
use crate::sre_solver::{iterate_sre_with, SreInit, SreOptions, SreSaddleResult};
use crate::thermal_solver::{self, ThermalInit, ThermalSaddle};

/// Action differences below this (per N_q) mean "same solution".
pub const DISTINCT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedTag {
    BlackHole,
    Wormhole,
    Disconnected,
    Connected,
    Dominant,
    Assembled,
}

impl SeedTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            SeedTag::BlackHole => "black-hole",
            SeedTag::Wormhole => "wormhole",
            SeedTag::Disconnected => "replica-disconnected",
            SeedTag::Connected => "replica-connected",
            SeedTag::Dominant => "dominant",
            SeedTag::Assembled => "assembled",
        }
    }
}

/// Per-initialization curve over β. Unconverged points stay in the arrays,
/// flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchCurve {
    pub beta_values: Vec<f64>,
    pub action_values: Vec<f64>,
    pub observable_values: Vec<f64>,
    pub seed_tag: SeedTag,
    pub converged: Vec<bool>,
}

impl BranchCurve {
    pub fn len(&self) -> usize {
        self.beta_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta_values.is_empty()
    }

    fn check(&self) -> Result<()> {
        let n = self.beta_values.len();
        if self.action_values.len() != n || self.observable_values.len() != n || self.converged.len() != n {
            return Err(Error::SizeMismatch("branch curve arrays differ in length".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionKind {
    Sre,
    Hp,
    HpHalf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionMethod {
    ActionCrossing,
    /// Lower confidence: no sign change was seen inside the coexistence window.
    HysteresisMidpoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionEstimate {
    pub beta_star: f64,
    pub kind: TransitionKind,
    pub bracket: (f64, f64),
    pub method: TransitionMethod,
}

fn same_grid(a: &BranchCurve, b: &BranchCurve) -> Result<()> {
    a.check()?;
    b.check()?;
    if a.beta_values.len() != b.beta_values.len()
        || a.beta_values.iter().zip(&b.beta_values).any(|(x, y)| (x - y).abs() > 1e-12 * x.abs().max(1.0))
    {
        return Err(Error::SizeMismatch("branches are on different beta grids".into()));
    }
    Ok(())
}

fn kind_of(a: &BranchCurve, b: &BranchCurve) -> TransitionKind {
    let thermal = |t: SeedTag| matches!(t, SeedTag::BlackHole | SeedTag::Wormhole);
    if thermal(a.seed_tag) || thermal(b.seed_tag) {
        TransitionKind::Hp
    } else {
        TransitionKind::Sre
    }
}

/// β* from the sign change of `S_a − S_b` inside the window where both
/// branches converge to distinct solutions. Falls back to the midpoint of
/// that window when no sign change is seen. Symmetric in its arguments.
pub fn locate_transition(a: &BranchCurve, b: &BranchCurve) -> Result<TransitionEstimate> {
    same_grid(a, b)?;
    let kind = kind_of(a, b);
    let beta = &a.beta_values;
    let distinct: Vec<Option<f64>> = (0..a.len())
        .map(|k| {
            let d = a.action_values[k] - b.action_values[k];
            (a.converged[k] && b.converged[k] && d.abs() > DISTINCT_TOL).then_some(d)
        })
        .collect();
    for k in 0..a.len().saturating_sub(1) {
        if let (Some(d0), Some(d1)) = (distinct[k], distinct[k + 1]) {
            if d0.signum() != d1.signum() {
                let t = d0 / (d0 - d1);
                let beta_star = beta[k] + t * (beta[k + 1] - beta[k]);
                return Ok(TransitionEstimate {
                    beta_star,
                    kind,
                    bracket: (beta[k], beta[k + 1]),
                    method: TransitionMethod::ActionCrossing,
                });
            }
        }
    }
    let window: Vec<usize> = (0..a.len()).filter(|&k| distinct[k].is_some()).collect();
    match (window.first(), window.last()) {
        (Some(&lo), Some(&hi)) => {
            // the window widened to the first points where the branches stop
            // being distinct; β* is its midpoint
            let lo_b = if lo > 0 { beta[lo - 1] } else { beta[lo] };
            let hi_b = if hi + 1 < beta.len() { beta[hi + 1] } else { beta[hi] };
            Ok(TransitionEstimate {
                beta_star: 0.5 * (lo_b + hi_b),
                kind,
                bracket: (lo_b, hi_b),
                method: TransitionMethod::HysteresisMidpoint,
            })
        }
        _ => Err(Error::Other("no transition (crossover)".into())),
    }
}

/// Pointwise smaller action among converged branches; gaps where none
/// converged are flagged unconverged with NaN values.
pub fn select_dominant(curves: &[BranchCurve]) -> Result<BranchCurve> {
    let first = curves.first().ok_or_else(|| Error::Other("no branches to select from".into()))?;
    for c in curves {
        same_grid(first, c)?;
    }
    let n = first.len();
    let mut out = BranchCurve {
        beta_values: first.beta_values.clone(),
        action_values: vec![f64::NAN; n],
        observable_values: vec![f64::NAN; n],
        seed_tag: SeedTag::Dominant,
        converged: vec![false; n],
    };
    for k in 0..n {
        let best =
            curves.iter().filter(|c| c.converged[k]).min_by(|x, y| x.action_values[k].total_cmp(&y.action_values[k]));
        if let Some(c) = best {
            out.action_values[k] = c.action_values[k];
            out.observable_values[k] = c.observable_values[k];
            out.converged[k] = true;
        }
    }
    Ok(out)
}

/// `M̃₂ = M₂ − S₂` pointwise.
pub fn assemble_sre_curve(m2_curve: &BranchCurve, s2_curve: &BranchCurve) -> Result<BranchCurve> {
    same_grid(m2_curve, s2_curve)?;
    let n = m2_curve.len();
    Ok(BranchCurve {
        beta_values: m2_curve.beta_values.clone(),
        action_values: m2_curve.action_values.clone(),
        observable_values: (0..n).map(|k| m2_curve.observable_values[k] - s2_curve.observable_values[k]).collect(),
        seed_tag: SeedTag::Assembled,
        converged: (0..n).map(|k| m2_curve.converged[k] && s2_curve.converged[k]).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtauExtrapolation {
    pub estimate: f64,
    pub error_bar: f64,
    pub slope: f64,
    /// False when the values are not monotone in Δτ.
    pub monotone: bool,
}

/// Linear fit `a + bΔτ` through nested-grid results; the error bar is the
/// distance between the fit intercept and the finest-grid value.
pub fn extrapolate_dtau(points: &[(f64, f64)]) -> Result<DtauExtrapolation> {
    if points.len() < 2 {
        return Err(Error::InvalidParams("extrapolation needs at least two grids".into()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParams("grids must have distinct dtau".into()));
    }
    let slope = sxy / sxx;
    let estimate = my - slope * mx;
    let diffs: Vec<f64> = pts.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let monotone = diffs.iter().all(|d| *d >= 0.0) || diffs.iter().all(|d| *d <= 0.0);
    Ok(DtauExtrapolation { estimate, error_bar: (estimate - pts[0].1).abs(), slope, monotone })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepTarget {
    Thermal,
    Sre,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedStrategy {
    /// Warm-start each point from its neighbour along the branch.
    Continuation,
    /// Solve every point from its seed.
    ColdStart,
}

/// Curves plus the raw saddles behind them.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub curves: Vec<BranchCurve>,
    pub thermal: Vec<Vec<ThermalSaddle>>,
    pub sre: Vec<Vec<SreSaddleResult>>,
}

fn check_sorted(beta_grid: &[f64]) -> Result<()> {
    if beta_grid.is_empty() || beta_grid.windows(2).any(|w| w[0] >= w[1]) || beta_grid[0] <= 0.0 {
        return Err(Error::InvalidParams("beta grid must be positive and strictly increasing".into()));
    }
    Ok(())
}

fn chain_order(n: usize, upward: bool) -> Vec<usize> {
    if upward {
        (0..n).collect()
    } else {
        (0..n).rev().collect()
    }
}

/// One thermal branch over `beta_grid`: the black-hole seed is continued
/// upward in β, the wormhole seed downward. Results are in grid order.
pub fn thermal_branch(
    params: &ModelParams,
    beta_grid: &[f64],
    tag: SeedTag,
    strategy: SeedStrategy,
    policy: GridPolicy,
) -> Result<Vec<ThermalSaddle>> {
    check_sorted(beta_grid)?;
    let (seed, upward) = match tag {
        SeedTag::BlackHole => (ThermalInit::BlackHoleSeed, true),
        SeedTag::Wormhole => (ThermalInit::WormholeSeed, false),
        _ => return Err(Error::InvalidParams(format!("{} is not a thermal seed", tag.as_str()))),
    };
    let n = beta_grid.len();
    let mut out: Vec<Option<ThermalSaddle>> = vec![None; n];
    let mut prev: Option<ThermalSaddle> = None;
    for k in chain_order(n, upward) {
        let p = params.with_beta(beta_grid[k]);
        let init = match (strategy, prev.take()) {
            (SeedStrategy::Continuation, Some(s)) if s.converged => ThermalInit::From(s),
            _ => seed.clone(),
        };
        let s = thermal_solver::solve_thermal(&p, policy.grid(beta_grid[k]), init)?;
        prev = Some(s.clone());
        out[k] = Some(s);
    }
    Ok(out.into_iter().map(|s| s.expect("every slot filled")).collect())
}

/// One SRE branch over `beta_grid`: the disconnected seed is continued
/// upward in β, the connected seed downward. Results are in grid order.
pub fn sre_branch(
    params: &ModelParams,
    beta_grid: &[f64],
    tag: SeedTag,
    strategy: SeedStrategy,
    policy: GridPolicy,
    opts: SreOptions,
) -> Result<Vec<SreSaddleResult>> {
    check_sorted(beta_grid)?;
    let upward = match tag {
        SeedTag::Disconnected => true,
        SeedTag::Connected => false,
        _ => return Err(Error::InvalidParams(format!("{} is not an SRE seed", tag.as_str()))),
    };
    let n = beta_grid.len();
    let mut out: Vec<Option<SreSaddleResult>> = vec![None; n];
    let mut prev: Option<SreSaddleResult> = None;
    for k in chain_order(n, upward) {
        let p = params.with_beta(beta_grid[k]);
        let seed = if upward { SreInit::DisconnectedSeed } else { SreInit::ConnectedSeed };
        let init = match (strategy, prev.take()) {
            (SeedStrategy::Continuation, Some(r)) if r.converged => SreInit::From(r),
            _ => seed,
        };
        let r = iterate_sre_with(&p, policy.grid(beta_grid[k]), init, opts)?;
        prev = Some(r.clone());
        out[k] = Some(r);
    }
    Ok(out.into_iter().map(|r| r.expect("every slot filled")).collect())
}

pub fn thermal_curve(beta_grid: &[f64], saddles: &[ThermalSaddle], tag: SeedTag) -> BranchCurve {
    BranchCurve {
        beta_values: beta_grid.to_vec(),
        action_values: saddles.iter().map(|s| s.action).collect(),
        observable_values: saddles.iter().map(|s| s.ln_z).collect(),
        seed_tag: tag,
        converged: saddles.iter().map(|s| s.converged).collect(),
    }
}

pub fn sre_curve(beta_grid: &[f64], results: &[SreSaddleResult], tag: SeedTag) -> BranchCurve {
    BranchCurve {
        beta_values: beta_grid.to_vec(),
        action_values: results.iter().map(|r| r.s_sre).collect(),
        observable_values: results.iter().map(|r| r.m2).collect(),
        seed_tag: tag,
        converged: results.iter().map(|r| r.converged).collect(),
    }
}

/// Runs both branches of the requested path integral.
///
/// Thermal: black-hole seed continued upward, wormhole seed downward; the
/// observable is `ln Z_β / N_q`. SRE: disconnected seed continued upward,
/// connected seed downward; the observable is `M₂ / N_q` with the dominant
/// thermal `S_β`.
pub fn sweep(
    params: &ModelParams,
    beta_grid: &[f64],
    target: SweepTarget,
    strategy: SeedStrategy,
    policy: GridPolicy,
    sre_opts: SreOptions,
) -> Result<SweepOutput> {
    match target {
        SweepTarget::Thermal => {
            let mut curves = Vec::new();
            let mut thermal = Vec::new();
            for tag in [SeedTag::BlackHole, SeedTag::Wormhole] {
                let v = thermal_branch(params, beta_grid, tag, strategy, policy)?;
                curves.push(thermal_curve(beta_grid, &v, tag));
                thermal.push(v);
            }
            Ok(SweepOutput { curves, thermal, sre: Vec::new() })
        }
        SweepTarget::Sre => {
            let mut curves = Vec::new();
            let mut sre = Vec::new();
            for tag in [SeedTag::Disconnected, SeedTag::Connected] {
                let v = sre_branch(params, beta_grid, tag, strategy, policy, sre_opts)?;
                curves.push(sre_curve(beta_grid, &v, tag));
                sre.push(v);
            }
            Ok(SweepOutput { curves, thermal: Vec::new(), sre })
        }
    }
}

/// Everything needed for the M₂ / S₂ / M̃₂ figures at one μ.
#[derive(Debug, Clone)]
pub struct FigureData {
    pub sre_branches: Vec<BranchCurve>,
    pub thermal_branches: Vec<BranchCurve>,
    /// Thermal branches evaluated at 2β (same β axis).
    pub thermal_double_branches: Vec<BranchCurve>,
    pub m2: BranchCurve,
    pub s2: BranchCurve,
    pub m2_tilde: BranchCurve,
    pub sre_transition: Option<TransitionEstimate>,
    pub hp_transition: Option<TransitionEstimate>,
    pub hp_half_transition: Option<TransitionEstimate>,
}

/// Composite curves assembled after independent per-integral selection:
/// `M₂ = S_SRE − 4S_β + N_q ln 2`, `S₂ = S_{2β} − 2S_β`, `M̃₂ = M₂ − S₂`.
pub fn figure_data(
    params: &ModelParams,
    beta_grid: &[f64],
    sre_policy: GridPolicy,
    thermal_policy: GridPolicy,
    strategy: SeedStrategy,
    sre_opts: SreOptions,
) -> Result<FigureData> {
    let sre_opts = SreOptions { with_renyi2: false, ..sre_opts };
    let sre = sweep(params, beta_grid, SweepTarget::Sre, strategy, sre_policy, sre_opts)?;
    let th = sweep(params, beta_grid, SweepTarget::Thermal, strategy, thermal_policy, sre_opts)?;
    let doubled: Vec<f64> = beta_grid.iter().map(|b| 2.0 * b).collect();
    let th2 = sweep(params, &doubled, SweepTarget::Thermal, strategy, thermal_policy, sre_opts)?;
    let mut th2_curves = th2.curves.clone();
    for c in &mut th2_curves {
        c.beta_values = beta_grid.to_vec();
    }
    let sre_dom = select_dominant(&sre.curves)?;
    let th_dom = select_dominant(&th.curves)?;
    let th2_dom = select_dominant(&th2_curves)?;
    let n = beta_grid.len();
    let m2 = BranchCurve {
        beta_values: beta_grid.to_vec(),
        action_values: sre_dom.action_values.clone(),
        observable_values: (0..n).map(|k| sre_dom.action_values[k] - 4.0 * th_dom.action_values[k] + LN_2).collect(),
        seed_tag: SeedTag::Dominant,
        converged: (0..n).map(|k| sre_dom.converged[k] && th_dom.converged[k]).collect(),
    };
    let s2 = BranchCurve {
        beta_values: beta_grid.to_vec(),
        action_values: th_dom.action_values.clone(),
        observable_values: (0..n).map(|k| th2_dom.action_values[k] - 2.0 * th_dom.action_values[k]).collect(),
        seed_tag: SeedTag::Dominant,
        converged: (0..n).map(|k| th2_dom.converged[k] && th_dom.converged[k]).collect(),
    };
    let m2_tilde = assemble_sre_curve(&m2, &s2)?;
    let sre_transition = locate_transition(&sre.curves[0], &sre.curves[1]).ok();
    let hp_transition = locate_transition(&th.curves[0], &th.curves[1]).ok();
    let hp_half_transition = locate_transition(&th2_curves[0], &th2_curves[1])
        .ok()
        .map(|t| TransitionEstimate { kind: TransitionKind::HpHalf, ..t });
    Ok(FigureData {
        sre_branches: sre.curves,
        thermal_branches: th.curves,
        thermal_double_branches: th2_curves,
        m2,
        s2,
        m2_tilde,
        sre_transition,
        hp_transition,
        hp_half_transition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(beta: &[f64], action: &[f64], tag: SeedTag) -> BranchCurve {
        BranchCurve {
            beta_values: beta.to_vec(),
            action_values: action.to_vec(),
            observable_values: action.iter().map(|a| -a).collect(),
            seed_tag: tag,
            converged: vec![true; beta.len()],
        }
    }

    #[test]
    fn crossing_is_interpolated_and_symmetric() {
        let b = [1.0, 2.0, 3.0, 4.0];
        let x = curve(&b, &[0.0, 1.0, 2.0, 3.0], SeedTag::Disconnected);
        let y = curve(&b, &[1.5, 1.5, 1.5, 1.5], SeedTag::Connected);
        let t1 = locate_transition(&x, &y).unwrap();
        let t2 = locate_transition(&y, &x).unwrap();
        assert!((t1.beta_star - 2.5).abs() < 1e-12);
        assert_eq!(t1, t2);
        assert_eq!(t1.method, TransitionMethod::ActionCrossing);
        assert_eq!(t1.kind, TransitionKind::Sre);
    }

    #[test]
    fn identical_branches_are_a_crossover() {
        let b = [1.0, 2.0, 3.0];
        let x = curve(&b, &[0.1, 0.2, 0.3], SeedTag::BlackHole);
        assert!(locate_transition(&x, &x.clone()).is_err());
        let d = select_dominant(&[x.clone(), x.clone()]).unwrap();
        assert_eq!(d.action_values, x.action_values);
    }

    #[test]
    fn dominant_follows_lower_action() {
        let b = [1.0, 2.0, 3.0];
        let x = curve(&b, &[0.0, 1.0, 2.0], SeedTag::Disconnected);
        let mut y = curve(&b, &[1.0, 1.0, 1.0], SeedTag::Connected);
        y.converged[0] = false;
        let d = select_dominant(&[x, y]).unwrap();
        assert_eq!(d.action_values, vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn extrapolation_recovers_intercept() {
        let pts = [(0.1, 2.0 + 0.3), (0.05, 2.0 + 0.15), (0.025, 2.0 + 0.075)];
        let e = extrapolate_dtau(&pts).unwrap();
        assert!((e.estimate - 2.0).abs() < 1e-12);
        assert!(e.monotone);
        let flat = extrapolate_dtau(&[(0.1, 1.0), (0.05, 1.0), (0.025, 1.0)]).unwrap();
        assert_eq!(flat.slope, 0.0);
        assert!(!extrapolate_dtau(&[(0.1, 1.0), (0.05, 2.0), (0.025, 1.0)]).unwrap().monotone);
    }

    #[test]
    fn assembly_rejects_mismatched_grids() {
        let a = curve(&[1.0, 2.0], &[0.0, 0.0], SeedTag::Dominant);
        let b = curve(&[1.0, 3.0], &[0.0, 0.0], SeedTag::Dominant);
        assert!(assemble_sre_curve(&a, &b).is_err());
    }
}
