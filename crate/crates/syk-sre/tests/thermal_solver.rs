use proptest::prelude::*;
use std::f64::consts::LN_2;

use syk_sre::domain::{GridPolicy, ModelParams, TauGrid};
use syk_sre::thermal_solver::*;

/// Sliced free pair: the determinant reduces to `(1 ± a)^M`, `a = μΔτ/2`.
fn sliced_free_ln_z(mu: f64, beta: f64, m: usize) -> f64 {
    let a = 0.5 * mu * beta / m as f64;
    ((1.0 + a).powi(m as i32) + (1.0 - a).powi(m as i32)).ln()
}

#[test]
fn black_hole_and_wormhole_agree_without_hopping() {
    let p = ModelParams::new(1, 1.0, 0.0, 8.0);
    let g = TauGrid::new(8.0, 256);
    let bh = solve_thermal(&p, g, ThermalInit::BlackHoleSeed).unwrap();
    let wh = solve_thermal(&p, g, ThermalInit::WormholeSeed).unwrap();
    assert!(bh.converged && wh.converged);
    assert!((bh.ln_z - wh.ln_z).abs() < 1e-9);
}

#[test]
fn decoupled_syk_energy_and_entropy_scale() {
    // large β: ln Z/(2N_q) ≈ −β e₀ + s₀ with e₀ ≈ −0.0406, s₀ ≈ 0.2324 for J = 1
    let p = ModelParams::new(1, 1.0, 0.0, 50.0);
    let s = solve_thermal(&p, TauGrid::with_max_dtau(50.0, 0.05, 16), ThermalInit::Free).unwrap();
    let per_majorana = 0.5 * s.ln_z / 50.0;
    let want = 0.0406 + 0.2324 / 50.0;
    assert!((per_majorana - want).abs() < 0.002, "{per_majorana} vs {want}");
}

#[test]
fn warm_start_matches_cold_start() {
    let p = ModelParams::new(1, 1.0, 0.1, 12.0);
    let g = TauGrid::new(12.0, 256);
    let cold = solve_thermal(&p, g, ThermalInit::BlackHoleSeed).unwrap();
    let prev = solve_thermal(&p.with_beta(11.0), TauGrid::new(11.0, 256), ThermalInit::BlackHoleSeed).unwrap();
    let warm = solve_thermal(&p, g, ThermalInit::From(prev)).unwrap();
    assert!((cold.ln_z - warm.ln_z).abs() < 1e-8);
}

#[test]
fn hp_scan_finds_first_order_transition() {
    let betas: Vec<f64> = (24..=31).map(f64::from).collect();
    let s = hp_scan(&ModelParams::new(1, 1.0, 0.1, 1.0), &betas, GridPolicy::MaxDtau { dtau: 0.05, min_slices: 16 })
        .unwrap();
    let t = s.transition.expect("coexistence window");
    assert!(t.bracket.0 < t.beta_star && t.beta_star < t.bracket.1);
    assert!((t.beta_star - 27.0).abs() < 2.0);
}

#[test]
fn unconverged_solves_are_flagged_not_hidden() {
    let p = ModelParams::new(1, 1.0, 0.1, 10.0);
    let opts = ThermalOptions { max_iter: 3, ..Default::default() };
    let s = solve_thermal_with(&p, TauGrid::new(10.0, 128), ThermalInit::Free, opts).unwrap();
    assert!(!s.converged);
    assert!(ln_z(&p, &s).is_err());
}

#[test]
fn renyi2_infinite_temperature() {
    assert_eq!(renyi2(&ModelParams::new(1, 1.0, 0.3, 0.0), TauGrid::new(0.0, 8)).unwrap(), LN_2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn free_pair_is_the_sliced_closed_form(mu in 0.05f64..2.0, beta in 0.2f64..6.0, half_m in 8usize..64) {
        let m = 2 * half_m;
        let p = ModelParams::new(1, 0.0, mu, beta);
        let s = solve_thermal(&p, TauGrid::new(beta, m), ThermalInit::Free).unwrap();
        prop_assert!((s.ln_z - sliced_free_ln_z(mu, beta, m)).abs() < 1e-10);
    }

    #[test]
    fn solutions_are_antiperiodic_and_odd(mu in 0.0f64..0.3, beta in 1.0f64..8.0) {
        let p = ModelParams::new(1, 1.0, mu, beta);
        let s = solve_thermal(&p, TauGrid::new(beta, 128), ThermalInit::Free).unwrap();
        let g = s.green.g_ll();
        // G_LL(τ) = G_LL(β − τ) on the physical (projected) subspace
        for k in 1..128 {
            prop_assert!((g[k] - g[128 - k]).abs() < 1e-9);
        }
        // sum rule G(0⁺) + G(β⁻) = 1 in the continuum; the sliced value stays close
        prop_assert!((g[1] + g[127] - 1.0).abs() < 0.1);
    }
}
