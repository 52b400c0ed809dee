use proptest::prelude::*;
use std::f64::consts::LN_2;

use syk_sre::domain::{GridPolicy, ModelParams};
use syk_sre::sre_solver::SreOptions;
use syk_sre::sweep_driver::*;

fn curve(beta: &[f64], action: Vec<f64>, tag: SeedTag) -> BranchCurve {
    BranchCurve {
        beta_values: beta.to_vec(),
        observable_values: action.iter().map(|a| 2.0 * a).collect(),
        converged: vec![true; beta.len()],
        action_values: action,
        seed_tag: tag,
    }
}

#[test]
fn mu_zero_sweep_is_flat_and_has_no_transition() {
    let betas = [1.0, 2.0, 4.0, 8.0];
    let opts = SreOptions { with_renyi2: false, ..Default::default() };
    let out = sweep(
        &ModelParams::new(1, 1.0, 0.0, 1.0),
        &betas,
        SweepTarget::Sre,
        SeedStrategy::Continuation,
        GridPolicy::FixedSlices(64),
        opts,
    )
    .unwrap();
    for c in &out.curves {
        assert!(c.observable_values.iter().all(|m2| (m2 - LN_2).abs() < 1e-8));
    }
    let dom = select_dominant(&out.curves).unwrap();
    assert!(dom.converged.iter().all(|&c| c));
    let e = locate_transition(&out.curves[0], &out.curves[1]).unwrap_err();
    assert!(e.to_string().contains("no transition"));
}

#[test]
fn warm_and_cold_starts_agree() {
    let betas = [2.0, 3.0, 4.0];
    let p = ModelParams::new(1, 1.0, 0.1, 1.0);
    let opts = SreOptions { with_renyi2: false, ..Default::default() };
    let pol = GridPolicy::FixedSlices(48);
    let warm = sre_branch(&p, &betas, SeedTag::Disconnected, SeedStrategy::Continuation, pol, opts).unwrap();
    let cold = sre_branch(&p, &betas, SeedTag::Disconnected, SeedStrategy::ColdStart, pol, opts).unwrap();
    for (w, c) in warm.iter().zip(&cold) {
        assert!(w.converged && c.converged);
        assert!((w.s_sre - c.s_sre).abs() < 10.0 * opts.tol, "{} vs {}", w.s_sre, c.s_sre);
    }
}

#[test]
fn beta_zero_assembly_vanishes() {
    let m2 = curve(&[0.0], vec![0.0], SeedTag::Dominant);
    let mut m2 = m2;
    m2.observable_values = vec![LN_2];
    let mut s2 = m2.clone();
    s2.observable_values = vec![LN_2];
    assert_eq!(assemble_sre_curve(&m2, &s2).unwrap().observable_values, vec![0.0]);
}

#[test]
fn lost_metastable_branch_falls_back_to_hysteresis() {
    let b = [1.0, 2.0, 3.0, 4.0, 5.0];
    let a = curve(&b, vec![0.0, 0.1, 0.2, 0.3, 0.4], SeedTag::Disconnected);
    let mut c = curve(&b, vec![0.5, 0.4, 0.3, 0.3, 0.4], SeedTag::Connected);
    // the second branch collapses onto the first beyond β = 3
    c.action_values[3] = 0.3;
    c.action_values[4] = 0.4;
    let t = locate_transition(&a, &c).unwrap();
    assert_eq!(t.method, TransitionMethod::HysteresisMidpoint);
    assert!(t.bracket.0 < t.beta_star && t.beta_star < t.bracket.1);
}

#[test]
fn unconverged_points_leave_gaps() {
    let b = [1.0, 2.0];
    let mut a = curve(&b, vec![0.0, 0.0], SeedTag::BlackHole);
    let mut c = curve(&b, vec![1.0, 1.0], SeedTag::Wormhole);
    a.converged[1] = false;
    c.converged[1] = false;
    let d = select_dominant(&[a, c]).unwrap();
    assert_eq!(d.converged, vec![true, false]);
    assert!(d.action_values[1].is_nan());
}

#[test]
fn anchor_quantity_extrapolates_with_zero_slope() {
    let e = extrapolate_dtau(&[(0.1, -4.0 * LN_2), (0.05, -4.0 * LN_2), (0.025, -4.0 * LN_2)]).unwrap();
    assert_eq!(e.slope, 0.0);
    assert_eq!(e.estimate, -4.0 * LN_2);
}

proptest! {
    #[test]
    fn transition_is_symmetric(
        xs in proptest::collection::vec(-1.0f64..1.0, 6),
        ys in proptest::collection::vec(-1.0f64..1.0, 6),
    ) {
        let b: Vec<f64> = (1..=6).map(f64::from).collect();
        let a = curve(&b, xs, SeedTag::Disconnected);
        let c = curve(&b, ys, SeedTag::Connected);
        match (locate_transition(&a, &c), locate_transition(&c, &a)) {
            (Ok(t1), Ok(t2)) => {
                prop_assert!((t1.beta_star - t2.beta_star).abs() < 1e-12);
                prop_assert_eq!(t1.bracket, t2.bracket);
                prop_assert_eq!(t1.method, t2.method);
                prop_assert!(t1.bracket.0 <= t1.beta_star && t1.beta_star <= t1.bracket.1);
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "asymmetric outcome"),
        }
    }

    #[test]
    fn dominant_is_pointwise_minimum(
        xs in proptest::collection::vec(-5.0f64..5.0, 5),
        ys in proptest::collection::vec(-5.0f64..5.0, 5),
    ) {
        let b: Vec<f64> = (1..=5).map(f64::from).collect();
        let d = select_dominant(&[curve(&b, xs.clone(), SeedTag::BlackHole), curve(&b, ys.clone(), SeedTag::Wormhole)]).unwrap();
        for k in 0..5 {
            prop_assert_eq!(d.action_values[k], xs[k].min(ys[k]));
        }
    }

    #[test]
    fn linear_data_extrapolates_exactly(a in -10.0f64..10.0, s in -50.0f64..50.0, h in 0.01f64..0.2) {
        let pts = [(h, a + s * h), (h / 2.0, a + s * h / 2.0), (h / 4.0, a + s * h / 4.0)];
        let e = extrapolate_dtau(&pts).unwrap();
        prop_assert!((e.estimate - a).abs() < 1e-9 * (1.0 + a.abs() + s.abs()));
        prop_assert!(e.monotone);
    }
}
