use proptest::prelude::*;
use std::path::PathBuf;

use syk_sre::domain::{GridPolicy, ModelParams};
use syk_sre::sweep_driver::SeedStrategy;
use syk_sre_cli::{check_doubling, parse_config, InitChoice, Mode, RunConfig};

fn arb_config() -> impl Strategy<Value = RunConfig> {
    (
        prop_oneof![Just(Mode::Ed), Just(Mode::Thermal), Just(Mode::Sre)],
        1usize..5,
        0.1f64..3.0,
        0.0f64..1.0,
        proptest::collection::vec(0.01f64..100.0, 1..4),
        prop_oneof![
            (1usize..300).prop_map(|h| GridPolicy::FixedSlices(2 * h)),
            (0.01f64..0.5, 2usize..40).prop_map(|(dtau, h)| GridPolicy::MaxDtau { dtau, min_slices: 2 * h }),
        ],
        prop_oneof![Just(InitChoice::Disconnected), Just(InitChoice::Connected), Just(InitChoice::Both)],
        any::<bool>(),
        (2usize..50, any::<u64>()),
        (proptest::option::of(1e-12f64..1e-3), proptest::option::of(1usize..5000), proptest::option::of(0.01f64..1.0)),
    )
        .prop_map(|(mode, n, j, mu, mut betas, grid, init, cold, (samples, seed), (tol, max_iter, damping))| {
            betas.sort_by(f64::total_cmp);
            betas.dedup();
            // keep the grid clear of the doubling rule: all points inside one octave
            let top = *betas.last().unwrap();
            betas.retain(|b| 2.0 * b > top);
            RunConfig {
                mode,
                params: ModelParams::new(n, j, mu, betas[0]),
                grid: Some(grid),
                beta_grid: betas,
                init,
                seeds: if cold { SeedStrategy::ColdStart } else { SeedStrategy::Continuation },
                n_samples: if mode == Mode::Ed { samples } else { 0 },
                rng_seed: seed,
                tol,
                max_iter,
                damping,
                output_dir: Some(PathBuf::from("out/run")),
            }
        })
}

proptest! {
    #[test]
    fn canonical_text_round_trips(cfg in arb_config()) {
        let text = cfg.to_text();
        prop_assert_eq!(parse_config(&text).unwrap(), cfg.clone());
        prop_assert_eq!(parse_config(&text).unwrap().to_text(), text);
    }

    #[test]
    fn full_doubling_ladders_pass(start in 0.1f64..5.0, rungs in 1usize..6) {
        let ladder: Vec<f64> = (0..rungs).map(|k| start * 2f64.powi(k as i32)).collect();
        prop_assert!(check_doubling(&ladder).is_ok());
    }
}

#[test]
fn all_errors_are_reported_together() {
    let err = parse_config("mode = sre\nj = 1\nmuu = 0.1\nbetas = 1, 3\nslices_m = 7\ndamping = 2\n").unwrap_err();
    let text = err.to_string();
    assert!(text.contains("unknown key 'muu'") && text.contains("did you mean 'mu'"), "{text}");
    assert!(text.contains("doubling policy"), "{text}");
    assert!(text.contains("'slices_m' must be even"), "{text}");
    assert!(text.contains("'damping' must lie in"), "{text}");
    assert!(err.errors.len() >= 5, "{text}");
}

#[test]
fn doubling_rule_names_the_offending_beta() {
    let e = check_doubling(&[1.0, 1.5, 2.0, 4.0]).unwrap_err();
    assert!(e.contains("beta = 1.5"), "{e}");
    assert!(check_doubling(&[1.0, 2.0, 4.0]).is_ok());
    assert!(check_doubling(&[3.0, 4.0, 5.0]).is_ok());
}

#[test]
fn comments_and_blank_lines_are_ignored() {
    let cfg =
        parse_config("# header\n\nmode = thermal  # trailing\nj = 1\nmu = 0.1\nbeta = 4\nslices_m = 64\n").unwrap();
    assert_eq!(cfg.beta_grid, vec![4.0]);
    assert_eq!(cfg.grid, Some(GridPolicy::FixedSlices(64)));
}
