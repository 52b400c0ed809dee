use faer::{c64, Mat};
use proptest::prelude::*;
use std::f64::consts::LN_2;

use syk_sre::domain::ModelParams;
use syk_sre::exact_reference::*;

fn kron(a: &Mat<c64>, b: &Mat<c64>) -> Mat<c64> {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

fn pauli(k: usize) -> Mat<c64> {
    let (o, z, i) = (c64::new(1.0, 0.0), c64::new(0.0, 0.0), c64::new(0.0, 1.0));
    let m = match k {
        0 => [[o, z], [z, o]],
        1 => [[z, o], [o, z]],
        2 => [[z, -i], [i, z]],
        _ => [[o, z], [z, -o]],
    };
    Mat::from_fn(2, 2, |r, c| m[r][c])
}

/// `M₂` from the plain Pauli basis built by Kronecker products (qubit q is
/// bit q of the basis index, i.e. the rightmost factor is qubit 0).
fn m2_by_kron(rho: &Mat<c64>, nq: usize) -> f64 {
    let mut total = 0.0;
    for code in 0..4usize.pow(nq as u32) {
        let mut p = Mat::from_fn(1, 1, |_, _| c64::new(1.0, 0.0));
        for q in (0..nq).rev() {
            p = kron(&p, &pauli(code / 4usize.pow(q as u32) % 4));
        }
        let mut tr = c64::new(0.0, 0.0);
        for a in 0..rho.nrows() {
            for b in 0..rho.ncols() {
                tr += rho[(a, b)] * p[(b, a)];
            }
        }
        total += tr.re.powi(4);
    }
    nq as f64 * LN_2 - total.ln()
}

fn state(n: usize, j: f64, mu: f64, beta: f64, seed: u64) -> (ThermalState, MajoranaOps) {
    let ops = build_majorana_ops(2 * n).unwrap();
    let p = ModelParams::new(n, j, mu, beta);
    let h = build_hamiltonian(&p, &CouplingSample::draw(n, j, seed), &ops).unwrap();
    (thermal_state(&h, beta).unwrap(), ops)
}

#[test]
fn majoranas_anticommute_for_all_pairs() {
    for n_total in [2, 4, 6, 8] {
        let ops = build_majorana_ops(n_total).unwrap();
        let dim = ops.dim();
        for a in 0..n_total {
            for b in 0..n_total {
                let ac = &ops.ops[a] * &ops.ops[b] + &ops.ops[b] * &ops.ops[a];
                let want = if a == b { 1.0 } else { 0.0 };
                for i in 0..dim {
                    for k in 0..dim {
                        let w = if i == k { want } else { 0.0 };
                        assert!((ac[(i, k)] - c64::new(w, 0.0)).norm() < 1e-14, "n={n_total} a={a} b={b}");
                    }
                }
            }
        }
    }
}

#[test]
fn hopping_term_is_diagonal_on_each_qubit() {
    // iμ ψ_L ψ_R on qubit j is −(μ/2) Z_j in this ordering
    let ops = build_majorana_ops(4).unwrap();
    let (l, r) = (MajoranaOps::left(1), MajoranaOps::right(1));
    let t = &ops.ops[l] * &ops.ops[r];
    for b in 0..4usize {
        let z = if b >> 1 & 1 == 0 { 1.0 } else { -1.0 };
        assert!((t[(b, b)] * c64::new(0.0, 1.0) - c64::new(-0.5 * z, 0.0)).norm() < 1e-15);
    }
}

#[test]
fn pauli_basis_oracle_matches_majorana_spectrum() {
    for (beta, mu, seed) in [(1.0, 0.1, 3), (5.0, 0.3, 4), (0.7, 0.0, 5)] {
        let (st, ops) = state(2, 1.0, mu, beta, seed);
        let spec = majorana_spectrum(&st.rho, &ops).unwrap();
        let direct = sre_direct(&spec, &st.rho).unwrap();
        let oracle = m2_by_kron(&st.rho, 2);
        assert!((direct.m2 - oracle).abs() < 1e-11, "{} vs {}", direct.m2, oracle);
    }
}

#[test]
fn free_pair_against_two_level_oracle() {
    // one qubit, H = −(μ/2) Z: ρ = (I + tanh(βμ/2) Z)/2
    for bm in [0.3f64, 2.0, 7.0] {
        let t: f64 = (0.5 * bm).tanh();
        let rho = Mat::from_fn(2, 2, |i, j| {
            c64::new(
                if i != j {
                    0.0
                } else if i == 0 {
                    0.5 * (1.0 + t)
                } else {
                    0.5 * (1.0 - t)
                },
                0.0,
            )
        });
        let oracle = m2_by_kron(&rho, 1);
        assert!((free_pair_m2(bm) - oracle).abs() < 1e-13);
        let (_, v) = ed_sre(&ModelParams::new(3, 0.0, 1.0, bm), 0).unwrap();
        assert!((v.m2 - 3.0 * oracle).abs() < 1e-10);
    }
}

#[test]
fn infinite_temperature_is_maximally_mixed() {
    let (_, v) = ed_sre(&ModelParams::new(3, 1.0, 0.2, 0.0), 9).unwrap();
    assert_eq!(v.m2, 3.0 * LN_2);
    assert_eq!(v.s2, 3.0 * LN_2);
    assert_eq!(v.m2_tilde, 0.0);
}

#[test]
fn coupling_draws_are_reproducible_and_scaled() {
    let a = CouplingSample::draw(6, 1.3, 42);
    assert_eq!(a, CouplingSample::draw(6, 1.3, 42));
    assert_ne!(a, CouplingSample::draw(6, 1.3, 43));
    let n = 6usize;
    let mut sum = 0.0;
    let mut count = 0.0;
    for s in 0..400 {
        for (_, j) in CouplingSample::draw(n, 1.0, s).j_ijkl {
            sum += j * j;
            count += 1.0;
        }
    }
    let want = 6.0 / (n as f64).powi(3);
    assert!((sum / count / want - 1.0).abs() < 0.05);
}

#[test]
fn caps_are_enforced() {
    assert!(build_majorana_ops(18).is_err());
    assert!(build_majorana_ops(3).is_err());
    let (st, _) = state(2, 1.0, 0.1, 1.0, 1);
    assert!(sre_replicated(&st, 3).is_err());
}

#[test]
fn disorder_average_reports_the_failing_sample() {
    let err = disorder_average(|s| if s == 12 { Err(syk_sre::Error::Other("boom".into())) } else { Ok(1.0) }, 5, 10)
        .unwrap_err();
    assert!(err.to_string().contains("seed offset 2"));
    let ok = disorder_average(|s| Ok(s as f64), 4, 0).unwrap();
    assert_eq!(ok.mean, 1.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spectrum_normalization(beta in 0.0f64..6.0, mu in 0.0f64..1.0, seed in 0u64..1000) {
        let (st, ops) = state(2, 1.0, mu, beta, seed);
        let spec = majorana_spectrum(&st.rho, &ops).unwrap();
        let mut purity = 0.0;
        for i in 0..st.rho.nrows() {
            for k in 0..st.rho.ncols() {
                purity += (st.rho[(i, k)] * st.rho[(k, i)]).re;
            }
        }
        prop_assert!((spec.get(0) - 1.0).abs() < 1e-12);
        prop_assert!((spec.sum_squares() - 4.0 * purity).abs() < 1e-10);
    }

    #[test]
    fn direct_equals_replicated(beta in 0.1f64..6.0, mu in 0.0f64..0.5, seed in 0u64..1000) {
        let (st, ops) = state(2, 1.0, mu, beta, seed);
        let spec = majorana_spectrum(&st.rho, &ops).unwrap();
        let d = sre_direct(&spec, &st.rho).unwrap();
        let r = sre_replicated(&st, 2).unwrap();
        prop_assert!((d.m2 - r.m2).abs() < 1e-9, "{} vs {}", d.m2, r.m2);
    }

    #[test]
    fn random_pairs_anticommute(a in 0usize..12, b in 0usize..12) {
        let ops = build_majorana_ops(12).unwrap();
        let ac = &ops.ops[a] * &ops.ops[b] + &ops.ops[b] * &ops.ops[a];
        let want = if a == b { 1.0 } else { 0.0 };
        for i in 0..ops.dim() {
            for k in 0..ops.dim() {
                let w = if i == k { want } else { 0.0 };
                prop_assert!((ac[(i, k)] - c64::new(w, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn magic_bounds(beta in 0.0f64..8.0, mu in 0.0f64..1.0, seed in 0u64..1000) {
        let (st, ops) = state(2, 1.0, mu, beta, seed);
        let v = sre_direct(&majorana_spectrum(&st.rho, &ops).unwrap(), &st.rho).unwrap();
        prop_assert!(v.m2 <= 2.0 * LN_2 + 1e-12);
        prop_assert!(v.s2 >= -1e-12 && v.s2 <= 2.0 * LN_2 + 1e-12);
    }
}
