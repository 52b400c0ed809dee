//! Exact small-N oracle: Jordan-Wigner Majoranas, thermal density
//! matrices, the Majorana spectrum and both SRE evaluation routes.

mod pauli;

pub use pauli::{jw_gamma, PauliString};

use faer::{c64, Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::LN_2;

use crate::domain::ModelParams;
use crate::error::{Error, Result};

const MAX_MAJORANAS: usize = 16;
const MAX_REPLICATED_PER_SIDE: usize = 4;

/// The `2N` Jordan-Wigner Majoranas, normalized `{ψ_m, ψ_n} = δ_mn`.
///
/// Ordering is interleaved: index `2j` is `(L, j)` and `2j + 1` is `(R, j)`,
/// so every `ψ_{j,L} ψ_{j,R}` pair lives on qubit `j`.
#[derive(Debug, Clone)]
pub struct MajoranaOps {
    pub n_total: usize,
    pub ops: Vec<Mat<c64>>,
    /// `γ_m = √2 ψ_m` as Pauli strings.
    pub strings: Vec<PauliString>,
}

impl MajoranaOps {
    pub fn n_qubits(&self) -> usize {
        self.n_total / 2
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits()
    }

    pub fn left(j: usize) -> usize {
        2 * j
    }

    pub fn right(j: usize) -> usize {
        2 * j + 1
    }
}

pub fn build_majorana_ops(n_total: usize) -> Result<MajoranaOps> {
    if n_total < 2 || !n_total.is_multiple_of(2) {
        return Err(Error::InvalidParams(format!("n_total must be even and >= 2, got {n_total}")));
    }
    if n_total > MAX_MAJORANAS {
        return Err(Error::DimensionCap(format!("{n_total} Majoranas exceeds the cap of {MAX_MAJORANAS}")));
    }
    let nq = n_total / 2;
    let strings: Vec<PauliString> = (0..n_total).map(jw_gamma).collect();
    let scale = c64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let ops = strings
        .iter()
        .map(|s| {
            let mut m = s.to_matrix(nq);
            for j in 0..m.ncols() {
                for i in 0..m.nrows() {
                    m[(i, j)] *= scale;
                }
            }
            m
        })
        .collect();
    Ok(MajoranaOps { n_total, ops, strings })
}

/// Hermitian unitary `Ψ_v = i^{|v|(|v|−1)/2} 2^{|v|/2} Π_{m∈v} ψ_m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MajoranaString {
    pub v: u32,
    pub weight: u32,
    pub pauli: PauliString,
}

impl MajoranaString {
    pub fn new(v: u32, n_total: usize) -> Self {
        let mut p = PauliString::IDENTITY;
        for m in 0..n_total {
            if v >> m & 1 == 1 {
                p = p.compose(jw_gamma(m));
            }
        }
        let w = v.count_ones();
        let k = ((w * w.saturating_sub(1) / 2) % 4) as u8;
        Self { v, weight: w, pauli: p.times_i_pow(k) }
    }

    pub fn matrix(&self, n_total: usize) -> Mat<c64> {
        self.pauli.to_matrix(n_total / 2)
    }
}

/// One disorder realization `J_ijkl`, shared by both clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSample {
    pub n_per_side: usize,
    pub j_ijkl: Vec<([usize; 4], f64)>,
    pub seed: u64,
}

impl CouplingSample {
    /// I.i.d. Gaussian couplings, variance `6J²/N³`, from a ChaCha8 stream.
    ///
    /// Normals use Box–Muller on 53-bit uniforms so tables are identical on
    /// every platform.
    pub fn draw(n_per_side: usize, coupling_j: f64, seed: u64) -> Self {
        let n = n_per_side;
        let sd = (6.0 * coupling_j * coupling_j / (n as f64).powi(3)).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut spare: Option<f64> = None;
        let mut normal = |rng: &mut ChaCha8Rng| -> f64 {
            if let Some(z) = spare.take() {
                return z;
            }
            let u1 = 1.0 - (rng.gen::<u64>() >> 11) as f64 / (1u64 << 53) as f64;
            let u2 = (rng.gen::<u64>() >> 11) as f64 / (1u64 << 53) as f64;
            let r = (-2.0 * u1.ln()).sqrt();
            let th = 2.0 * std::f64::consts::PI * u2;
            spare = Some(r * th.sin());
            r * th.cos()
        };
        let mut j_ijkl = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    for l in k + 1..n {
                        j_ijkl.push(([i, j, k, l], sd * normal(&mut rng)));
                    }
                }
            }
        }
        Self { n_per_side, j_ijkl, seed }
    }
}

fn add_pauli_term(h: &mut Mat<c64>, p: PauliString, coef: c64) {
    for b in 0..h.ncols() as u64 {
        let (out, amp) = p.apply(b);
        h[(out as usize, b as usize)] += coef * amp;
    }
}

/// `H = Σ J_ijkl (ψ_L⁴ + ψ_R⁴) + iμ Σ_j ψ_{j,L} ψ_{j,R}`.
pub fn build_hamiltonian(params: &ModelParams, sample: &CouplingSample, ops: &MajoranaOps) -> Result<Mat<c64>> {
    let n = params.n_per_side;
    if ops.n_total != 2 * n || sample.n_per_side != n {
        return Err(Error::SizeMismatch(format!(
            "params N={n}, ops for {} Majoranas, sample N={}",
            ops.n_total, sample.n_per_side
        )));
    }
    let dim = ops.dim();
    let mut h = Mat::<c64>::zeros(dim, dim);
    let g = &ops.strings;
    for &([i, j, k, l], jv) in &sample.j_ijkl {
        for side in [MajoranaOps::left as fn(usize) -> usize, MajoranaOps::right] {
            let p = g[side(i)].compose(g[side(j)]).compose(g[side(k)]).compose(g[side(l)]);
            add_pauli_term(&mut h, p, c64::new(0.25 * jv, 0.0));
        }
    }
    for j in 0..n {
        let p = g[MajoranaOps::left(j)].compose(g[MajoranaOps::right(j)]);
        add_pauli_term(&mut h, p, c64::new(0.0, 0.5 * params.hopping_mu));
    }
    Ok(h)
}

fn hermiticity_defect(h: &Mat<c64>) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..h.nrows() {
        for j in 0..h.ncols() {
            d = d.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    d
}

/// Normalized Gibbs state plus `ln Z_β = ln tr e^{−βH}`.
#[derive(Debug, Clone)]
pub struct ThermalState {
    pub rho: Mat<c64>,
    pub ln_z: f64,
    pub n_qubits: usize,
}

pub fn thermal_state(h: &Mat<c64>, beta: f64) -> Result<ThermalState> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidParams(format!("beta must be finite and >= 0, got {beta}")));
    }
    let dim = h.nrows();
    if h.ncols() != dim || !dim.is_power_of_two() {
        return Err(Error::SizeMismatch(format!("{}x{} is not a qubit operator", dim, h.ncols())));
    }
    let scale = (0..dim).map(|i| h[(i, i)].norm()).fold(1.0, f64::max);
    let defect = hermiticity_defect(h);
    if defect > 1e-12 * scale {
        return Err(Error::NotHermitian(defect));
    }
    let n_qubits = dim.trailing_zeros() as usize;
    if beta == 0.0 {
        let rho =
            Mat::from_fn(dim, dim, |i, j| if i == j { c64::new(1.0 / dim as f64, 0.0) } else { c64::new(0.0, 0.0) });
        return Ok(ThermalState { rho, ln_z: n_qubits as f64 * LN_2, n_qubits });
    }
    let eig = h.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Other(format!("eigensolver: {e:?}")))?;
    let evals: Vec<f64> = (0..dim).map(|i| eig.S().column_vector()[i].re).collect();
    let e0 = evals.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = evals.iter().map(|&e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = w.iter().sum();
    let u = eig.U();
    let mut uw = u.to_owned();
    for j in 0..dim {
        let s = c64::new(w[j] / z, 0.0);
        for i in 0..dim {
            uw[(i, j)] *= s;
        }
    }
    let rho = &uw * u.adjoint();
    Ok(ThermalState { rho, ln_z: z.ln() - beta * e0, n_qubits })
}

/// Coefficients `c_v = tr[ρ Ψ_v]`, indexed by the bitmask `v`.
#[derive(Debug, Clone)]
pub struct MajoranaSpectrum {
    pub n_total: usize,
    pub coefficients: Vec<f64>,
}

impl MajoranaSpectrum {
    pub fn get(&self, v: u32) -> f64 {
        self.coefficients[v as usize]
    }

    pub fn sum_squares(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }

    pub fn sum_quartic(&self) -> f64 {
        self.coefficients.iter().map(|c| c.powi(4)).sum()
    }
}

fn string_expectation(rho: &Mat<c64>, v: u32, n_total: usize) -> c64 {
    MajoranaString::new(v, n_total).pauli.trace_with(rho)
}

/// Enumerates even-weight strings; odd weights are spot-checked to vanish.
pub fn majorana_spectrum(rho: &Mat<c64>, ops: &MajoranaOps) -> Result<MajoranaSpectrum> {
    let n_total = ops.n_total;
    if rho.nrows() != ops.dim() {
        return Err(Error::SizeMismatch(format!("rho is {}x{}, ops need {}", rho.nrows(), rho.ncols(), ops.dim())));
    }
    let count = 1usize << n_total;
    let mut coefficients = vec![0.0; count];
    for v in 0..count as u32 {
        if v.count_ones() % 2 == 1 {
            continue;
        }
        let c = string_expectation(rho, v, n_total);
        if c.im.abs() > 1e-9 {
            return Err(Error::ComplexCoefficient { index: v as usize, imag: c.im });
        }
        coefficients[v as usize] = c.re;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0dd5);
    let odd_checks = (count / 200).max(1);
    for _ in 0..odd_checks {
        let mut v = rng.gen_range(0..count as u32);
        if v.count_ones() % 2 == 0 {
            v ^= 1;
        }
        let c = string_expectation(rho, v, n_total);
        if c.norm() > 1e-9 {
            return Err(Error::ComplexCoefficient { index: v as usize, imag: c.norm() });
        }
    }
    Ok(MajoranaSpectrum { n_total, coefficients })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SreValues {
    pub m2: f64,
    pub s2: f64,
    pub m2_tilde: f64,
}

fn purity(rho: &Mat<c64>) -> f64 {
    let mut p = 0.0;
    for i in 0..rho.nrows() {
        for j in 0..rho.ncols() {
            p += (rho[(i, j)] * rho[(j, i)]).re;
        }
    }
    p
}

/// `M₂ = −ln(2^{−N_q} Σ c_v⁴)`, `S₂ = −ln tr ρ²`.
pub fn sre_direct(spectrum: &MajoranaSpectrum, rho: &Mat<c64>) -> Result<SreValues> {
    let nq = spectrum.n_total / 2;
    let q = spectrum.sum_quartic();
    if q.is_nan() || q <= 0.0 {
        return Err(Error::Other("Σ c_v⁴ vanished; c_0 must be 1".into()));
    }
    let nl2 = nq as f64 * LN_2;
    let m2 = nl2 - q.ln();
    let s2 = nl2 - ((1u64 << nq) as f64 * purity(rho)).ln();
    Ok(SreValues { m2, s2, m2_tilde: m2 - s2 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicatedSre {
    /// `S_SRE = −ln tr[(e^{−βH})^{⊗4} Π_m (1 + 4ψ⁽¹⁾ψ⁽²⁾ψ⁽³⁾ψ⁽⁴⁾)]`.
    pub s_sre: f64,
    pub s_beta: f64,
    pub m2: f64,
}

/// Four-copy trace with the operator insertions expanded into Pauli strings.
///
/// The Jordan-Wigner string runs across copies (copy-major), so each copy of
/// the even Hamiltonian acts as a plain tensor factor.
pub fn sre_replicated(state: &ThermalState, n_per_side: usize) -> Result<ReplicatedSre> {
    if n_per_side > MAX_REPLICATED_PER_SIDE {
        return Err(Error::DimensionCap(format!("replicated trace needs N <= {MAX_REPLICATED_PER_SIDE} per side")));
    }
    let nq = n_per_side;
    if state.n_qubits != nq {
        return Err(Error::SizeMismatch(format!("state has {} qubits, expected {nq}", state.n_qubits)));
    }
    let n_maj = 2 * nq;
    let inserts: Vec<PauliString> =
        (0..n_maj).map(|m| (0..4).fold(PauliString::IDENTITY, |p, c| p.compose(jw_gamma(c * n_maj + m)))).collect();
    let dim = 1u64 << nq;
    let mask = dim - 1;
    let rho = &state.rho;
    let total_states = 1u64 << (4 * nq);
    let i_pow = [c64::new(1.0, 0.0), c64::new(0.0, 1.0), c64::new(-1.0, 0.0), c64::new(0.0, -1.0)];
    let mut z = c64::new(0.0, 0.0);
    for subset in 0..1u32 << n_maj {
        let p =
            (0..n_maj).filter(|m| subset >> m & 1 == 1).fold(PauliString::IDENTITY, |acc, m| acc.compose(inserts[m]));
        let mut tr = c64::new(0.0, 0.0);
        for b in 0..total_states {
            let bx = b ^ p.x;
            let mut prod = i_pow[p.apply_phase(b) as usize];
            for c in 0..4 {
                let sh = c * nq;
                prod *= rho[(((b >> sh) & mask) as usize, ((bx >> sh) & mask) as usize)];
            }
            tr += prod;
        }
        z += tr;
    }
    if z.im.abs() > 1e-9 * z.re.abs().max(1e-300) || z.re.is_nan() || z.re <= 0.0 {
        return Err(Error::Other(format!("replicated trace is not positive real: {z}")));
    }
    let s_beta = -state.ln_z;
    let s_sre = -4.0 * state.ln_z - z.re.ln();
    let m2 = s_sre - 4.0 * s_beta + nq as f64 * LN_2;
    Ok(ReplicatedSre { s_sre, s_beta, m2 })
}

/// Both routes; aborts when they disagree beyond `1e-8`.
pub fn sre_cross_checked(state: &ThermalState, ops: &MajoranaOps) -> Result<SreValues> {
    let spec = majorana_spectrum(&state.rho, ops)?;
    let direct = sre_direct(&spec, &state.rho)?;
    let rep = sre_replicated(state, ops.n_qubits())?;
    if (direct.m2 - rep.m2).abs() > 1e-8 {
        return Err(Error::OracleMismatch { direct: direct.m2, replicated: rep.m2 });
    }
    Ok(direct)
}

/// `−ln((1 + tanh⁴(βμ/2))/2)`: M₂ of one decoupled `(L, R)` pair at `J = 0`.
pub fn free_pair_m2(beta_mu: f64) -> f64 {
    let t = (0.5 * beta_mu).tanh();
    LN_2 - (1.0 + t.powi(4)).ln()
}

/// Thermal state and SRE values of one disorder sample.
pub fn ed_sre(params: &ModelParams, seed: u64) -> Result<(ThermalState, SreValues)> {
    params.validate()?;
    let ops = build_majorana_ops(2 * params.n_per_side)?;
    let sample = CouplingSample::draw(params.n_per_side, params.coupling_j, seed);
    let h = build_hamiltonian(params, &sample, &ops)?;
    let state = thermal_state(&h, params.beta)?;
    let spec = majorana_spectrum(&state.rho, &ops)?;
    let vals = sre_direct(&spec, &state.rho)?;
    Ok((state, vals))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisorderAverage {
    pub mean: f64,
    pub stderr: f64,
    pub values: Vec<f64>,
}

/// Sample `i` is evaluated with seed `seed + i`; order is fixed by index.
pub fn disorder_average<F>(mut estimator: F, n_samples: usize, seed: u64) -> Result<DisorderAverage>
where
    F: FnMut(u64) -> Result<f64>,
{
    if n_samples < 2 {
        return Err(Error::InvalidParams("disorder average needs at least 2 samples".into()));
    }
    let mut values = Vec::with_capacity(n_samples);
    for i in 0..n_samples as u64 {
        let v = estimator(seed.wrapping_add(i)).map_err(|e| Error::Sample { offset: i, source: Box::new(e) })?;
        values.push(v);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(DisorderAverage { mean, stderr: (var / n).sqrt(), values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: c64, b: c64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn two_majoranas_anticommute() {
        let ops = build_majorana_ops(2).unwrap();
        let (a, b) = (&ops.ops[0], &ops.ops[1]);
        let ac = a * b + b * a;
        let sq = a * a;
        for i in 0..2 {
            for j in 0..2 {
                assert!(close(ac[(i, j)], c64::new(0.0, 0.0), 1e-15));
                let want = if i == j { 0.5 } else { 0.0 };
                assert!(close(sq[(i, j)], c64::new(want, 0.0), 1e-15));
            }
        }
    }

    #[test]
    fn strings_are_hermitian_unitaries() {
        for v in 0..64u32 {
            let m = MajoranaString::new(v, 6).matrix(6);
            let sq = &m * &m;
            for i in 0..8 {
                for j in 0..8 {
                    assert!(close(m[(i, j)], m[(j, i)].conj(), 1e-15));
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!(close(sq[(i, j)], c64::new(want, 0.0), 1e-14));
                }
            }
        }
    }

    #[test]
    fn string_phase_matches_psi_product() {
        let ops = build_majorana_ops(4).unwrap();
        // Ψ for v = {0,1,2}: i^{3} 2^{3/2} ψ0 ψ1 ψ2
        let prod = &(&ops.ops[0] * &ops.ops[1]) * &ops.ops[2];
        let m = MajoranaString::new(0b0111, 4).matrix(4);
        let f = c64::new(0.0, -1.0) * c64::new(2f64.powf(1.5), 0.0);
        for i in 0..4 {
            for j in 0..4 {
                assert!(close(m[(i, j)], f * prod[(i, j)], 1e-14));
            }
        }
    }

    #[test]
    fn pair_term_is_local_z() {
        let p = ModelParams::new(1, 0.0, 1.0, 1.0);
        let s = CouplingSample::draw(1, 0.0, 0);
        let ops = build_majorana_ops(2).unwrap();
        let h = build_hamiltonian(&p, &s, &ops).unwrap();
        assert!(close(h[(0, 0)], c64::new(-0.5, 0.0), 1e-15));
        assert!(close(h[(1, 1)], c64::new(0.5, 0.0), 1e-15));
    }

    #[test]
    fn same_seed_same_couplings() {
        assert_eq!(CouplingSample::draw(6, 1.0, 9), CouplingSample::draw(6, 1.0, 9));
        assert_ne!(CouplingSample::draw(6, 1.0, 9), CouplingSample::draw(6, 1.0, 10));
    }

    #[test]
    fn free_pair_limits() {
        assert_eq!(free_pair_m2(0.0), LN_2);
        assert!(free_pair_m2(80.0).abs() < 1e-15);
        assert!((free_pair_m2(2.0) - 0.403_145_477_243_684_5).abs() < 1e-13);
    }

    #[test]
    fn disorder_average_constant_has_zero_error() {
        let r = disorder_average(|_| Ok(1.25), 5, 3).unwrap();
        assert_eq!(r.mean, 1.25);
        assert_eq!(r.stderr, 0.0);
        assert!(disorder_average(|_| Ok(0.0), 1, 0).is_err());
    }

    #[test]
    fn failing_sample_reports_offset() {
        let e =
            disorder_average(|s| if s == 12 { Err(Error::Other("boom".into())) } else { Ok(0.0) }, 4, 10).unwrap_err();
        assert!(matches!(e, Error::Sample { offset: 2, .. }));
    }
}
