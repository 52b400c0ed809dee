//! Small numerical helpers: log-sum-exp, LU log-determinants, and the
//! structured free-propagator products used by both saddle solvers.

use faer::linalg::solvers::PartialPivLu;
use faer::{Mat, MatRef};

/// `ln Σ exp(x_i)` with the max factored out; `-inf` for empty/all `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Sign and `ln|det|` read off a partial-pivot LU factorization.
pub fn lu_log_det(lu: &PartialPivLu<f64>) -> (f64, f64) {
    let u = lu.U();
    let n = u.nrows();
    let mut sign = 1.0;
    let mut log_abs = 0.0;
    for i in 0..n {
        let d = u[(i, i)];
        if d == 0.0 {
            return (0.0, f64::NEG_INFINITY);
        }
        if d < 0.0 {
            sign = -sign;
        }
        log_abs += d.abs().ln();
    }
    let (fwd, _) = lu.P().arrays();
    if permutation_parity(fwd) {
        sign = -sign;
    }
    (sign, log_abs)
}

/// True when the permutation is odd.
fn permutation_parity(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    let mut odd = false;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0usize;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        if len.is_multiple_of(2) {
            odd = !odd;
        }
    }
    odd
}

/// `Y = G0c · X` where `G0c(i,j) = ½ sgn(i−j)` acts on row blocks of size `m`.
///
/// `X` has `nb * m` rows; each block of `m` rows is an independent branch.
/// Costs O(rows·cols) via running sums instead of a dense product.
pub fn apply_g0c_rows(x: MatRef<'_, f64>, m: usize) -> Mat<f64> {
    let rows = x.nrows();
    let cols = x.ncols();
    debug_assert_eq!(rows % m, 0);
    let mut y = Mat::<f64>::zeros(rows, cols);
    for col in 0..cols {
        for b in 0..rows / m {
            let off = b * m;
            let total: f64 = (0..m).map(|i| x[(off + i, col)]).sum();
            let mut before = 0.0;
            for i in 0..m {
                let xi = x[(off + i, col)];
                let after = total - before - xi;
                y[(off + i, col)] = 0.5 * (before - after);
                before += xi;
            }
        }
    }
    y
}

/// Dense `G0c` on `m` slices.
pub fn g0c_dense(m: usize) -> Mat<f64> {
    Mat::from_fn(m, m, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => 0.5,
        std::cmp::Ordering::Less => -0.5,
        std::cmp::Ordering::Equal => 0.0,
    })
}

/// Least-squares fit of `y ≈ Σ_k c_k f_k(x)` via normal equations.
pub fn least_squares(design: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    use faer::linalg::solvers::Solve;
    let n = y.len();
    let p = design[0].len();
    let a = Mat::<f64>::from_fn(n, p, |i, j| design[i][j]);
    let b = Mat::<f64>::from_fn(n, 1, |i, _| y[i]);
    let ata = a.transpose() * &a;
    let atb = a.transpose() * &b;
    let sol = ata.partial_piv_lu().solve(&atb);
    (0..p).map(|k| sol[(k, 0)]).collect()
}
