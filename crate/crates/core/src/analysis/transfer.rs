//! Empirical one-iteration transfer map: binned means of (stimulus,
//! response) window values, plus a least-squares fit of the utterance-level
//! compressive model.

use serde::Serialize;

use super::{check_chain, trajectories};
use crate::contour::{ContourEnsemble, Window};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MIN_PAIRS: usize = 10;
pub const DEFAULT_BINS: usize = 20;

const LAMBDA_GRID_STEP: f64 = 0.01;
const ATTRACTOR_GRID_STEP: f64 = 0.1;
const REFINE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferBin<T> {
    pub x_center: T,
    pub y_mean: T,
    pub y_sd: T,
    pub count: usize,
}

/// Fitted parameters of `y = x − λ·(x − a(x))`, with `a(x)` the nearer of
/// `a_lo` and `a_hi` (equidistant inputs map to themselves).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompressiveFit<T> {
    pub a_lo: T,
    pub a_hi: T,
    pub lambda: T,
    pub rmse: T,
}

impl<T: Scalar> CompressiveFit<T> {
    pub fn predict(&self, x: T) -> T {
        match self.basin(x) {
            Some(a) => x - self.lambda * (x - a),
            None => x,
        }
    }

    /// Nearest attractor, or `None` at the midpoint.
    pub fn basin(&self, x: T) -> Option<T> {
        let (dl, dh) = ((x - self.a_lo).abs(), (x - self.a_hi).abs());
        if dl < dh {
            Some(self.a_lo)
        } else if dh < dl {
            Some(self.a_hi)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferEstimate<T> {
    pub bins: Vec<TransferBin<T>>,
    pub fitted: CompressiveFit<T>,
    pub pairs: usize,
}

/// `(x, y)` pairs of window means for the same utterance at consecutive
/// iterations, pooled over the whole run.
pub fn transition_pairs<T: Scalar>(
    ensembles: &[ContourEnsemble<T>],
    window: &Window<T>,
) -> Result<Vec<(T, T)>> {
    check_chain(ensembles)?;
    let traj = trajectories(ensembles, window)?;
    Ok(traj
        .iter()
        .flat_map(|m| m.windows(2).map(|w| (w[0], w[1])))
        .collect())
}

/// Equal-width binned means over the x range; empty bins are omitted.
pub fn bin_pairs<T: Scalar>(pairs: &[(T, T)], n_bins: usize) -> Result<Vec<TransferBin<T>>> {
    if n_bins == 0 {
        return Err(Error::domain("need at least one bin"));
    }
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    let lo = pairs.iter().map(|p| p.0).fold(T::infinity(), T::min);
    let hi = pairs.iter().map(|p| p.0).fold(T::neg_infinity(), T::max);
    let width = (hi - lo) / T::from_count(n_bins);
    let mut buckets: Vec<Vec<T>> = vec![Vec::new(); n_bins];
    for &(x, y) in pairs {
        let idx = if width > T::zero() {
            ((x - lo) / width)
                .floor()
                .to_usize()
                .unwrap_or(0)
                .min(n_bins - 1)
        } else {
            0
        };
        buckets[idx].push(y);
    }
    Ok(buckets
        .into_iter()
        .enumerate()
        .filter(|(_, ys)| !ys.is_empty())
        .map(|(i, ys)| {
            let n = T::from_count(ys.len());
            let mean = ys.iter().copied().sum::<T>() / n;
            let sd = if ys.len() > 1 {
                (ys.iter().map(|&y| (y - mean) * (y - mean)).sum::<T>() / (n - T::one())).sqrt()
            } else {
                T::zero()
            };
            TransferBin {
                x_center: lo + width * (T::from_count(i) + T::lit(0.5)),
                y_mean: mean,
                y_sd: sd,
                count: ys.len(),
            }
        })
        .collect())
}

/// Bins the pooled transitions and fits the compressive model.
pub fn estimate_transfer<T: Scalar>(
    ensembles: &[ContourEnsemble<T>],
    window: &Window<T>,
    n_bins: usize,
) -> Result<TransferEstimate<T>> {
    if ensembles.len() < 2 {
        return Err(Error::domain(
            "transfer estimation needs at least 2 iterations",
        ));
    }
    if n_bins < 4 {
        return Err(Error::domain(format!("need at least 4 bins, got {n_bins}")));
    }
    let pairs = transition_pairs(ensembles, window)?;
    let fitted = fit_compressive(&pairs)?;
    Ok(TransferEstimate {
        bins: bin_pairs(&pairs, n_bins)?,
        fitted,
        pairs: pairs.len(),
    })
}

/// Sufficient statistics of the residual `e + λ·d` for fixed attractors,
/// with `e = y − x` and `d = x − a(x)`.
struct Sums {
    ee: f64,
    ed: f64,
    dd: f64,
}

fn sums(pairs: &[(f64, f64)], a_lo: f64, a_hi: f64) -> Sums {
    let mut s = Sums {
        ee: 0.0,
        ed: 0.0,
        dd: 0.0,
    };
    for &(x, y) in pairs {
        let e = y - x;
        let (dl, dh) = ((x - a_lo).abs(), (x - a_hi).abs());
        let d = if dl < dh {
            x - a_lo
        } else if dh < dl {
            x - a_hi
        } else {
            0.0
        };
        s.ee += e * e;
        s.ed += e * d;
        s.dd += d * d;
    }
    s
}

fn sse(pairs: &[(f64, f64)], p: [f64; 3]) -> f64 {
    let s = sums(pairs, p[0], p[1]);
    s.ee + 2.0 * p[2] * s.ed + p[2] * p[2] * s.dd
}

/// Least-squares fit of the two-attractor compressive model.
///
/// A coarse grid (λ in steps of 0.01, attractors in steps of 0.1 st over
/// the data range) seeds a coordinate-descent pattern search that halves
/// its steps down to 1e-4. The result is then polished by solving the
/// linear least-squares problem `y − x = −λ·x + c_basin` exactly for the
/// current basin partition, which makes noise-free fits exact.
pub fn fit_compressive<T: Scalar>(pairs: &[(T, T)]) -> Result<CompressiveFit<T>> {
    if pairs.len() < MIN_PAIRS {
        return Err(Error::domain(format!(
            "transfer fit needs at least {MIN_PAIRS} pairs, got {}",
            pairs.len()
        )));
    }
    let pairs: Vec<(f64, f64)> = pairs
        .iter()
        .map(|&(x, y)| (x.as_f64(), y.as_f64()))
        .collect();
    if pairs.iter().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
        return Err(Error::domain("transfer pairs must be finite"));
    }
    let x_lo = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x_hi = pairs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);

    let k_lo = (x_lo / ATTRACTOR_GRID_STEP).floor() as i64;
    let mut k_hi = (x_hi / ATTRACTOR_GRID_STEP).ceil() as i64;
    if k_hi <= k_lo {
        k_hi = k_lo + 1;
    }
    let n_lambda = (1.0 / LAMBDA_GRID_STEP).round() as usize;

    let mut best = [0.0, 0.0, 0.0];
    let mut best_sse = f64::INFINITY;
    for i in k_lo..k_hi {
        for j in (i + 1)..=k_hi {
            let (a_lo, a_hi) = (
                i as f64 * ATTRACTOR_GRID_STEP,
                j as f64 * ATTRACTOR_GRID_STEP,
            );
            let s = sums(&pairs, a_lo, a_hi);
            for l in 0..=n_lambda {
                let lambda = l as f64 * LAMBDA_GRID_STEP;
                let v = s.ee + 2.0 * lambda * s.ed + lambda * lambda * s.dd;
                if v < best_sse {
                    best_sse = v;
                    best = [a_lo, a_hi, lambda];
                }
            }
        }
    }

    let (mut p, mut cur) = coordinate_descent(&pairs, best, best_sse);
    for _ in 0..20 {
        match polish(&pairs, p) {
            Some((q, v)) if v <= cur && q != p => {
                p = q;
                cur = v;
            }
            _ => break,
        }
    }

    let rmse = (cur.max(0.0) / pairs.len() as f64).sqrt();
    Ok(CompressiveFit {
        a_lo: T::lit(p[0]),
        a_hi: T::lit(p[1]),
        lambda: T::lit(p[2]),
        rmse: T::lit(rmse),
    })
}

fn feasible(p: &[f64; 3]) -> bool {
    p[0] < p[1] && (0.0..=1.0).contains(&p[2])
}

fn coordinate_descent(pairs: &[(f64, f64)], start: [f64; 3], start_sse: f64) -> ([f64; 3], f64) {
    let mut p = start;
    let mut cur = start_sse;
    let mut steps = [
        ATTRACTOR_GRID_STEP / 2.0,
        ATTRACTOR_GRID_STEP / 2.0,
        LAMBDA_GRID_STEP / 2.0,
    ];
    while steps.iter().any(|&s| s >= REFINE_TOL) {
        let mut improved = false;
        for c in 0..3 {
            for dir in [1.0, -1.0] {
                let mut q = p;
                q[c] += dir * steps[c];
                if c == 2 {
                    q[2] = q[2].clamp(0.0, 1.0);
                }
                if !feasible(&q) || q == p {
                    continue;
                }
                let v = sse(pairs, q);
                if v < cur {
                    p = q;
                    cur = v;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            for s in &mut steps {
                *s /= 2.0;
            }
        }
    }
    (p, cur)
}

/// Exact least squares for a fixed basin partition. Returns `None` when the
/// system is singular or the solution leaves the feasible region.
fn polish(pairs: &[(f64, f64)], p: [f64; 3]) -> Option<([f64; 3], f64)> {
    // Unknowns: λ, c_lo = λ·a_lo, c_hi = λ·a_hi.
    let mut m = [[0.0f64; 3]; 3];
    let mut r = [0.0f64; 3];
    let (mut n_lo, mut n_hi) = (0usize, 0usize);
    for &(x, y) in pairs {
        let (dl, dh) = ((x - p[0]).abs(), (x - p[1]).abs());
        let row = if dl < dh {
            n_lo += 1;
            [-x, 1.0, 0.0]
        } else if dh < dl {
            n_hi += 1;
            [-x, 0.0, 1.0]
        } else {
            continue;
        };
        let e = y - x;
        for a in 0..3 {
            r[a] += row[a] * e;
            for b in 0..3 {
                m[a][b] += row[a] * row[b];
            }
        }
    }
    let mut active: Vec<usize> = vec![0];
    if n_lo > 0 {
        active.push(1);
    }
    if n_hi > 0 {
        active.push(2);
    }
    let sol = solve(&m, &r, &active)?;
    let lambda = sol[0];
    if !(lambda > 1e-9 && lambda <= 1.0) {
        return None;
    }
    let a_lo = if n_lo > 0 { sol[1] / lambda } else { p[0] };
    let a_hi = if n_hi > 0 { sol[2] / lambda } else { p[1] };
    let q = [a_lo, a_hi, lambda];
    if !feasible(&q) || !q.iter().all(|v| v.is_finite()) {
        return None;
    }
    Some((q, sse(pairs, q)))
}

/// Solves the sub-system of `m x = r` restricted to `active` indices by
/// Gaussian elimination with partial pivoting.
fn solve(m: &[[f64; 3]; 3], r: &[f64; 3], active: &[usize]) -> Option<[f64; 3]> {
    let n = active.len();
    let mut a: Vec<Vec<f64>> = active
        .iter()
        .map(|&i| {
            let mut row: Vec<f64> = active.iter().map(|&j| m[i][j]).collect();
            row.push(r[i]);
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        let pivot = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col {
                let f = row[col] / pivot[col];
                for (x, p) in row[col..].iter_mut().zip(&pivot[col..]) {
                    *x -= f * p;
                }
            }
        }
    }
    let mut out = [0.0; 3];
    for (k, &i) in active.iter().enumerate() {
        out[i] = a[k][n] / a[k][k];
    }
    Some(out)
}

/// Per-iteration contraction toward the fitted attractors.
///
/// Uses utterances whose nearest fitted attractor never changes. With `s`
/// the signed distance of an utterance's window mean to its attractor,
/// returns the least-squares ratio `Σ s_i·s_{i+1} / Σ s_i²`, which is
/// `1 − λ` for the linear pull model, 0 for a quantizer and 1 for identity.
pub fn contraction_rate<T: Scalar>(
    ensembles: &[ContourEnsemble<T>],
    window: &Window<T>,
) -> Result<T> {
    if ensembles.len() < 3 {
        return Err(Error::domain(
            "contraction rate needs at least 3 iterations",
        ));
    }
    let fit = estimate_transfer(ensembles, window, DEFAULT_BINS)?.fitted;
    contraction_rate_with(ensembles, window, &fit)
}

pub fn contraction_rate_with<T: Scalar>(
    ensembles: &[ContourEnsemble<T>],
    window: &Window<T>,
    fit: &CompressiveFit<T>,
) -> Result<T> {
    if ensembles.len() < 3 {
        return Err(Error::domain(
            "contraction rate needs at least 3 iterations",
        ));
    }
    check_chain(ensembles)?;
    let traj = trajectories(ensembles, window)?;
    let (mut num, mut den) = (T::zero(), T::zero());
    let mut stable = 0usize;
    for m in &traj {
        let Some(a) = fit.basin(m[0]) else { continue };
        if m.iter().any(|&x| fit.basin(x) != Some(a)) {
            continue;
        }
        stable += 1;
        for w in m.windows(2) {
            let (s0, s1) = (w[0] - a, w[1] - a);
            num = num + s0 * s1;
            den = den + s0 * s0;
        }
    }
    if stable == 0 {
        return Err(Error::domain("no utterance stays in one basin"));
    }
    if den == T::zero() {
        return Err(Error::domain(
            "basin-stable utterances all sit on their attractors",
        ));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn model(a_lo: f64, a_hi: f64, lambda: f64) -> CompressiveFit<f64> {
        CompressiveFit {
            a_lo,
            a_hi,
            lambda,
            rmse: 0.0,
        }
    }

    #[test]
    fn exact_recovery_from_noise_free_pairs() {
        let truth = model(-3.0, 1.0, 0.3);
        let pairs: Vec<(f64, f64)> = (0..60)
            .map(|i| -7.0 + 0.19 * i as f64)
            .map(|x| (x, truth.predict(x)))
            .collect();
        let fit = fit_compressive(&pairs).unwrap();
        assert_abs_diff_eq!(fit.lambda, 0.3, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.a_lo, -3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.a_hi, 1.0, epsilon = 1e-9);
        assert!(fit.rmse < 1e-9);
    }

    #[test]
    fn identity_pairs_fit_zero_pull() {
        let pairs: Vec<(f64, f64)> = (0..30)
            .map(|i| (i as f64 * 0.3 - 4.0, i as f64 * 0.3 - 4.0))
            .collect();
        let fit = fit_compressive(&pairs).unwrap();
        assert!(fit.lambda < 1e-3);
        assert!(fit.a_lo < fit.a_hi);
    }

    #[test]
    fn step_pairs_fit_full_pull() {
        let pairs: Vec<(f64, f64)> = (0..40)
            .map(|i| -6.0 + 0.23 * i as f64)
            .map(|x| (x, if x < -1.0 { -3.0 } else { 1.0 }))
            .collect();
        let fit = fit_compressive(&pairs).unwrap();
        assert!(fit.lambda >= 0.95, "{fit:?}");
    }

    #[test]
    fn too_few_pairs() {
        let pairs = vec![(0.0, 0.0); MIN_PAIRS - 1];
        assert!(fit_compressive(&pairs).is_err());
    }

    #[test]
    fn binning_omits_empty_bins() {
        let pairs = vec![(0.0, 1.0), (0.1, 3.0), (10.0, 5.0)];
        let bins = bin_pairs(&pairs, 5).unwrap();
        assert_eq!(bins.len(), 2);
        assert_eq!(bins[0].count, 2);
        assert_abs_diff_eq!(bins[0].y_mean, 2.0);
        assert_abs_diff_eq!(bins[0].y_sd, 2f64.sqrt(), epsilon = 1e-12);
        assert_eq!(bins[1].count, 1);
        assert_abs_diff_eq!(bins[1].x_center, 9.0);
    }

    #[test]
    fn midpoint_has_no_basin() {
        let f = model(-3.0, 1.0, 0.5);
        assert_eq!(f.basin(-1.0), None);
        assert_eq!(f.predict(-1.0), -1.0);
        assert_eq!(f.predict(3.0), 2.0);
    }

    #[test]
    fn small_solve() {
        let m = [[2.0, 1.0, 0.0], [1.0, 3.0, 0.0], [0.0, 0.0, 0.0]];
        let x = solve(&m, &[3.0, 5.0, 0.0], &[0, 1]).unwrap();
        assert_abs_diff_eq!(x[0], 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 1.4, epsilon = 1e-12);
        assert!(solve(&m, &[1.0, 1.0, 1.0], &[0, 1, 2]).is_none());
    }
}
