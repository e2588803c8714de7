//! Gaussian kernel density estimates and the valley-depth bimodality
//! statistic.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Evaluation points of every estimate produced by [`density`].
pub const DENSITY_GRID_POINTS: usize = 512;

/// Smallest bandwidth the automatic rule will return, in semitones.
pub const MIN_BANDWIDTH: f64 = 0.05;

/// Identifies the valley-depth formula in serialized reports.
pub const VALLEY_DEPTH_DEFINITION: &str = "valley-depth/v1: (h2 - v) / max(v, 1e-6 * h2)";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth<T> {
    /// `0.9 · min(sd, IQR / 1.34) · n^(-1/5)`, floored at [`MIN_BANDWIDTH`].
    Auto,
    Fixed(T),
}

/// A density sampled on a uniform φ grid, normalized so the trapezoid
/// integral is 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate<T> {
    grid: Vec<T>,
    density: Vec<T>,
    bandwidth: T,
}

impl<T: Scalar> DensityEstimate<T> {
    /// Wraps sampled density values, rescaling them to unit mass.
    pub fn new(grid: Vec<T>, density: Vec<T>, bandwidth: T) -> Result<Self> {
        if grid.len() < 2 || grid.len() != density.len() {
            return Err(Error::domain(
                "density needs matching grid and values, at least 2 points",
            ));
        }
        let step = grid[1] - grid[0];
        if !(step > T::zero()) {
            return Err(Error::domain("density grid must be ascending"));
        }
        let scale = grid[0].abs().max(grid[grid.len() - 1].abs());
        let tol = T::lit(1e-6) * step + T::lit(64.0) * T::epsilon() * scale;
        if grid.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > tol) {
            return Err(Error::domain("density grid must be uniform"));
        }
        if density.iter().any(|d| !d.is_finite() || *d < T::zero()) {
            return Err(Error::domain(
                "density values must be finite and non-negative",
            ));
        }
        let mass = trapezoid(&density, step);
        if !(mass > T::zero()) {
            return Err(Error::domain("density has zero mass"));
        }
        let density = density.into_iter().map(|d| d / mass).collect();
        Ok(DensityEstimate {
            grid,
            density,
            bandwidth,
        })
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    pub fn density(&self) -> &[T] {
        &self.density
    }

    pub fn bandwidth(&self) -> T {
        self.bandwidth
    }

    pub fn integral(&self) -> T {
        trapezoid(&self.density, self.grid[1] - self.grid[0])
    }

    /// Linear interpolation of the density at `x`; zero outside the grid.
    pub fn at(&self, x: T) -> T {
        if x < self.grid[0] || x > self.grid[self.grid.len() - 1] {
            return T::zero();
        }
        crate::contour::interp(&self.grid, &self.density, x)
    }

    /// Indices of interior local maxima. A plateau counts once, at its left
    /// edge. Maxima below `1e-8` of the global maximum are rounding noise in
    /// the tails and are dropped.
    pub fn peak_indices(&self) -> Vec<usize> {
        let d = &self.density;
        let top = d.iter().copied().fold(T::zero(), T::max);
        let floor = top * T::lit(1e-8);
        let mut peaks = Vec::new();
        let mut i = 1;
        while i + 1 < d.len() {
            if d[i] > d[i - 1] && d[i] > floor {
                let mut j = i;
                while j + 1 < d.len() && d[j + 1] == d[i] {
                    j += 1;
                }
                if j + 1 < d.len() && d[j + 1] < d[i] {
                    peaks.push(i);
                }
                i = j + 1;
            } else {
                i += 1;
            }
        }
        peaks
    }
}

fn trapezoid<T: Scalar>(ys: &[T], step: T) -> T {
    let inner: T = ys.iter().copied().sum();
    (inner - (ys[0] + ys[ys.len() - 1]) / T::lit(2.0)) * step
}

/// Sample quantile with linear interpolation between order statistics.
fn quantile<T: Scalar>(sorted: &[T], q: f64) -> T {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = T::lit(pos - i as f64);
    if i + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[i] + frac * (sorted[i + 1] - sorted[i])
}

/// Rule-of-thumb bandwidth, floored at [`MIN_BANDWIDTH`].
pub fn auto_bandwidth<T: Scalar>(values: &[T]) -> Result<T> {
    let n = values.len();
    if n < 2 {
        return Err(Error::domain("bandwidth needs at least 2 values"));
    }
    let nf = T::from_count(n);
    let mean = values.iter().copied().sum::<T>() / nf;
    let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / (nf - T::one());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = var.sqrt().min(iqr / T::lit(1.34));
    let bw = T::lit(0.9) * spread * nf.powf(T::lit(-0.2));
    Ok(bw.max(T::lit(MIN_BANDWIDTH)))
}

/// Gaussian kernel density of `values` on [`DENSITY_GRID_POINTS`] points
/// spanning `[min − 3·bw, max + 3·bw]`.
pub fn density<T: Scalar>(values: &[T], bandwidth: Bandwidth<T>) -> Result<DensityEstimate<T>> {
    if values.len() < 2 {
        return Err(Error::domain(format!(
            "density needs at least 2 values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("density values must be finite"));
    }
    let bw = match bandwidth {
        Bandwidth::Auto => auto_bandwidth(values)?,
        Bandwidth::Fixed(b) if b.is_finite() && b > T::zero() => b,
        Bandwidth::Fixed(b) => {
            return Err(Error::domain(format!("bandwidth {b} must be positive")))
        }
    };
    let lo = values.iter().copied().fold(T::infinity(), T::min) - T::lit(3.0) * bw;
    let hi = values.iter().copied().fold(T::neg_infinity(), T::max) + T::lit(3.0) * bw;
    let step = (hi - lo) / T::from_count(DENSITY_GRID_POINTS - 1);
    let grid: Vec<T> = (0..DENSITY_GRID_POINTS)
        .map(|i| lo + step * T::from_count(i))
        .collect();
    let half = T::lit(0.5);
    let density = grid
        .iter()
        .map(|&x| {
            values
                .iter()
                .map(|&v| {
                    let z = (x - v) / bw;
                    (-half * z * z).exp()
                })
                .sum::<T>()
        })
        .collect();
    DensityEstimate::new(grid, density, bw)
}

/// Bimodality of a density: zero with fewer than two local maxima,
/// otherwise `(h2 − v) / max(v, 1e-6·h2)` where `h2` is the lower of the two
/// highest peaks and `v` the minimum density between them.
///
/// Values below 1 mean strongly overlapping peaks; above 1, well separated.
pub fn valley_depth<T: Scalar>(d: &DensityEstimate<T>) -> T {
    match two_highest_peaks(d) {
        None => T::zero(),
        Some((a, b)) => {
            let dens = d.density();
            let h2 = dens[a].min(dens[b]);
            let v = dens[a..=b].iter().copied().fold(T::infinity(), T::min);
            ((h2 - v) / v.max(T::lit(1e-6) * h2)).max(T::zero())
        }
    }
}

/// Locations of the two highest peaks in ascending φ, or the single peak.
pub fn main_peaks<T: Scalar>(d: &DensityEstimate<T>) -> Vec<T> {
    match two_highest_peaks(d) {
        Some((a, b)) => vec![d.grid()[a], d.grid()[b]],
        None => d
            .peak_indices()
            .first()
            .map(|&i| vec![d.grid()[i]])
            .unwrap_or_default(),
    }
}

fn two_highest_peaks<T: Scalar>(d: &DensityEstimate<T>) -> Option<(usize, usize)> {
    let mut peaks = d.peak_indices();
    if peaks.len() < 2 {
        return None;
    }
    let dens = d.density();
    peaks.sort_by(|&i, &j| {
        dens[j]
            .partial_cmp(&dens[i])
            .expect("finite density")
            .then(i.cmp(&j))
    });
    let (a, b) = (peaks[0], peaks[1]);
    Some((a.min(b), a.max(b)))
}
