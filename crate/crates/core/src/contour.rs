//! Pitch contours in normalized time (τ ∈ [0, 1]) and semitones (φ)
//! relative to a speaker reference frequency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Number of points on the default τ grid.
pub const DEFAULT_GRID_POINTS: usize = 101;

/// Closed τ interval used to summarize a contour, e.g. `[0.3, 0.6]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> Window<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::domain("window bounds must be finite"));
        }
        if lo > hi {
            return Err(Error::domain(format!("inverted window {lo}:{hi}")));
        }
        if lo < T::zero() || hi > T::one() {
            return Err(Error::domain(format!("window {lo}:{hi} not within [0, 1]")));
        }
        Ok(Window { lo, hi })
    }

    /// The relatively flat mid-utterance region, τ ∈ [0.3, 0.6].
    pub fn analysis_default() -> Self {
        Window {
            lo: T::lit(0.3),
            hi: T::lit(0.6),
        }
    }

    #[inline]
    pub fn contains(&self, tau: T) -> bool {
        tau >= self.lo && tau <= self.hi
    }
}

/// `n` equally spaced points from 0 to 1 inclusive.
pub fn uniform_grid<T: Scalar>(n: usize) -> Result<Vec<T>> {
    if n < 2 {
        return Err(Error::domain("grid needs at least 2 points"));
    }
    let last = T::from_count(n - 1);
    Ok((0..n).map(|i| T::from_count(i) / last).collect())
}

/// Checks the τ-grid invariants shared by every contour.
pub fn validate_grid<T: Scalar>(grid: &[T]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::domain("grid needs at least 2 points"));
    }
    if grid[0] != T::zero() || grid[grid.len() - 1] != T::one() {
        return Err(Error::domain("grid must start at 0 and end at 1"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::domain("grid must be strictly increasing"));
    }
    Ok(())
}

/// 12·log2(f / f_ref).
pub fn hz_to_semitones<T: Scalar>(f: T, f_ref: T) -> Result<T> {
    if !(f.is_finite() && f > T::zero()) {
        return Err(Error::domain(format!(
            "frequency {f} must be finite and positive"
        )));
    }
    if !(f_ref.is_finite() && f_ref > T::zero()) {
        return Err(Error::domain(format!(
            "reference frequency {f_ref} must be finite and positive"
        )));
    }
    Ok(T::lit(12.0) * (f / f_ref).log2())
}

/// Inverse of [`hz_to_semitones`].
pub fn semitones_to_hz<T: Scalar>(phi: T, f_ref: T) -> T {
    f_ref * (phi / T::lit(12.0)).exp2()
}

/// One utterance's raw f0 track: `(time_s, f0_hz)` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTrack<T> {
    utterance_id: String,
    samples: Vec<(T, T)>,
}

impl<T: Scalar> RawTrack<T> {
    pub fn new(utterance_id: impl Into<String>, samples: Vec<(T, T)>) -> Result<Self> {
        let utterance_id = utterance_id.into();
        let invalid = |message: &str| Error::InvalidContour {
            utterance_id: utterance_id.clone(),
            message: message.to_string(),
        };
        if samples.len() < 2 {
            return Err(invalid("track needs at least 2 samples"));
        }
        if samples
            .iter()
            .any(|&(t, f)| !t.is_finite() || !f.is_finite() || f <= T::zero())
        {
            return Err(invalid("samples must be finite with f0 > 0"));
        }
        if samples.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(invalid("times must be strictly increasing"));
        }
        Ok(RawTrack {
            utterance_id,
            samples,
        })
    }

    pub fn utterance_id(&self) -> &str {
        &self.utterance_id
    }

    pub fn samples(&self) -> &[(T, T)] {
        &self.samples
    }
}

/// Geometric mean of the track's f0 samples, so that the reference maps to
/// φ = 0 on average in semitone space.
pub fn speaker_reference<T: Scalar>(track: &RawTrack<T>) -> Result<T> {
    let n = track.samples.len();
    if n == 0 {
        return Err(Error::domain("empty track"));
    }
    let mean_log = track.samples.iter().map(|&(_, f)| f.ln()).sum::<T>() / T::from_count(n);
    Ok(mean_log.exp())
}

/// Piecewise-linear interpolation of `(xs, ys)` at `x`, clamped to the end
/// values outside the knot range. `xs` must be strictly increasing.
pub(crate) fn interp<T: Scalar>(xs: &[T], ys: &[T], x: T) -> T {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let j = xs.partition_point(|&k| k <= x);
    let (x0, x1) = (xs[j - 1], xs[j]);
    let (y0, y1) = (ys[j - 1], ys[j]);
    if x == x0 {
        return y0;
    }
    let t = (x - x0) / (x1 - x0);
    y0 + t * (y1 - y0)
}

/// Maps a raw track onto `grid`: time rescaled so the first sample is τ = 0
/// and the last is τ = 1, f0 converted to semitones re `f_ref`, then
/// linearly interpolated in semitone space.
pub fn normalize<T: Scalar>(track: &RawTrack<T>, f_ref: T, grid: &[T]) -> Result<Contour<T>> {
    validate_grid(grid)?;
    let samples = &track.samples;
    if samples.len() < 2 {
        return Err(Error::domain("track needs at least 2 samples"));
    }
    let t0 = samples[0].0;
    let span = samples[samples.len() - 1].0 - t0;
    let taus: Vec<T> = samples.iter().map(|&(t, _)| (t - t0) / span).collect();
    let phis = samples
        .iter()
        .map(|&(_, f)| hz_to_semitones(f, f_ref))
        .collect::<Result<Vec<T>>>()?;
    let values = grid.iter().map(|&tau| interp(&taus, &phis, tau)).collect();
    Contour::new(track.utterance_id.clone(), grid.to_vec(), values)
}

/// One utterance's φ values on a normalized τ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour<T> {
    utterance_id: String,
    grid: Vec<T>,
    values: Vec<T>,
}

impl<T: Scalar> Contour<T> {
    pub fn new(utterance_id: impl Into<String>, grid: Vec<T>, values: Vec<T>) -> Result<Self> {
        let utterance_id = utterance_id.into();
        let invalid = |message: String| Error::InvalidContour {
            utterance_id: utterance_id.clone(),
            message,
        };
        validate_grid(&grid).map_err(|e| invalid(e.to_string()))?;
        if grid.len() != values.len() {
            return Err(invalid(format!(
                "grid has {} points but {} values",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite phi value".into()));
        }
        Ok(Contour {
            utterance_id,
            grid,
            values,
        })
    }

    /// Constant contour at `phi` on `grid`.
    pub fn constant(utterance_id: impl Into<String>, grid: Vec<T>, phi: T) -> Result<Self> {
        let values = vec![phi; grid.len()];
        Contour::new(utterance_id, grid, values)
    }

    /// Contour defined by piecewise-linear knots `(τ, φ)`, sampled on `grid`.
    pub fn from_knots(
        utterance_id: impl Into<String>,
        grid: Vec<T>,
        knots: &[(T, T)],
    ) -> Result<Self> {
        let utterance_id = utterance_id.into();
        if knots.is_empty() || knots.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::InvalidContour {
                utterance_id,
                message: "knots must be non-empty with strictly increasing tau".into(),
            });
        }
        let xs: Vec<T> = knots.iter().map(|k| k.0).collect();
        let ys: Vec<T> = knots.iter().map(|k| k.1).collect();
        let values = grid.iter().map(|&t| interp(&xs, &ys, t)).collect();
        Contour::new(utterance_id, grid, values)
    }

    pub fn utterance_id(&self) -> &str {
        &self.utterance_id
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Same utterance and grid with new values. Length must match.
    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        Contour::new(self.utterance_id.clone(), self.grid.clone(), values)
    }

    /// Linear resample onto another grid.
    pub fn resample(&self, grid: &[T]) -> Result<Self> {
        validate_grid(grid)?;
        let values = grid
            .iter()
            .map(|&t| interp(&self.grid, &self.values, t))
            .collect();
        Contour::new(self.utterance_id.clone(), grid.to_vec(), values)
    }

    /// Values at grid points inside the closed window.
    pub fn window_slice(&self, window: &Window<T>) -> impl Iterator<Item = T> + '_ {
        let w = *window;
        self.grid
            .iter()
            .zip(&self.values)
            .filter(move |(t, _)| w.contains(**t))
            .map(|(_, v)| *v)
    }

    /// Mean φ over grid points inside the window.
    pub fn window_mean(&self, window: &Window<T>) -> Result<T> {
        let (sum, n) = self
            .window_slice(window)
            .fold((T::zero(), 0usize), |(s, n), v| (s + v, n + 1));
        if n == 0 {
            return Err(Error::domain(format!(
                "window {}:{} contains no grid points",
                window.lo, window.hi
            )));
        }
        Ok(sum / T::from_count(n))
    }
}

/// A block of contours on one shared grid at one chain iteration
/// (0 is the initial stimulus block).
#[derive(Debug, Clone, PartialEq)]
pub struct ContourEnsemble<T> {
    iteration: usize,
    contours: Vec<Contour<T>>,
}

impl<T: Scalar> ContourEnsemble<T> {
    pub fn new(iteration: usize, contours: Vec<Contour<T>>) -> Result<Self> {
        if let Some(first) = contours.first() {
            if let Some(bad) = contours.iter().find(|c| c.grid != first.grid) {
                return Err(Error::InvalidContour {
                    utterance_id: bad.utterance_id.clone(),
                    message: "grid differs from the rest of the ensemble".into(),
                });
            }
        }
        Ok(ContourEnsemble {
            iteration,
            contours,
        })
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn contours(&self) -> &[Contour<T>] {
        &self.contours
    }

    pub fn len(&self) -> usize {
        self.contours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contours.is_empty()
    }

    pub fn grid(&self) -> Option<&[T]> {
        self.contours.first().map(|c| c.grid())
    }

    pub fn with_iteration(mut self, iteration: usize) -> Self {
        self.iteration = iteration;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn semitone_conversion() {
        assert_eq!(hz_to_semitones(200.0, 200.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            hz_to_semitones(400.0, 200.0).unwrap(),
            12.0,
            epsilon = 1e-12
        );
        // 12·log2(1.1) = 1.650042284999218...
        assert_abs_diff_eq!(
            hz_to_semitones(220.0, 200.0).unwrap(),
            1.650042285,
            epsilon = 1e-6
        );
        let st: f32 = hz_to_semitones(400.0f32, 200.0).unwrap();
        assert!((st - 12.0).abs() < 1e-5);
    }

    #[test]
    fn semitone_domain_errors() {
        assert!(hz_to_semitones(0.0, 200.0).is_err());
        assert!(hz_to_semitones(-5.0, 200.0).is_err());
        assert!(hz_to_semitones(200.0, 0.0).is_err());
        assert!(hz_to_semitones(f64::NAN, 200.0).is_err());
        assert!(hz_to_semitones(f64::INFINITY, 200.0).is_err());
    }

    #[test]
    fn reference_is_geometric_mean() {
        let t = |fs: &[f64]| {
            RawTrack::new(
                "u",
                fs.iter().enumerate().map(|(i, &f)| (i as f64, f)).collect(),
            )
            .unwrap()
        };
        assert_abs_diff_eq!(
            speaker_reference(&t(&[200.0, 200.0, 200.0])).unwrap(),
            200.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            speaker_reference(&t(&[100.0, 400.0])).unwrap(),
            200.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            speaker_reference(&t(&[100.0, 200.0, 400.0])).unwrap(),
            200.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn raw_track_validation() {
        assert!(RawTrack::new("u", vec![(0.0, 200.0)]).is_err());
        assert!(RawTrack::new("u", vec![(0.0, 200.0), (0.0, 210.0)]).is_err());
        assert!(RawTrack::new("u", vec![(0.0, 200.0), (1.0, -1.0)]).is_err());
    }

    #[test]
    fn normalize_two_point_track() {
        let track = RawTrack::new("u", vec![(0.0, 200.0), (1.0, 400.0)]).unwrap();
        let c = normalize(&track, 200.0, &[0.0, 0.5, 1.0]).unwrap();
        assert_abs_diff_eq!(c.values()[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.values()[1], 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.values()[2], 12.0, epsilon = 1e-12);
    }

    #[test]
    fn normalize_rescales_time() {
        let track = RawTrack::new("u", vec![(2.0, 200.0), (2.5, 200.0), (4.0, 200.0)]).unwrap();
        let grid = uniform_grid::<f64>(DEFAULT_GRID_POINTS).unwrap();
        let c = normalize(&track, 200.0, &grid).unwrap();
        assert!(c.values().iter().all(|&v| v == 0.0));
        assert_eq!(c.grid().len(), 101);
    }

    #[test]
    fn window_mean_of_ramp() {
        let grid = uniform_grid::<f64>(101).unwrap();
        let c = Contour::new("ramp", grid.clone(), grid.clone()).unwrap();
        let w = Window::new(0.3, 0.6).unwrap();
        assert_abs_diff_eq!(c.window_mean(&w).unwrap(), 0.45, epsilon = 1e-12);
        assert_eq!(c.window_slice(&w).count(), 31);
        let empty = Window::new(0.301, 0.309).unwrap();
        assert!(c.window_mean(&empty).is_err());
    }

    #[test]
    fn window_validation() {
        assert!(Window::new(0.6, 0.3).is_err());
        assert!(Window::new(-0.1, 0.3).is_err());
        assert!(Window::new(0.3, 1.2).is_err());
        assert!(Window::new(0.5, 0.5).is_ok());
    }

    #[test]
    fn contour_validation() {
        assert!(Contour::new("u", vec![0.0, 1.0], vec![0.0]).is_err());
        assert!(Contour::new("u", vec![0.1, 1.0], vec![0.0, 0.0]).is_err());
        assert!(Contour::new("u", vec![0.0, 0.5, 0.5, 1.0], vec![0.0; 4]).is_err());
        assert!(Contour::new("u", vec![0.0, 1.0], vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn ensemble_rejects_mixed_grids() {
        let a = Contour::constant("a", vec![0.0, 1.0], 1.0).unwrap();
        let b = Contour::constant("b", vec![0.0, 0.5, 1.0], 1.0).unwrap();
        match ContourEnsemble::new(0, vec![a, b]) {
            Err(Error::InvalidContour { utterance_id, .. }) => assert_eq!(utterance_id, "b"),
            other => panic!("expected grid mismatch, got {other:?}"),
        }
    }
}
