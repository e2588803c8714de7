use serde::Serialize;

use super::transfer::{contraction_rate_with, estimate_transfer, DEFAULT_BINS};
use super::valley_trajectory;
use crate::contour::{ContourEnsemble, Window};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Thresholds of the three-way decision rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnoseConfig {
    /// Depth at iteration 1 above which the run is called discrete.
    pub discrete_depth: f64,
    /// Depth the continuous hypothesis may never exceed.
    pub continuous_depth: f64,
    /// Contraction rate above which attraction is negligible.
    pub continuous_rho: f64,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        DiagnoseConfig {
            discrete_depth: 1.0,
            continuous_depth: 0.2,
            continuous_rho: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Bimodal after a single pass: a discrete memory store.
    Discrete,
    /// No bimodality and no contraction: a continuous memory store.
    Continuous,
    /// Bimodality growing over iterations with moderate contraction.
    AttractorGradual,
    /// None of the three signatures matched.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisVerdict<T> {
    pub verdict: Verdict,
    pub depths: Vec<T>,
    /// Least-squares slope of depth against iteration.
    pub depth_trend: T,
    pub contraction_rate: T,
    pub config: DiagnoseConfig,
}

pub fn diagnose<T: Scalar>(
    ensembles: &[ContourEnsemble<T>],
    window: &Window<T>,
) -> Result<HypothesisVerdict<T>> {
    diagnose_with(ensembles, window, DiagnoseConfig::default())
}

pub fn diagnose_with<T: Scalar>(
    ensembles: &[ContourEnsemble<T>],
    window: &Window<T>,
    config: DiagnoseConfig,
) -> Result<HypothesisVerdict<T>> {
    if ensembles.len() < 3 {
        return Err(Error::domain("diagnosis needs at least 3 iterations"));
    }
    let depths = valley_trajectory(ensembles, window)?.depths();
    let fit = estimate_transfer(ensembles, window, DEFAULT_BINS)?.fitted;
    let rho = contraction_rate_with(ensembles, window, &fit)?;
    Ok(decide(depths, rho, config))
}

pub(crate) fn decide<T: Scalar>(
    depths: Vec<T>,
    rho: T,
    config: DiagnoseConfig,
) -> HypothesisVerdict<T> {
    let trend = slope(&depths);
    let rho_f = rho.as_f64();
    let max_depth = depths.iter().map(|d| d.as_f64()).fold(0.0, f64::max);
    let verdict = if depths.len() > 1 && depths[1].as_f64() > config.discrete_depth {
        Verdict::Discrete
    } else if max_depth <= config.continuous_depth && rho_f > config.continuous_rho {
        Verdict::Continuous
    } else if trend.as_f64() >= 0.0 && rho_f > 0.0 && rho_f < config.continuous_rho {
        Verdict::AttractorGradual
    } else {
        Verdict::Inconclusive
    };
    HypothesisVerdict {
        verdict,
        depths,
        depth_trend: trend,
        contraction_rate: rho,
        config,
    }
}

fn slope<T: Scalar>(ys: &[T]) -> T {
    let n = ys.len();
    if n < 2 {
        return T::zero();
    }
    let xm = T::from_count(n - 1) / T::lit(2.0);
    let ym = ys.iter().copied().sum::<T>() / T::from_count(n);
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (i, &y) in ys.iter().enumerate() {
        let dx = T::from_count(i) - xm;
        sxy = sxy + dx * (y - ym);
        sxx = sxx + dx * dx;
    }
    sxy / sxx
}
