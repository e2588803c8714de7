//! Reduction of chain runs to bimodality, transfer-map and contraction
//! evidence.

mod density;
mod diagnose;
mod distinctions;
mod report;
mod transfer;

pub use density::{
    auto_bandwidth, density, main_peaks, valley_depth, Bandwidth, DensityEstimate,
    DENSITY_GRID_POINTS, MIN_BANDWIDTH, VALLEY_DEPTH_DEFINITION,
};
pub use diagnose::{diagnose, diagnose_with, DiagnoseConfig, HypothesisVerdict, Verdict};
pub use distinctions::{
    count_preserved_distinctions, distinction_report, DistinctionReport, DistinctionSetup,
};
pub use report::AnalysisReport;
pub use transfer::{
    bin_pairs, contraction_rate, contraction_rate_with, estimate_transfer, fit_compressive,
    transition_pairs, CompressiveFit, TransferBin, TransferEstimate, DEFAULT_BINS, MIN_PAIRS,
};

use serde::Serialize;

use crate::contour::{ContourEnsemble, Window};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Mean φ over the window for every contour, in ensemble order.
pub fn window_values<T: Scalar>(
    ensemble: &ContourEnsemble<T>,
    window: &Window<T>,
) -> Result<Vec<(String, T)>> {
    ensemble
        .contours()
        .iter()
        .map(|c| Ok((c.utterance_id().to_string(), c.window_mean(window)?)))
        .collect()
}

/// Checks that ensembles form one chain: iterations 0, 1, 2, ... with the
/// same utterances in the same order.
pub(crate) fn check_chain<T: Scalar>(ensembles: &[ContourEnsemble<T>]) -> Result<()> {
    let Some(first) = ensembles.first() else {
        return Err(Error::domain("no ensembles"));
    };
    for (i, e) in ensembles.iter().enumerate() {
        if e.iteration() != i {
            return Err(Error::domain(format!(
                "ensemble {i} is labelled iteration {}",
                e.iteration()
            )));
        }
        if e.len() != first.len() {
            return Err(Error::domain(format!(
                "iteration {i} has {} contours, iteration 0 has {}",
                e.len(),
                first.len()
            )));
        }
        for (a, b) in first.contours().iter().zip(e.contours()) {
            if a.utterance_id() != b.utterance_id() {
                return Err(Error::InvalidContour {
                    utterance_id: b.utterance_id().to_string(),
                    message: format!("iteration {i} is out of step with iteration 0"),
                });
            }
        }
    }
    Ok(())
}

/// Window-mean trajectory per utterance: `out[u][i]` is utterance `u` at
/// iteration `i`.
pub(crate) fn trajectories<T: Scalar>(
    ensembles: &[ContourEnsemble<T>],
    window: &Window<T>,
) -> Result<Vec<Vec<T>>> {
    let per_iter = ensembles
        .iter()
        .map(|e| window_values(e, window))
        .collect::<Result<Vec<_>>>()?;
    let n = per_iter.first().map_or(0, |v| v.len());
    Ok((0..n)
        .map(|u| per_iter.iter().map(|it| it[u].1).collect())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValleyPoint<T> {
    pub iteration: usize,
    pub depth: T,
    pub peak_locations: Vec<T>,
    pub bandwidth: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValleyReport<T> {
    pub definition: &'static str,
    pub per_iteration: Vec<ValleyPoint<T>>,
}

impl<T: Scalar> ValleyReport<T> {
    pub fn depths(&self) -> Vec<T> {
        self.per_iteration.iter().map(|p| p.depth).collect()
    }
}

/// Window values → density → valley depth, for every iteration.
pub fn valley_trajectory<T: Scalar>(
    ensembles: &[ContourEnsemble<T>],
    window: &Window<T>,
) -> Result<ValleyReport<T>> {
    check_chain(ensembles)?;
    let per_iteration = ensembles
        .iter()
        .map(|e| {
            let values: Vec<T> = window_values(e, window)?
                .into_iter()
                .map(|(_, v)| v)
                .collect();
            let d = density(&values, Bandwidth::Auto)?;
            Ok(ValleyPoint {
                iteration: e.iteration(),
                depth: valley_depth(&d),
                peak_locations: main_peaks(&d),
                bandwidth: d.bandwidth(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ValleyReport {
        definition: VALLEY_DEPTH_DEFINITION,
        per_iteration,
    })
}
