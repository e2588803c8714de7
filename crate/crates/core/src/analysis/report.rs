use serde::Serialize;

use super::diagnose::{decide, DiagnoseConfig, HypothesisVerdict};
use super::transfer::{contraction_rate_with, estimate_transfer, TransferEstimate};
use super::{check_chain, valley_trajectory, ValleyReport};
use crate::contour::{ContourEnsemble, Window};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Everything `analyze` reports about one chain run, serialized as a single
/// JSON document. Field order is fixed, so identical inputs give identical
/// bytes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport<T> {
    pub window: Window<T>,
    pub iterations: usize,
    pub ensemble_size: usize,
    pub valley: ValleyReport<T>,
    pub transfer: TransferEstimate<T>,
    pub contraction_rate: T,
    pub verdict: HypothesisVerdict<T>,
}

impl<T: Scalar> AnalysisReport<T> {
    pub fn build(
        ensembles: &[ContourEnsemble<T>],
        window: &Window<T>,
        n_bins: usize,
        config: DiagnoseConfig,
    ) -> Result<Self> {
        check_chain(ensembles)?;
        if ensembles.len() < 3 {
            return Err(Error::domain(
                "analysis needs at least 3 iterations (stimuli plus two responses)",
            ));
        }
        let valley = valley_trajectory(ensembles, window)?;
        let transfer = estimate_transfer(ensembles, window, n_bins)?;
        let rho = contraction_rate_with(ensembles, window, &transfer.fitted)?;
        let verdict = decide(valley.depths(), rho, config);
        Ok(AnalysisReport {
            window: *window,
            iterations: ensembles.len() - 1,
            ensemble_size: ensembles[0].len(),
            valley,
            transfer,
            contraction_rate: rho,
            verdict,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
