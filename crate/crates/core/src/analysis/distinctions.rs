//! How many input distinctions survive `k` noisy passes through a map.

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{respond, VariationModel};
use crate::contour::{uniform_grid, Contour, Window, DEFAULT_GRID_POINTS};
use crate::error::{Error, Result};
use crate::response_map::ResponseMap;
use crate::rng::TAG_DISTINCTIONS;
use crate::scalar::Scalar;

/// Inputs to [`distinction_report`]. Random streams are keyed by
/// `(variation.seed, level, trial, iteration)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistinctionSetup<T> {
    pub iterations: usize,
    pub n_levels: usize,
    pub span: (T, T),
    pub trials: usize,
    /// Required separation of level means, in pooled output sds.
    pub z: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistinctionReport<T> {
    pub inputs: Vec<T>,
    pub output_means: Vec<T>,
    pub pooled_sd: T,
    /// Indices into `inputs` of the levels kept by the greedy scan.
    pub preserved: Vec<usize>,
}

impl<T> DistinctionReport<T> {
    pub fn count(&self) -> usize {
        self.preserved.len()
    }
}

pub fn count_preserved_distinctions<T: Scalar>(
    map: &ResponseMap<T>,
    variation: &VariationModel,
    setup: &DistinctionSetup<T>,
) -> Result<usize> {
    Ok(distinction_report(map, variation, setup)?.count())
}

/// Places `n_levels` equally spaced constant contours across `span`, passes
/// each through `trials` independent chains of `iterations` mimics, and
/// counts the largest set of levels whose mean outputs are pairwise more
/// than `z` pooled sds apart (greedy scan in order of output mean).
pub fn distinction_report<T: Scalar>(
    map: &ResponseMap<T>,
    variation: &VariationModel,
    setup: &DistinctionSetup<T>,
) -> Result<DistinctionReport<T>> {
    let &DistinctionSetup {
        iterations,
        n_levels,
        span: (lo, hi),
        trials,
        z,
    } = setup;
    if n_levels < 2 {
        return Err(Error::domain("need at least 2 levels"));
    }
    if trials < 30 {
        return Err(Error::domain(format!(
            "need at least 30 trials per level, got {trials}"
        )));
    }
    if iterations == 0 {
        return Err(Error::domain("need at least one iteration"));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::domain(format!("degenerate span {lo}:{hi}")));
    }
    if !(z.is_finite() && z >= T::zero()) {
        return Err(Error::domain(
            "separation multiplier must be finite and non-negative",
        ));
    }
    if !map.is_semitone_domain() {
        return Err(Error::domain(
            "distinction counting needs a semitone-domain map",
        ));
    }
    map.validate()?;
    variation.validate()?;

    let grid = uniform_grid::<T>(DEFAULT_GRID_POINTS)?;
    let window = Window::analysis_default();
    let step = (hi - lo) / T::from_count(n_levels - 1);
    let inputs: Vec<T> = (0..n_levels)
        .map(|l| lo + step * T::from_count(l))
        .collect();

    let outputs: Vec<Vec<T>> = inputs
        .par_iter()
        .enumerate()
        .map(|(l, &level)| {
            (0..trials)
                .map(|t| {
                    let mut c = Contour::constant(format!("level{l}"), grid.clone(), level)?;
                    for it in 1..=iterations {
                        let counters = [l as u64, t as u64, it as u64];
                        c = respond(
                            map,
                            variation,
                            &window,
                            &c,
                            variation.seed,
                            TAG_DISTINCTIONS,
                            &counters,
                        )?;
                    }
                    c.window_mean(&window)
                })
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let m = T::from_count(trials);
    let output_means: Vec<T> = outputs
        .iter()
        .map(|o| o.iter().copied().sum::<T>() / m)
        .collect();
    let ss: T = outputs
        .iter()
        .zip(&output_means)
        .map(|(o, &mu)| o.iter().map(|&v| (v - mu) * (v - mu)).sum::<T>())
        .sum();
    let pooled_sd = (ss / T::from_count(n_levels * (trials - 1))).sqrt();

    let mut order: Vec<usize> = (0..n_levels).collect();
    order.sort_by(|&a, &b| {
        output_means[a]
            .partial_cmp(&output_means[b])
            .expect("finite means")
            .then(a.cmp(&b))
    });
    let gap = z * pooled_sd;
    let mut preserved = vec![order[0]];
    for &i in &order[1..] {
        let last = output_means[*preserved.last().expect("non-empty")];
        if output_means[i] - last > gap {
            preserved.push(i);
        }
    }
    Ok(DistinctionReport {
        inputs,
        output_means,
        pooled_sd,
        preserved,
    })
}
