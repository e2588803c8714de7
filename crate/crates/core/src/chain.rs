//! The mimicry loop: each response block becomes the next stimulus block.
//! Also hosts the noise-free inverter string.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::{Contour, ContourEnsemble, Window};
use crate::error::{Error, Result};
use crate::response_map::{Inverter, ResponseMap};
use crate::rng::{normal, stream, TAG_CHAIN};
use crate::scalar::Scalar;

pub const DEFAULT_ITERATIONS: usize = 4;

/// Production variation added after the map: a rigid per-utterance
/// transposition plus moving-average-smoothed white jitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationModel {
    pub transposition_sd: f64,
    /// Per-point sd before smoothing.
    pub jitter_sd: f64,
    pub smooth_halfwidth: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for VariationModel {
    fn default() -> Self {
        VariationModel {
            transposition_sd: 0.5,
            jitter_sd: 0.25,
            smooth_halfwidth: 5,
            seed: 0,
        }
    }
}

impl VariationModel {
    pub fn noiseless() -> Self {
        VariationModel {
            transposition_sd: 0.0,
            jitter_sd: 0.0,
            smooth_halfwidth: 0,
            seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Self = serde_json::from_str(text)?;
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |sd: f64| sd.is_finite() && sd >= 0.0;
        if !ok(self.transposition_sd) || !ok(self.jitter_sd) {
            return Err(Error::Spec(
                "noise sd values must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Draws one noise contour of length `n` from the stream for
    /// `(seed, counters)`.
    pub(crate) fn draw<T: Scalar>(
        &self,
        n: usize,
        seed: u64,
        tag: u64,
        counters: &[u64],
    ) -> Vec<T> {
        let mut rng = stream(seed, tag, counters);
        let shift = self.transposition_sd * normal(&mut rng);
        let white: Vec<f64> = (0..n).map(|_| self.jitter_sd * normal(&mut rng)).collect();
        let h = self.smooth_halfwidth;
        (0..n)
            .map(|i| {
                let lo = i.saturating_sub(h);
                let hi = (i + h).min(n - 1);
                let avg = white[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
                T::lit(shift + avg)
            })
            .collect()
    }
}

/// A completed chain: ensembles for iterations `0..=k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRun<T> {
    pub ensembles: Vec<ContourEnsemble<T>>,
    pub map: ResponseMap<T>,
    pub variation: VariationModel,
    pub master_seed: u64,
}

impl<T: Scalar> ChainRun<T> {
    pub fn iterations(&self) -> usize {
        self.ensembles.len().saturating_sub(1)
    }
}

/// One mimic: map the stimulus, then add production noise drawn from the
/// stream for `(seed, tag, counters)`.
pub(crate) fn respond<T: Scalar>(
    map: &ResponseMap<T>,
    variation: &VariationModel,
    window: &Window<T>,
    stimulus: &Contour<T>,
    seed: u64,
    tag: u64,
    counters: &[u64],
) -> Result<Contour<T>> {
    let mapped = map.apply_contour(stimulus, window)?;
    let noise: Vec<T> = variation.draw(mapped.values().len(), seed, tag, counters);
    mapped.with_values(
        mapped
            .values()
            .iter()
            .zip(&noise)
            .map(|(&v, &e)| v + e)
            .collect(),
    )
}

/// Runs `k` mimicry iterations starting from the stimulus block. The map is
/// applied with the default analysis window (used by utterance-level
/// attractor assignment).
pub fn run_chain<T: Scalar>(
    stimuli: &ContourEnsemble<T>,
    map: &ResponseMap<T>,
    variation: &VariationModel,
    k: usize,
    master_seed: u64,
) -> Result<ChainRun<T>> {
    run_chain_in_window(
        stimuli,
        map,
        variation,
        k,
        master_seed,
        &Window::analysis_default(),
    )
}

pub fn run_chain_in_window<T: Scalar>(
    stimuli: &ContourEnsemble<T>,
    map: &ResponseMap<T>,
    variation: &VariationModel,
    k: usize,
    master_seed: u64,
    window: &Window<T>,
) -> Result<ChainRun<T>> {
    if k == 0 {
        return Err(Error::domain("a chain needs at least one iteration"));
    }
    if stimuli.iteration() != 0 {
        return Err(Error::domain(format!(
            "stimuli must be iteration 0, got {}",
            stimuli.iteration()
        )));
    }
    if !map.is_semitone_domain() {
        return Err(Error::domain("chains need a semitone-domain map"));
    }
    map.validate()?;
    variation.validate()?;

    let mut ensembles = Vec::with_capacity(k + 1);
    ensembles.push(stimuli.clone());
    for it in 1..=k {
        let prev = &ensembles[it - 1];
        let responses = prev
            .contours()
            .par_iter()
            .enumerate()
            .map(|(u, c)| {
                respond(
                    map,
                    variation,
                    window,
                    c,
                    master_seed,
                    TAG_CHAIN,
                    &[it as u64, u as u64],
                )
            })
            .collect::<Result<Vec<_>>>()?;
        ensembles.push(ContourEnsemble::new(it, responses)?);
    }
    Ok(ChainRun {
        ensembles,
        map: map.clone(),
        variation: *variation,
        master_seed,
    })
}

/// Voltages along a string of `stages` inverters, input included.
pub fn run_inverter_string<T: Scalar>(
    v_in: T,
    stages: usize,
    inverter: &Inverter<T>,
) -> Result<Vec<T>> {
    if stages == 0 {
        return Err(Error::domain("an inverter string needs at least one stage"));
    }
    inverter.validate()?;
    let mut out = Vec::with_capacity(stages + 1);
    out.push(v_in);
    for j in 0..stages {
        out.push(inverter.transfer(out[j]));
    }
    Ok(out)
}

/// Runs [`run_inverter_string`] for each input, preserving order.
pub fn sweep_inverter<T: Scalar>(
    inputs: &[T],
    stages: usize,
    inverter: &Inverter<T>,
) -> Result<Vec<Vec<T>>> {
    inputs
        .iter()
        .map(|&v| run_inverter_string(v, stages, inverter))
        .collect()
}

/// `lo, lo + step, ...` up to `hi` (inclusive within half a step).
pub fn sweep_points(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && step.is_finite() && step > 0.0 && lo <= hi) {
        return Err(Error::domain(format!("invalid sweep {lo}:{hi}:{step}")));
    }
    let n = ((hi - lo) / step + 0.5).floor() as usize + 1;
    Ok((0..n).map(|i| lo + step * i as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::uniform_grid;
    use crate::response_map::{Assignment, AttractorSpec};
    use crate::stimulus::{gen_stimuli, BasisSet, WeightMode, WeightScheme};
    use approx::assert_abs_diff_eq;

    fn stimuli(n: usize) -> ContourEnsemble<f64> {
        let scheme = WeightScheme {
            mode: WeightMode::UniformSimplex,
            seed: 5,
        };
        gen_stimuli(&BasisSet::synthetic_default(), n, scheme).unwrap()
    }

    #[test]
    fn identity_chain_without_noise_is_static() {
        let s = stimuli(20);
        let run = run_chain(
            &s,
            &ResponseMap::identity(),
            &VariationModel::noiseless(),
            3,
            1,
        )
        .unwrap();
        assert_eq!(run.ensembles.len(), 4);
        for (i, e) in run.ensembles.iter().enumerate() {
            assert_eq!(e.iteration(), i);
            assert_eq!(e.contours(), s.contours());
        }
    }

    #[test]
    fn quantizer_chain_settles_in_one_step() {
        let s = stimuli(30);
        let q = ResponseMap::quantizer(AttractorSpec::low_high(-3.0, 1.0).unwrap());
        let run = run_chain(&s, &q, &VariationModel::noiseless(), 4, 1).unwrap();
        let w = Window::analysis_default();
        for e in &run.ensembles[1..] {
            for c in e.contours() {
                assert!(c.window_slice(&w).all(|v| v == 1.0 || v == -3.0));
            }
            assert_eq!(e.contours(), run.ensembles[1].contours());
        }
    }

    #[test]
    fn compressive_window_means_decay_geometrically() {
        let grid = uniform_grid::<f64>(101).unwrap();
        let c = Contour::constant("u", grid, 3.0).unwrap();
        let s = ContourEnsemble::new(0, vec![c]).unwrap();
        let map = ResponseMap::compressive(
            AttractorSpec::low_high(-3.0, 1.0).unwrap(),
            0.3,
            Assignment::Utterance,
        )
        .unwrap();
        let run = run_chain(&s, &map, &VariationModel::noiseless(), 4, 9).unwrap();
        let w = Window::analysis_default();
        let means: Vec<f64> = run
            .ensembles
            .iter()
            .map(|e| e.contours()[0].window_mean(&w).unwrap())
            .collect();
        for (m, e) in means.iter().zip([3.0, 2.4, 1.98, 1.686, 1.4802]) {
            assert_abs_diff_eq!(*m, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn chain_preconditions() {
        let s = stimuli(3);
        let v = VariationModel::noiseless();
        assert!(run_chain(&s, &ResponseMap::identity(), &v, 0, 1).is_err());
        let later = s.clone().with_iteration(2);
        assert!(run_chain(&later, &ResponseMap::identity(), &v, 1, 1).is_err());
        let inv = ResponseMap::Inverter(Inverter::default());
        assert!(run_chain(&s, &inv, &v, 1, 1).is_err());
    }

    #[test]
    fn smoothing_keeps_noise_continuous() {
        let v = VariationModel {
            transposition_sd: 0.0,
            jitter_sd: 1.0,
            smooth_halfwidth: 5,
            seed: 0,
        };
        let smooth: Vec<f64> = v.draw(101, 3, TAG_CHAIN, &[1, 1]);
        let rough: Vec<f64> = VariationModel {
            smooth_halfwidth: 0,
            ..v
        }
        .draw(101, 3, TAG_CHAIN, &[1, 1]);
        let tv = |x: &[f64]| x.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>();
        assert!(tv(&smooth) < 0.5 * tv(&rough));
    }

    #[test]
    fn inverter_string_two_stages() {
        let v = run_inverter_string(0.2, 2, &Inverter::default()).unwrap();
        // Iterated closed form at 30 digits.
        assert_eq!(v[0], 0.2);
        assert_abs_diff_eq!(v[1], 3.092829392845759, epsilon = 1e-12);
        assert_abs_diff_eq!(v[2], 0.210994005875766, epsilon = 1e-12);
        assert!(run_inverter_string(0.2, 0, &Inverter::default()).is_err());
    }

    #[test]
    fn inverter_string_holds_unstable_point() {
        // Fixed point of g (and g∘g) for the default curve.
        let x_u = 1.687177397467499;
        let v = run_inverter_string(x_u, 2, &Inverter::default()).unwrap();
        assert_abs_diff_eq!(v[2], x_u, epsilon = 1e-9);
    }

    #[test]
    fn inverter_string_digitizes_rails() {
        for v_in in [0.0f64, 3.3] {
            let v = run_inverter_string(v_in, 8, &Inverter::default()).unwrap();
            let last = v[8];
            assert!(
                (last - 0.2).abs() < 0.05 || (last - 3.1).abs() < 0.05,
                "{v_in} -> {last}"
            );
        }
    }

    #[test]
    fn sweep_plumbing() {
        let inv = Inverter::<f64>::default();
        assert!(sweep_inverter(&[], 8, &inv).unwrap().is_empty());
        let one = sweep_inverter(&[1.0], 3, &inv).unwrap();
        assert_eq!(one[0], run_inverter_string(1.0, 3, &inv).unwrap());
        let pts = sweep_points(0.0, 3.3, 0.001).unwrap();
        assert_eq!(pts.len(), 3301);
        assert_abs_diff_eq!(*pts.last().unwrap(), 3.3, epsilon = 1e-9);
        assert!(sweep_points(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn noise_spec_json() {
        let v = VariationModel::from_json(
            r#"{"transposition_sd":0.5,"jitter_sd":0.25,"smooth_halfwidth":5,"seed":42}"#,
        )
        .unwrap();
        assert_eq!(v.seed, 42);
        assert!(VariationModel::from_json(
            r#"{"transposition_sd":0.5,"jitter_sd":0.25,"smooth_halfwidth":5,"x":1}"#
        )
        .is_err());
        assert!(VariationModel::from_json(
            r#"{"transposition_sd":-1,"jitter_sd":0.25,"smooth_halfwidth":5}"#
        )
        .is_err());
    }
}
