//! Initial stimulus blocks built as convex combinations of three basis
//! contours.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::contour::{uniform_grid, Contour, ContourEnsemble, Window, DEFAULT_GRID_POINTS};
use crate::error::{Error, Result};
use crate::rng::{stream, TAG_STIMULUS};
use crate::scalar::Scalar;

pub const DEFAULT_BLOCK_SIZE: usize = 100;

/// Three basis contours sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet<T> {
    basis: [Contour<T>; 3],
}

impl<T: Scalar> BasisSet<T> {
    pub fn new(basis: [Contour<T>; 3]) -> Result<Self> {
        let grid = basis[0].grid();
        if let Some(bad) = basis.iter().find(|c| c.grid() != grid) {
            return Err(Error::InvalidContour {
                utterance_id: bad.utterance_id().to_string(),
                message: "basis contours must share one grid".into(),
            });
        }
        Ok(BasisSet { basis })
    }

    pub fn from_vec(contours: Vec<Contour<T>>) -> Result<Self> {
        let n = contours.len();
        let basis: [Contour<T>; 3] = contours
            .try_into()
            .map_err(|_| Error::domain(format!("basis needs exactly 3 contours, got {n}")))?;
        BasisSet::new(basis)
    }

    /// Synthetic default: high-plateau fall, mid fall and low fall on the
    /// default 101-point grid, flat across the analysis window at +6, −0.5
    /// and −8 st.
    pub fn synthetic_default() -> Self {
        let grid = uniform_grid::<T>(DEFAULT_GRID_POINTS).expect("default grid");
        let shape = |id: &str, knots: [(f64, f64); 4]| {
            let knots: Vec<(T, T)> = knots.iter().map(|&(t, p)| (T::lit(t), T::lit(p))).collect();
            Contour::from_knots(id, grid.clone(), &knots).expect("default basis")
        };
        BasisSet {
            basis: [
                shape(
                    "high_plateau_fall",
                    [(0.0, 3.0), (0.2, 6.0), (0.7, 6.0), (1.0, -2.0)],
                ),
                shape(
                    "mid_fall",
                    [(0.0, 1.0), (0.2, -0.5), (0.7, -0.5), (1.0, -4.0)],
                ),
                shape(
                    "low_fall",
                    [(0.0, -5.0), (0.2, -8.0), (0.7, -8.0), (1.0, -10.0)],
                ),
            ],
        }
    }

    pub fn contours(&self) -> &[Contour<T>; 3] {
        &self.basis
    }

    pub fn grid(&self) -> &[T] {
        self.basis[0].grid()
    }

    /// Grid points in `window` where all three basis values coincide, so the
    /// span collapses to a point there.
    pub fn degenerate_points(&self, window: &Window<T>) -> Vec<T> {
        let [a, b, c] = &self.basis;
        self.grid()
            .iter()
            .enumerate()
            .filter(|(_, t)| window.contains(**t))
            .filter(|&(i, _)| a.values()[i] == b.values()[i] && b.values()[i] == c.values()[i])
            .map(|(_, t)| *t)
            .collect()
    }

    /// Basis ordered by mean φ over the whole contour, lowest first.
    fn ordered_low_to_high(&self) -> [usize; 3] {
        let means: Vec<T> = self
            .basis
            .iter()
            .map(|c| c.values().iter().copied().sum::<T>() / T::from_count(c.values().len()))
            .collect();
        let mut idx = [0, 1, 2];
        idx.sort_by(|&i, &j| means[i].partial_cmp(&means[j]).expect("finite means"));
        idx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    /// Uniform on the 2-simplex (symmetric Dirichlet, unit concentration).
    #[default]
    UniformSimplex,
    /// A single uniform draw walks low → mid → high along the simplex edges.
    SpanPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightScheme {
    pub mode: WeightMode,
    pub seed: u64,
}

impl WeightScheme {
    /// Weights for stimulus `index`, in the basis order given to `gen_stimuli`.
    fn weights<T: Scalar>(&self, index: usize, order: [usize; 3]) -> [T; 3] {
        let mut rng = stream(self.seed, TAG_STIMULUS, &[index as u64]);
        match self.mode {
            WeightMode::UniformSimplex => {
                // Normalized unit exponentials are Dirichlet(1, 1, 1).
                let e: [f64; 3] = std::array::from_fn(|_| {
                    let u: f64 = rng.random();
                    -(1.0 - u).ln()
                });
                let total: f64 = e.iter().sum();
                e.map(|x| T::lit(x / total))
            }
            WeightMode::SpanPath => {
                let u: f64 = rng.random();
                let (lo, mid, hi) = if u <= 0.5 {
                    (1.0 - 2.0 * u, 2.0 * u, 0.0)
                } else {
                    (0.0, 2.0 - 2.0 * u, 2.0 * u - 1.0)
                };
                let mut w = [T::zero(); 3];
                w[order[0]] = T::lit(lo);
                w[order[1]] = T::lit(mid);
                w[order[2]] = T::lit(hi);
                w
            }
        }
    }
}

/// Pointwise convex combination of the basis with the given weights.
pub fn combine<T: Scalar>(
    basis: &BasisSet<T>,
    weights: [T; 3],
    utterance_id: String,
) -> Result<Contour<T>> {
    let [a, b, c] = basis.contours();
    let values = (0..a.values().len())
        .map(|i| {
            let (x, y, z) = (a.values()[i], b.values()[i], c.values()[i]);
            let v = weights[0] * x + weights[1] * y + weights[2] * z;
            // Rounding must not leave the hull.
            v.max(x.min(y).min(z)).min(x.max(y).max(z))
        })
        .collect();
    Contour::new(utterance_id, basis.grid().to_vec(), values)
}

/// Generates the iteration-0 block of `n` stimuli. Stimulus `i` gets its own
/// random stream keyed by `(scheme.seed, i)`.
pub fn gen_stimuli<T: Scalar>(
    basis: &BasisSet<T>,
    n: usize,
    scheme: WeightScheme,
) -> Result<ContourEnsemble<T>> {
    if n == 0 {
        return Err(Error::domain("stimulus count must be at least 1"));
    }
    let degenerate = basis.degenerate_points(&Window::analysis_default());
    if !degenerate.is_empty() {
        log::warn!(
            "basis contours coincide at {} analysis-window points; stimuli will not vary there",
            degenerate.len()
        );
    }
    let order = basis.ordered_low_to_high();
    let contours = (0..n)
        .map(|i| combine(basis, scheme.weights(i, order), format!("s{i:04}")))
        .collect::<Result<Vec<_>>>()?;
    ContourEnsemble::new(0, contours)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn constant_basis(levels: [f64; 3]) -> BasisSet<f64> {
        let grid = uniform_grid::<f64>(101).unwrap();
        BasisSet::from_vec(
            levels
                .iter()
                .enumerate()
                .map(|(i, &l)| Contour::constant(format!("b{i}"), grid.clone(), l).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn simplex_vertex_copies_basis() {
        let basis = BasisSet::<f64>::synthetic_default();
        let c = combine(&basis, [1.0, 0.0, 0.0], "x".into()).unwrap();
        assert_eq!(c.values(), basis.contours()[0].values());
    }

    #[test]
    fn centroid_is_mean() {
        let basis = constant_basis([3.0, 0.0, -4.0]);
        let third = 1.0 / 3.0;
        let c = combine(&basis, [third, third, third], "x".into()).unwrap();
        for v in c.values() {
            assert_abs_diff_eq!(*v, -1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn weights_lie_on_simplex() {
        for mode in [WeightMode::UniformSimplex, WeightMode::SpanPath] {
            let scheme = WeightScheme { mode, seed: 11 };
            for i in 0..200 {
                let w: [f64; 3] = scheme.weights(i, [2, 0, 1]);
                assert!(w.iter().all(|&x| x >= 0.0));
                assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn zero_count_is_an_error() {
        let basis = BasisSet::<f64>::synthetic_default();
        let scheme = WeightScheme {
            mode: WeightMode::UniformSimplex,
            seed: 1,
        };
        assert!(gen_stimuli(&basis, 0, scheme).is_err());
    }

    #[test]
    fn degenerate_basis_only_warns() {
        let basis = constant_basis([1.0, 1.0, 1.0]);
        assert_eq!(
            basis.degenerate_points(&Window::analysis_default()).len(),
            31
        );
        let scheme = WeightScheme {
            mode: WeightMode::SpanPath,
            seed: 3,
        };
        let ens = gen_stimuli(&basis, 5, scheme).unwrap();
        assert_eq!(ens.len(), 5);
        assert_eq!(ens.iteration(), 0);
    }

    #[test]
    fn basis_count_checked() {
        let grid = uniform_grid::<f64>(11).unwrap();
        let one = vec![Contour::constant("a", grid, 0.0).unwrap()];
        assert!(BasisSet::from_vec(one).is_err());
    }
}
