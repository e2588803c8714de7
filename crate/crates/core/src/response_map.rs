//! Memory-model hypotheses as scalar input→output maps.
//!
//! Semitone-domain maps (transpose, quantizer, compressive attractor) act on
//! contours. The inverter transfer curve acts on volts and is only used by
//! the inverter-string demonstration.

use serde::{Deserialize, Serialize};

use crate::contour::{Contour, Window};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A labelled attractor level, e.g. `H` at +1 st.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Attractor<T> {
    pub label: String,
    pub phi: T,
}

/// Attractor levels, strictly ascending in φ with unique labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Attractor<T>>", into = "Vec<Attractor<T>>")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct AttractorSpec<T> {
    levels: Vec<Attractor<T>>,
}

impl<T: Scalar> AttractorSpec<T> {
    pub fn new(levels: Vec<Attractor<T>>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Spec(
                "at least one attractor level is required".into(),
            ));
        }
        if levels.iter().any(|a| !a.phi.is_finite()) {
            return Err(Error::Spec("attractor levels must be finite".into()));
        }
        if levels.windows(2).any(|w| !(w[0].phi < w[1].phi)) {
            return Err(Error::Spec(
                "attractor levels must be strictly ascending".into(),
            ));
        }
        for (i, a) in levels.iter().enumerate() {
            if levels[..i].iter().any(|b| b.label == a.label) {
                return Err(Error::Spec(format!(
                    "duplicate attractor label {:?}",
                    a.label
                )));
            }
        }
        Ok(AttractorSpec { levels })
    }

    /// The two-level `L`/`H` pair.
    pub fn low_high(lo: T, hi: T) -> Result<Self> {
        AttractorSpec::new(vec![
            Attractor {
                label: "L".into(),
                phi: lo,
            },
            Attractor {
                label: "H".into(),
                phi: hi,
            },
        ])
    }

    pub fn levels(&self) -> &[Attractor<T>] {
        &self.levels
    }

    pub fn phis(&self) -> impl Iterator<Item = T> + '_ {
        self.levels.iter().map(|a| a.phi)
    }

    /// Index of the unique nearest level by `dist`, or `None` on an exact tie
    /// between the two closest.
    fn nearest_by(&self, dist: impl Fn(T) -> T) -> Nearest {
        let mut best = 0;
        let mut best_d = dist(self.levels[0].phi);
        let mut tied = false;
        for (i, a) in self.levels.iter().enumerate().skip(1) {
            let d = dist(a.phi);
            if d < best_d {
                best = i;
                best_d = d;
                tied = false;
            } else if d == best_d {
                // Levels ascend, so the later index is the higher one.
                best = i;
                tied = true;
            }
        }
        if tied {
            Nearest::Tie { higher: best }
        } else {
            Nearest::Unique(best)
        }
    }

    fn nearest(&self, x: T) -> Nearest {
        self.nearest_by(|a| (x - a).abs())
    }
}

impl<T: Scalar> TryFrom<Vec<Attractor<T>>> for AttractorSpec<T> {
    type Error = Error;

    fn try_from(levels: Vec<Attractor<T>>) -> Result<Self> {
        AttractorSpec::new(levels)
    }
}

impl<T> From<AttractorSpec<T>> for Vec<Attractor<T>> {
    fn from(spec: AttractorSpec<T>) -> Self {
        spec.levels
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Nearest {
    Unique(usize),
    Tie { higher: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    #[default]
    TowardHigher,
}

/// How a compressive map picks the attractor for a contour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Assignment {
    /// One attractor per utterance, chosen over the analysis window; the
    /// whole contour is shifted rigidly.
    #[default]
    #[serde(alias = "utterance-level")]
    Utterance,
    /// Every sample is pulled toward its own nearest attractor.
    Pointwise,
}

/// Logistic inverter transfer curve, decreasing from `v_hi` to `v_lo`
/// around `v_mid`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inverter<T> {
    pub v_lo: T,
    pub v_hi: T,
    pub v_mid: T,
    pub gain: T,
}

impl<T: Scalar> Default for Inverter<T> {
    fn default() -> Self {
        Inverter {
            v_lo: T::lit(0.2),
            v_hi: T::lit(3.1),
            v_mid: T::lit(1.7),
            gain: T::lit(4.0),
        }
    }
}

impl<T: Scalar> Inverter<T> {
    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.v_lo, self.v_hi, self.v_mid, self.gain]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::Spec("inverter parameters must be finite".into()));
        }
        if !(self.gain > T::zero()) {
            return Err(Error::Spec("inverter gain must be positive".into()));
        }
        if !(self.v_lo < self.v_mid && self.v_mid < self.v_hi) {
            return Err(Error::Spec("inverter needs v_lo < v_mid < v_hi".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn transfer(&self, v: T) -> T {
        self.v_lo + (self.v_hi - self.v_lo) / (T::one() + (self.gain * (v - self.v_mid)).exp())
    }
}

/// One of the competing memory models, as a map from stimulus to response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub enum ResponseMap<T> {
    /// Continuous memory: reproduce the input, possibly transposed.
    Transpose {
        offset: T,
    },
    /// Discrete memory: snap to the nearest attractor.
    Quantizer {
        attractors: AttractorSpec<T>,
        #[serde(default)]
        tie_break: TieBreak,
    },
    /// Continuous memory with a linear pull of strength `lambda` toward the
    /// nearest attractor.
    Compressive {
        attractors: AttractorSpec<T>,
        lambda: T,
        #[serde(default)]
        assignment: Assignment,
    },
    Inverter(Inverter<T>),
}

impl<T: Scalar> ResponseMap<T> {
    pub fn identity() -> Self {
        ResponseMap::Transpose { offset: T::zero() }
    }

    pub fn quantizer(attractors: AttractorSpec<T>) -> Self {
        ResponseMap::Quantizer {
            attractors,
            tie_break: TieBreak::TowardHigher,
        }
    }

    pub fn compressive(
        attractors: AttractorSpec<T>,
        lambda: T,
        assignment: Assignment,
    ) -> Result<Self> {
        let map = ResponseMap::Compressive {
            attractors,
            lambda,
            assignment,
        };
        map.validate()?;
        Ok(map)
    }

    /// Parses and validates a JSON map spec. Unknown fields are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let map: Self = serde_json::from_str(text)?;
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ResponseMap::Transpose { offset } if !offset.is_finite() => {
                Err(Error::Spec("transpose offset must be finite".into()))
            }
            ResponseMap::Compressive { lambda, .. }
                if !(*lambda >= T::zero() && *lambda <= T::one()) =>
            {
                Err(Error::Spec(format!("lambda {lambda} must lie in [0, 1]")))
            }
            ResponseMap::Inverter(inv) => inv.validate(),
            _ => Ok(()),
        }
    }

    pub fn attractors(&self) -> Option<&AttractorSpec<T>> {
        match self {
            ResponseMap::Quantizer { attractors, .. }
            | ResponseMap::Compressive { attractors, .. } => Some(attractors),
            _ => None,
        }
    }

    pub fn is_semitone_domain(&self) -> bool {
        !matches!(self, ResponseMap::Inverter(_))
    }

    /// Applies the map to one value (semitones, or volts for the inverter).
    ///
    /// The compressive map is evaluated pointwise here regardless of its
    /// assignment mode. At an exact tie between two attractors it returns
    /// `x` unchanged; the quantizer picks the higher attractor instead.
    pub fn apply_scalar(&self, x: T) -> Result<T> {
        if !x.is_finite() {
            return Err(Error::domain(format!("input {x} is not finite")));
        }
        Ok(self.eval(x))
    }

    #[inline]
    pub(crate) fn eval(&self, x: T) -> T {
        match self {
            ResponseMap::Transpose { offset } => x + *offset,
            ResponseMap::Quantizer { attractors, .. } => match attractors.nearest(x) {
                Nearest::Unique(i) | Nearest::Tie { higher: i } => attractors.levels[i].phi,
            },
            ResponseMap::Compressive {
                attractors, lambda, ..
            } => match attractors.nearest(x) {
                Nearest::Unique(i) => x - *lambda * (x - attractors.levels[i].phi),
                Nearest::Tie { .. } => x,
            },
            ResponseMap::Inverter(inv) => inv.transfer(x),
        }
    }

    /// Applies the map to a contour.
    ///
    /// Utterance-level compressive maps choose one attractor minimizing the
    /// mean absolute deviation over `window` and shift the whole contour by
    /// `lambda · (window mean − attractor)`; a tie leaves the contour as is.
    /// Every other semitone map is applied to each grid value.
    pub fn apply_contour(&self, c: &Contour<T>, window: &Window<T>) -> Result<Contour<T>> {
        match self {
            ResponseMap::Inverter(_) => Err(Error::domain(
                "inverter transfer works on volts and cannot be applied to a contour",
            )),
            ResponseMap::Compressive {
                attractors,
                lambda,
                assignment: Assignment::Utterance,
            } => {
                let mean = c.window_mean(window)?;
                let n = T::from_count(c.window_slice(window).count());
                let mad = |a: T| c.window_slice(window).map(|v| (v - a).abs()).sum::<T>() / n;
                match attractors.nearest_by(mad) {
                    Nearest::Tie { .. } => Ok(c.clone()),
                    Nearest::Unique(i) => {
                        let shift = *lambda * (mean - attractors.levels[i].phi);
                        c.with_values(c.values().iter().map(|&v| v - shift).collect())
                    }
                }
            }
            _ => c.with_values(c.values().iter().map(|&v| self.eval(v)).collect()),
        }
    }

    /// Fixed points of the map on `domain`.
    ///
    /// Sign changes of `g(x) − x` are located on a 1000-point scan and refined
    /// by bisection until the bracket is narrower than `tol / 2`. Stability
    /// is `|g′(x*)| < 1` by central difference with step `tol`. A crossing
    /// where `g(x) − x` jumps rather than passing through zero (the basin
    /// boundary of a quantizer) is reported with `continuous = false`.
    ///
    /// The inverter reverses its input, so the analysis is done on the
    /// two-stage composition `g∘g`; points that `g` swaps form a 2-cycle and
    /// carry their partner.
    pub fn fixed_points(&self, domain: (T, T), tol: T) -> Result<FixedPointReport<T>> {
        let (lo, hi) = domain;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::domain(format!(
                "empty or non-finite domain {lo}:{hi}"
            )));
        }
        if !(tol > T::zero()) {
            return Err(Error::domain("tolerance must be positive"));
        }
        self.validate()?;
        let composed = !self.is_semitone_domain();
        let g = |x: T| {
            if composed {
                self.eval(self.eval(x))
            } else {
                self.eval(x)
            }
        };
        let f = |x: T| g(x) - x;

        const SCAN: usize = 1000;
        let step = (hi - lo) / T::from_count(SCAN - 1);
        let xs: Vec<T> = (0..SCAN).map(|i| lo + step * T::from_count(i)).collect();
        let fs: Vec<T> = xs.iter().map(|&x| f(x)).collect();

        if fs.iter().all(|v| *v == T::zero()) {
            return Ok(FixedPointReport {
                points: Vec::new(),
                identity: true,
                composed,
            });
        }

        let mut roots: Vec<T> = Vec::new();
        let mut crossings: Vec<(T, bool)> = Vec::new();
        for i in 0..SCAN {
            if fs[i] == T::zero() {
                roots.push(xs[i]);
                crossings.push((xs[i], true));
                continue;
            }
            if i + 1 < SCAN
                && fs[i + 1] != T::zero()
                && (fs[i] < T::zero()) != (fs[i + 1] < T::zero())
            {
                let (mut a, mut b) = (xs[i], xs[i + 1]);
                let fa_neg = fs[i] < T::zero();
                let half_tol = tol / T::lit(2.0);
                while b - a > half_tol {
                    let m = a + (b - a) / T::lit(2.0);
                    if m <= a || m >= b {
                        break;
                    }
                    if (f(m) < T::zero()) == fa_neg {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                let x = a + (b - a) / T::lit(2.0);
                // A genuine root leaves |f| comparable to the bracket width
                // times the local slope; a jump leaves it finite.
                let jump = (f(a) - f(b)).abs();
                let continuous = jump <= T::lit(1e3) * tol.max(T::epsilon()) * (T::one() + x.abs());
                roots.push(x);
                crossings.push((x, continuous));
            }
        }

        let points = crossings
            .into_iter()
            .map(|(x, continuous)| {
                let slope = (g(x + tol) - g(x - tol)) / (tol + tol);
                let partner = if composed {
                    let y = self.eval(x);
                    if (y - x).abs() > T::lit(10.0) * tol {
                        Some(y)
                    } else {
                        None
                    }
                } else {
                    None
                };
                FixedPoint {
                    x,
                    slope,
                    stable: slope.abs() < T::one(),
                    continuous,
                    cycle_partner: partner,
                }
            })
            .collect();
        Ok(FixedPointReport {
            points,
            identity: false,
            composed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPoint<T> {
    pub x: T,
    pub slope: T,
    pub stable: bool,
    /// False when `g(x) − x` changes sign by a jump (a basin boundary).
    pub continuous: bool,
    /// For composed inverter maps, the other member of the 2-cycle.
    pub cycle_partner: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointReport<T> {
    pub points: Vec<FixedPoint<T>>,
    /// Every scan point is fixed (identity map).
    pub identity: bool,
    /// Points are fixed points of `g∘g` rather than `g`.
    pub composed: bool,
}
