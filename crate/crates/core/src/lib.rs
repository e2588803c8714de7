//! Simulation and analysis of serial-reproduction (mimicry) chains of pitch
//! contours.
//!
//! Competing memory models are expressed as one-dimensional response maps
//! ([`ResponseMap`]): continuous transposition, a discrete quantizer, and a
//! compressive attractor map in between. [`chain::run_chain`] iterates a map
//! with production noise; [`analysis`] turns the resulting ensembles into
//! bimodality trajectories, transfer-map fits, contraction rates and a
//! three-way verdict. A logistic inverter string shows the same digitizing
//! behaviour in electronics.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the usual `f64` instantiation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod chain;
pub mod contour;
mod error;
pub mod io;
pub mod response_map;
pub mod rng;
mod scalar;
pub mod stimulus;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use chain::{run_chain, run_inverter_string, sweep_inverter, ChainRun, VariationModel};
pub use contour::{
    hz_to_semitones, normalize, speaker_reference, Contour, ContourEnsemble, RawTrack, Window,
};
pub use response_map::{Assignment, Attractor, AttractorSpec, Inverter, ResponseMap};
pub use stimulus::{gen_stimuli, BasisSet, WeightMode, WeightScheme};

pub type Contour64 = Contour<f64>;
pub type ContourEnsemble64 = ContourEnsemble<f64>;
pub type RawTrack64 = RawTrack<f64>;
pub type Window64 = Window<f64>;
pub type ResponseMap64 = ResponseMap<f64>;
pub type AttractorSpec64 = AttractorSpec<f64>;
pub type Inverter64 = Inverter<f64>;
pub type BasisSet64 = BasisSet<f64>;
pub type ChainRun64 = ChainRun<f64>;
pub type DensityEstimate64 = analysis::DensityEstimate<f64>;
pub type TransferEstimate64 = analysis::TransferEstimate<f64>;
pub type AnalysisReport64 = analysis::AnalysisReport<f64>;

pub type Contour32 = Contour<f32>;
pub type ContourEnsemble32 = ContourEnsemble<f32>;
pub type ResponseMap32 = ResponseMap<f32>;
