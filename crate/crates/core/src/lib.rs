//! Policy-guided evolutionary feature-subset search for path loss
//! prediction.
//!
//! The crate is organized bottom-up:
//!
//! - [`scenario`]: synthetic scenes, a propagation oracle and the ten
//!   candidate environment features;
//! - [`dataset`]: samples, stratified splits, standardization, CSV;
//! - [`predictor`]: the regressor seam and a closed-form ridge default;
//! - [`scoring`]: RMSE, trend-consistency error and the composite score;
//! - [`search`]: Bernoulli policy, evolutionary operators, elite-guided
//!   policy updates and diagnostics;
//! - [`baselines`]: full, random and mutual-information subsets;
//! - [`harness`]: experiment configuration, orchestration and reporting.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod predictor;
pub mod scenario;
pub mod scoring;
pub mod search;
pub mod seed;

pub use dataset::{build_dataset, Dataset, Sample, Split, SplitFractions};
pub use error::{Error, Result};
pub use predictor::{evaluate_mask, Basis, Learner, PredictorConfig, PredictorModel, Regressor};
pub use scenario::{generate_scene, FeatureCatalog, FeatureVector, Scene, SceneConfig, N_FEATURES};
pub use scoring::{ScoreBreakdown, ScoreWeights};
pub use search::{run_search, Candidate, FeatureMask, GenerationRecord, Policy, SearchConfig, SearchResult};
