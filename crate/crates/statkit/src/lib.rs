//! Statistical kernel for human dialogue-evaluation studies.
//!
//! Agreement (Krippendorff's alpha), BCa bootstrap, OLS and IRLS logistic
//! regression, two-sided tests, interval estimates and power, with the
//! special functions and distributions they need implemented in-crate.
//!
//! Randomness is confined to [`bootstrap`], which uses ChaCha8 with one
//! stream per resample (see [`bootstrap::substream`]).

pub mod alpha;
pub mod bootstrap;
pub mod dist;
pub mod hypothesis;
pub mod interval;
pub mod linalg;
pub mod power;
pub mod quad;
pub mod regression;
pub mod special;

pub use alpha::{krippendorff_alpha, CoincidenceMatrix, Level, ReliabilityData};
pub use bootstrap::{bootstrap_bca, bootstrap_bca_detail, BcaDetail};
pub use hypothesis::{cohens_d, sign_test, t_test, two_prop_z_test, Effect, TestKind, TestResult};
pub use interval::{student_t_interval, wilson_interval, IntervalEstimate, IntervalMethod};
pub use linalg::Matrix;
pub use power::{power_f_test, power_t_test};
pub use regression::{logistic_fit, logistic_fit_with, ols_fit, ols_fit_with, Aliasing, Fitness, RegressionFit};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("design is rank deficient: predictor column {column} is a linear combination of earlier columns")]
    RankDeficient { column: usize },
    #[error("complete or quasi-complete separation: coefficients diverge")]
    Separation,
    #[error("response contains a single class")]
    SingleClass,
    #[error("alpha is undefined: expected disagreement is zero")]
    UndefinedAlpha,
    #[error("no unit is coded by two or more coders")]
    NoOverlap,
    #[error("all comparisons are ties")]
    AllTies,
    #[error("statistic is undefined on the full dataset")]
    StatisticUndefined,
    #[error("statistic undefined on {:.1}% of resamples", failure_rate * 100.0)]
    UnstableStatistic { failure_rate: f64 },
}

pub type Result<T> = std::result::Result<T, StatError>;
