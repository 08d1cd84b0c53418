//! Best-arm identification over finite reward populations, and its use for
//! approximate discrete sampling.
//!
//! The library treats each candidate outcome as an arm whose rewards are a
//! finite population of numbers; subsampling arms and racing them to a
//! fixed-confidence winner yields a draw from a distribution within total
//! variation `delta` of the target, usually after touching only a fraction
//! of the data. Confidence bounds are specialized to without-replacement
//! sampling, where uncertainty vanishes as an arm nears exhaustion.

pub mod bnormal;
pub mod bounds;
pub mod control_variates;
pub mod error;
pub mod gumbel;
pub mod index_sampler;
pub mod lilucb;
pub mod population;
pub mod racing;
pub mod sampler;
pub mod schedule;
pub mod stats;

pub use control_variates::{residual_population, ControlVariate, ResidualPopulation, TaylorCv};
pub use error::{Error, Result};
pub use lilucb::{lil_ucb, LilUcbConfig, LilUcbResult};
pub use population::{MatrixPopulation, RewardPopulation, ShiftedPopulation, WithRangeBounds};
pub use racing::{race, BSource, BoundKind, RacingConfig, RacingResult, VarianceMode};
pub use sampler::{
    approx_sample, gibbs_step, mh_accept, Algorithm, ConditionalFactors, MhProposal,
    SampleOutcome, SamplerSpec,
};
pub use schedule::BatchSchedule;
pub use stats::ArmStats;
