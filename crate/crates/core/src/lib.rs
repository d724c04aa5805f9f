//! Fronthaul bit allocation for uplink cell-free massive MIMO.
//!
//! APs run MRC locally and forward quantized per-UE outputs to a CPU over
//! capacity-limited fronthaul links. Given large-scale fading statistics,
//! this crate evaluates the resulting per-UE SINR in closed form under an
//! additive quantization noise model, searches integer bit allocations with
//! a two-stage harmony search, and provides reference allocators,
//! Monte-Carlo oracles and an experiment runner.
//!
//! ```
//! use fronthaul_core::prelude::*;
//!
//! let config = SystemConfig::table3();
//! let mut rng = fronthaul_core::rng::seeded(7);
//! let geometry = Geometry::new(
//!     grid_ap_positions(config.num_aps, 1000.0),
//!     UeArea::centered(1000.0).sample(config.num_ues, &mut rng),
//! );
//! let stats = ChannelStatistics::from_geometry(&geometry, &config, &mut rng).unwrap();
//! let profile = QuantizationProfile::default();
//! let problem = Problem::new(&stats, &config, &profile, Objective::Total);
//!
//! let mut eval = Evaluator::new(problem);
//! let out = run_hierarchical(&mut eval, &HsParams::stage1_default(), &HsParams::stage2_default(), &mut rng).unwrap();
//! let equal = problem.report(&equal_allocation(&problem)).unwrap();
//! assert!(out.stage2.best_eval >= equal.total_se);
//! assert!(out.stage2.allocation.total() <= 64);
//! ```

pub mod allocation;
pub mod baselines;
pub mod channel;
pub mod error;
pub mod evaluator;
pub mod experiment;
pub mod hs;
pub mod oracle;
pub mod quantization;
pub mod rng;
pub mod search;
pub mod sinr;

pub use allocation::{BitAllocation, Objective};
pub use channel::{ChannelStatistics, SystemConfig};
pub use error::{Error, Result};
pub use evaluator::{Evaluator, Problem};
pub use quantization::QuantizationProfile;

/// The types most callers need.
pub mod prelude {
    pub use crate::allocation::{BitAllocation, Objective};
    pub use crate::baselines::{ap_exhaustive, equal_allocation, full_exhaustive, BudgetMode, Metaheuristic};
    pub use crate::channel::{grid_ap_positions, ChannelStatistics, Geometry, SystemConfig, UeArea};
    pub use crate::error::{Error, Result};
    pub use crate::evaluator::{Evaluator, Problem};
    pub use crate::experiment::{run_experiment, ExperimentSpec, Method, MethodSpec, Sweep, TrialRecord};
    pub use crate::hs::{run_hierarchical, run_stage1, run_stage2, HsParams};
    pub use crate::quantization::QuantizationProfile;
    pub use crate::sinr::{evaluate_allocation, EvaluationReport, ReceiverFilter};
}
