//! Gray-space estimation for secondary TV-band devices.
//!
//! The pipeline runs from propagation and link budget to protection radii,
//! then to per-MUX protection masks over a household raster, and finally to
//! Monte Carlo statistics of the channels left free for secondary use.

pub mod engine;
pub mod error;
pub mod exec;
pub mod export;
pub mod griddata;
pub mod linkbudget;
pub mod propagation;
pub mod scenario;
pub mod stats;
pub mod streams;
pub mod synth;

pub use engine::{run_monte_carlo, PreparedScenario, RunOptions, Scenario, SimulationResult};
pub use error::{Error, Result};
pub use exec::Execution;
pub use linkbudget::{ChannelRelation, DeviceProfile, ProtectionCriteria};
pub use propagation::{Environment, HataParams};
pub use scenario::{ChannelPlan, KnowledgeConfig, KnowledgeLevel, ShareInterpretation, TimePeriod};
