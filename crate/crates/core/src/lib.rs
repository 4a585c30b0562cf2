//! Deterministic, time-slotted simulator and optimization library for
//! cost-aware workload allocation of a microservice application across a
//! hybrid cloud of private fog regions and a pay-per-use public region.
//!
//! The library models the infrastructure and the application as directed
//! weighted graphs, places the application once (with a consecutive slice of
//! microservices replicated as a unit into every region that can take it),
//! and then drives per-slot traffic decisions: a reactive controller with
//! hysteresis, an exact program solved by objective-ordered search, a
//! load-balancing baseline, and a do-nothing baseline, all priced against a
//! pay-per-use cost model.

pub mod domain;
pub mod dsr;
pub mod engine;
pub mod mea;
pub mod optimal;
pub mod placement;
pub mod scenario;

pub use domain::{
    enumerate_paths, processing_rate, residual_capacity, validate_deployment, AppLink, Application,
    CapacityVector, CostModel, Deployment, DomainError, LinkMapKey, Microservice, NetLink, Path,
    Region, RegionId, RegionKind, ServiceId, Topology, Violation,
};
pub use dsr::{
    compute_split, is_workload_shift_required, ControllerState, Decision, DsrConfig, DsrError,
    DsrStep, SplitConfig,
};
pub use engine::{
    apply_noise, completion_time, generate_pattern, iteration_cost, monthly_cost, run_simulation,
    EngineError, IterationRecord, NoiseModel, Policy, RequestPattern, ScenarioConfig, SimResult,
};
pub use mea::{mea_iteration, solve_mea, MeaHost, MeaInstance, MeaSettings, MeaWeights};
pub use optimal::{check_full, solve_exact, ExactInstance, ExactSolution, SolveError};
pub use placement::{
    bfs_order, place_initial, place_replicas_arrays, select_replicas_array, sort_regions,
    PlacementConfig, PlacementError,
};
pub use scenario::{
    default_ranges, sample_instance, ApplicationSpec, InstanceFragment, RangesFile, ScenarioError,
    ScenarioFile, TopologySpec,
};
