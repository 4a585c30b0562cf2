//! Time-slotted simulation: request-pattern generation, CPU noise
//! injection, the completion-time model (processing plus communication),
//! policy drivers, and cost accounting.
//!
//! One slot models one minute of wall time. The reactive controller decides
//! at the end of each slot from that slot's measurements, so its new
//! configuration serves the next slot; each record therefore carries the
//! configuration that served the slot and the decision that produced it.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    processing_rate, residual_capacity, Application, CostModel, Deployment, DomainError, RegionId,
    ServiceId, Topology,
};
use crate::dsr::{ControllerState, Decision, DsrConfig, DsrError, SplitConfig};
use crate::mea::{mea_iteration, MeaHost, MeaSettings};
use crate::optimal::{solve_exact, ExactInstance, SolveError};
use crate::placement::{
    bfs_order, place_initial, place_replicas_arrays, select_replicas_array, sort_regions,
    PlacementConfig, PlacementError,
};

/// Deterministic request pattern over the simulation horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RequestPattern {
    /// Linear ramp from zero to `peak` over the first half, back down over
    /// the second half.
    MonotonicIncDec { peak: u64, length: usize },
    /// Half-wave rectified sinusoid with the given period and peak.
    Periodic {
        peak: u64,
        period: usize,
        length: usize,
    },
    /// Replays a list of `(level, duration)` plateaus.
    ConstantSteps { steps: Vec<(u64, usize)> },
}

impl RequestPattern {
    pub fn length(&self) -> usize {
        match self {
            RequestPattern::MonotonicIncDec { length, .. } => *length,
            RequestPattern::Periodic { length, .. } => *length,
            RequestPattern::ConstantSteps { steps } => steps.iter().map(|(_, d)| d).sum(),
        }
    }
}

/// Request count for one slot.
pub fn generate_pattern(pattern: &RequestPattern, slot: usize) -> u64 {
    match pattern {
        RequestPattern::MonotonicIncDec { peak, length } => {
            if *length <= 1 {
                return *peak;
            }
            let half = length / 2;
            let value = if slot <= half {
                *peak as f64 * slot as f64 / half as f64
            } else {
                *peak as f64 * (length - 1 - slot) as f64 / (length - 1 - half) as f64
            };
            value.round() as u64
        }
        RequestPattern::Periodic {
            peak,
            period,
            length: _,
        } => {
            let phase = 2.0 * std::f64::consts::PI * slot as f64 / *period as f64;
            (*peak as f64 * phase.sin().max(0.0)).round() as u64
        }
        RequestPattern::ConstantSteps { steps } => {
            let mut cursor = 0usize;
            for (level, duration) in steps {
                cursor += duration;
                if slot < cursor {
                    return *level;
                }
            }
            0
        }
    }
}

/// Transient per-slot CPU interference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub enabled: bool,
    /// Inclusive MIPS interval the per-slot consumption is drawn from.
    pub range_mips: (f64, f64),
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            enabled: false,
            range_mips: (0.0, 250.0),
            seed: 0,
        }
    }
}

/// Draws the noisy region and the MIPS it loses this slot. Uniform over
/// regions and over the configured interval; deterministic under the rng
/// state.
pub fn apply_noise(
    noise: &NoiseModel,
    topology: &Topology,
    rng: &mut ChaCha8Rng,
) -> (RegionId, f64) {
    let regions = topology.regions();
    let region = regions[rng.gen_range(0..regions.len())].id.clone();
    let (lo, hi) = noise.range_mips;
    let mips = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    (region, mips)
}

/// Which allocation strategy drives the slot loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Reactive redirection over replica arrays.
    Dsr,
    /// Load-balancing baseline.
    Mea,
    /// Exact program re-solved every slot.
    Optimal,
    /// Static placement, first array host only.
    None,
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Dsr => "dsr",
            Policy::Mea => "mea",
            Policy::Optimal => "optimal",
            Policy::None => "none",
        }
    }
}

/// Everything one simulation run needs.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub topology: Topology,
    pub app: Application,
    pub placement: PlacementConfig,
    pub dsr: DsrConfig,
    pub policy: Policy,
    pub pattern: RequestPattern,
    pub noise: NoiseModel,
    /// Maximum allowed completion time (processing + communication), s.
    pub max_completion_s: f64,
    /// Communication-delay budget, s; `max_completion_s - psi_s`.
    pub zeta_s: f64,
    pub cost_model: CostModel,
    pub mea: MeaSettings,
    pub seed: u64,
}

/// One observed slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub slot: usize,
    pub requests: u64,
    /// Processing component, s. Infinite when the slot saturated.
    pub processing_s: f64,
    /// Processing plus communication, s. Infinite when the slot saturated.
    pub completion_s: f64,
    /// The decision that produced this slot's configuration.
    pub decision: Decision,
    pub active_arrays: Vec<RegionId>,
    pub split: SplitConfig,
    pub public_cost: f64,
    pub noise_region: Option<RegionId>,
    pub noise_mips: f64,
    pub saturated: bool,
}

/// A finished simulation: the deployment it ran on and the per-slot trace.
#[derive(Debug, Clone)]
pub struct SimResult {
    pub deployment: Deployment,
    pub records: Vec<IterationRecord>,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Dsr(#[from] DsrError),
    #[error("exact solver: {0}")]
    Solve(#[from] SolveError),
    #[error("all hosts serving traffic are saturated")]
    Saturated,
}

/// Completion time of one slot: processing plus communication.
///
/// Processing sums per-microservice delays; an array microservice pools the
/// rates of its instances across the active hosts that receive a positive
/// traffic share, a regular microservice uses its single host. Communication
/// sums the delays of the mapped paths that carry traffic this slot: links
/// to or from inactive array copies contribute nothing.
pub fn completion_time(
    deployment: &Deployment,
    app: &Application,
    active_arrays: &[RegionId],
    split: &SplitConfig,
    requests: u64,
    residuals: &BTreeMap<RegionId, f64>,
) -> Result<(f64, f64), EngineError> {
    if requests == 0 {
        return Ok((0.0, 0.0));
    }
    let serving: Vec<&RegionId> = active_arrays
        .iter()
        .filter(|r| split.fraction(r) > 0.0)
        .collect();

    let mut processing = 0.0_f64;
    for m in app.microservices() {
        let work = requests as f64 * m.work_per_request_mi;
        let hosts = deployment.instance_map.get(&m.id);
        let pooled: f64 = match hosts {
            Some(regions) if deployment.is_array_member(&m.id) => regions
                .iter()
                .filter(|r| serving.iter().any(|s| s == r))
                .map(|r| processing_rate(residuals.get(r).copied().unwrap_or(0.0)))
                .sum(),
            Some(regions) => regions
                .iter()
                .map(|r| processing_rate(residuals.get(r).copied().unwrap_or(0.0)))
                .sum(),
            None => 0.0,
        };
        if pooled <= 0.0 {
            return Err(EngineError::Saturated);
        }
        processing += work / pooled;
    }

    let mut communication_ms = 0.0_f64;
    for (key, path) in &deployment.link_map {
        let carries = |service: &ServiceId, region: &RegionId| -> bool {
            if deployment.is_array_member(service) {
                serving.contains(&region)
            } else {
                true
            }
        };
        if carries(&key.link_from, &key.from_region) && carries(&key.link_to, &key.to_region) {
            communication_ms += path.total_delay_ms();
        }
    }
    Ok((processing, processing + communication_ms / 1000.0))
}

/// Per-slot public-cloud cost: the number of microservice instances in
/// public regions that are positioned to receive traffic (base instances
/// always; array copies only while their host is active with a positive
/// split share), times the unit cost.
pub fn iteration_cost(
    deployment: &Deployment,
    topology: &Topology,
    active_arrays: &[RegionId],
    split: &SplitConfig,
    cost_model: &CostModel,
) -> f64 {
    let mut count = 0usize;
    for (m, regions) in &deployment.instance_map {
        for r in regions {
            let public = topology
                .region(r)
                .map(|reg| reg.kind.is_public())
                .unwrap_or(false);
            if !public {
                continue;
            }
            if deployment.is_array_member(m) {
                if active_arrays.contains(r) && split.fraction(r) > 0.0 {
                    count += 1;
                }
            } else {
                count += 1;
            }
        }
    }
    cost_model.per_microservice_unit_cost * count as f64
}

/// Projects the public requests of one simulation onto a month of
/// pay-per-use billing: requests times periods per month, times the billed
/// duration and memory, times the price per GB-second.
pub fn monthly_cost(public_requests_per_simulation: f64, cost_model: &CostModel) -> f64 {
    let tot_req = public_requests_per_simulation * cost_model.periods_per_month;
    let tot_sec = tot_req * cost_model.aws_duration_s;
    let tot_gb_s = tot_sec * (cost_model.aws_memory_mb / 1024.0);
    tot_gb_s * cost_model.aws_price_per_gb_s
}

/// Runs the placement once, then the slot loop under the configured policy.
/// Fully deterministic for a given config and seed.
pub fn run_simulation(cfg: &ScenarioConfig) -> Result<SimResult, EngineError> {
    let base = place_initial(&cfg.app, &cfg.topology, &cfg.placement)?;
    let order = bfs_order(&cfg.app)?;
    let array = select_replicas_array(&cfg.app, &order, cfg.placement.array_size);
    let deployment = place_replicas_arrays(&cfg.app, &cfg.topology, base, &array, &cfg.placement)?;

    let mut static_residual: BTreeMap<RegionId, f64> = BTreeMap::new();
    for region in cfg.topology.regions() {
        let res = residual_capacity(region, &cfg.app, &deployment)?;
        static_residual.insert(region.id.clone(), res.cpu_mips);
    }

    // Array hosts in activation order, shared by every policy.
    let host_order: Vec<RegionId> = sort_regions(&cfg.topology)
        .into_iter()
        .filter(|r| deployment.array_hosts.contains(r))
        .collect();
    let first_host = host_order.first().cloned().ok_or(DsrError::NoArrayHosts)?;

    let array_work: f64 = deployment
        .replicas_array
        .iter()
        .map(|m| {
            cfg.app
                .microservice(m)
                .expect("array member exists")
                .work_per_request_mi
        })
        .sum();
    let mea_hosts: Vec<MeaHost> = host_order
        .iter()
        .map(|r| {
            let kind = cfg.topology.region(r).expect("known region").kind;
            MeaHost {
                region: r.clone(),
                cpu_capacity_mips: static_residual[r],
                bandwidth_price: if kind.is_public() {
                    cfg.mea.public_bandwidth_price
                } else {
                    cfg.mea.private_bandwidth_price
                },
            }
        })
        .collect();

    let mut controller = ControllerState::new(&cfg.topology, &deployment.array_hosts)?;
    let mut active: Vec<RegionId> = controller.active_arrays().to_vec();
    let mut split = SplitConfig::single(first_host.clone());
    let mut shaped_by = Decision::None;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.noise.seed);
    let mut records = Vec::with_capacity(cfg.pattern.length());

    for slot in 0..cfg.pattern.length() {
        let requests = generate_pattern(&cfg.pattern, slot);
        let (noise_region, noise_mips) = if cfg.noise.enabled {
            let (r, m) = apply_noise(&cfg.noise, &cfg.topology, &mut rng);
            (Some(r), m)
        } else {
            (None, 0.0)
        };
        let mut residuals = static_residual.clone();
        if let Some(region) = &noise_region {
            let r = residuals
                .get_mut(region)
                .expect("noise hits a known region");
            *r = (*r - noise_mips).max(0.0);
        }

        let record = match cfg.policy {
            Policy::Dsr | Policy::None => {
                let outcome =
                    completion_time(&deployment, &cfg.app, &active, &split, requests, &residuals);
                let (processing_s, completion_s, saturated) = flatten(outcome)?;
                let public_cost =
                    iteration_cost(&deployment, &cfg.topology, &active, &split, &cfg.cost_model);
                let record = IterationRecord {
                    slot,
                    requests,
                    processing_s,
                    completion_s,
                    decision: shaped_by,
                    active_arrays: active.clone(),
                    split: split.clone(),
                    public_cost,
                    noise_region,
                    noise_mips,
                    saturated,
                };
                if cfg.policy == Policy::Dsr {
                    // React to this slot's measurement; the new configuration
                    // serves the next slot.
                    let step = controller.step(processing_s, requests, &residuals, &cfg.dsr);
                    shaped_by = step.decision;
                    active = controller.active_arrays().to_vec();
                    match step.split {
                        Some(s) => split = s,
                        None => {
                            log::warn!("slot {slot}: all active hosts saturated; split retained")
                        }
                    }
                }
                record
            }
            Policy::Mea => {
                let mea_split = mea_iteration(&mea_hosts, requests, array_work, &cfg.mea);
                let mea_active: Vec<RegionId> = host_order
                    .iter()
                    .filter(|r| mea_split.fraction(r) > 0.0)
                    .cloned()
                    .collect();
                let outcome = completion_time(
                    &deployment,
                    &cfg.app,
                    &mea_active,
                    &mea_split,
                    requests,
                    &residuals,
                );
                let (processing_s, completion_s, saturated) = flatten(outcome)?;
                let public_cost = iteration_cost(
                    &deployment,
                    &cfg.topology,
                    &mea_active,
                    &mea_split,
                    &cfg.cost_model,
                );
                IterationRecord {
                    slot,
                    requests,
                    processing_s,
                    completion_s,
                    decision: Decision::None,
                    active_arrays: mea_active,
                    split: mea_split,
                    public_cost,
                    noise_region,
                    noise_mips,
                    saturated,
                }
            }
            Policy::Optimal => {
                let topology = match (&noise_region, noise_mips) {
                    (Some(region), mips) if mips > 0.0 => {
                        cfg.topology.with_cpu_reduced(region, mips)
                    }
                    _ => cfg.topology.clone(),
                };
                let instance = ExactInstance {
                    topology: &topology,
                    app: &cfg.app,
                    requests: cfg
                        .app
                        .microservices()
                        .iter()
                        .map(|m| (m.id.clone(), requests))
                        .collect(),
                    psi_s: cfg.dsr.psi_s,
                    zeta_s: cfg.zeta_s,
                    cost_model: cfg.cost_model.clone(),
                };
                match solve_exact(&instance) {
                    Ok(solution) => {
                        let processing_s: f64 = solution.processing_delay_s.values().sum();
                        IterationRecord {
                            slot,
                            requests,
                            processing_s,
                            completion_s: processing_s + solution.communication_delay_s,
                            decision: Decision::None,
                            active_arrays: Vec::new(),
                            split: SplitConfig {
                                fractions: BTreeMap::new(),
                            },
                            public_cost: solution.objective,
                            noise_region,
                            noise_mips,
                            saturated: false,
                        }
                    }
                    Err(SolveError::Infeasible) => IterationRecord {
                        slot,
                        requests,
                        processing_s: f64::INFINITY,
                        completion_s: f64::INFINITY,
                        decision: Decision::None,
                        active_arrays: Vec::new(),
                        split: SplitConfig {
                            fractions: BTreeMap::new(),
                        },
                        public_cost: 0.0,
                        noise_region,
                        noise_mips,
                        saturated: true,
                    },
                    Err(e @ SolveError::InstanceTooLarge { .. }) => return Err(e.into()),
                }
            }
        };
        records.push(record);
    }
    Ok(SimResult {
        deployment,
        records,
    })
}

/// Saturated slots flow through as infinite times plus a flag.
fn flatten(outcome: Result<(f64, f64), EngineError>) -> Result<(f64, f64, bool), EngineError> {
    match outcome {
        Ok((p, t)) => Ok((p, t, false)),
        Err(EngineError::Saturated) => Ok((f64::INFINITY, f64::INFINITY, true)),
        Err(e) => Err(e),
    }
}
