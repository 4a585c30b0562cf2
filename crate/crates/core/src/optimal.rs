//! Exact baseline: solves the full placement-and-routing program on small
//! instances by exhaustive search ordered by objective value.
//!
//! The objective depends only on how many microservice instances sit in
//! public regions, so assignments are enumerated by ascending public count
//! and the first fully feasible one is optimal. Routing feasibility is
//! established by backtracking over candidate paths under shared bandwidth,
//! per-link delay, and the aggregate communication budget.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::domain::{
    enumerate_paths, processing_rate, Application, CapacityVector, CostModel, Deployment,
    LinkMapKey, Path, RegionId, ServiceId, Topology, Violation,
};

/// Enumeration guard: assignments are enumerated over `|N| * |R|` booleans.
const MAX_ASSIGNMENT_BITS: usize = 24;

/// One slot of the exact problem.
#[derive(Debug, Clone)]
pub struct ExactInstance<'a> {
    pub topology: &'a Topology,
    pub app: &'a Application,
    /// Requests each microservice has to process this slot.
    pub requests: BTreeMap<ServiceId, u64>,
    /// Processing-time budget, in seconds.
    pub psi_s: f64,
    /// Communication-delay budget, in seconds.
    pub zeta_s: f64,
    pub cost_model: CostModel,
}

/// An optimal feasible assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub deployment: Deployment,
    pub public_instance_count: usize,
    pub objective: f64,
    /// Processing delay per microservice, in seconds.
    pub processing_delay_s: BTreeMap<ServiceId, f64>,
    /// Total communication delay of the mapped paths, in seconds.
    pub communication_delay_s: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("no assignment satisfies all constraints")]
    Infeasible,
    #[error(
        "instance too large for exhaustive search: {bits} assignment bits > {MAX_ASSIGNMENT_BITS}"
    )]
    InstanceTooLarge { bits: usize },
}

/// Checks a deployment against the full constraint set: everything
/// [`crate::domain::validate_deployment`] covers, plus the aggregate
/// processing-time budget and the aggregate communication budget.
pub fn check_full(instance: &ExactInstance<'_>, deployment: &Deployment) -> Vec<Violation> {
    let mut violations =
        crate::domain::validate_deployment(instance.topology, instance.app, deployment);

    // Residual CPU per region under this deployment (clamped at zero; a
    // capacity overrun is already reported above).
    let mut residual_cpu: BTreeMap<RegionId, f64> = BTreeMap::new();
    for region in instance.topology.regions() {
        let mut used = 0.0;
        for (m, regions) in &deployment.instance_map {
            if regions.contains(&region.id) {
                if let Some(ms) = instance.app.microservice(m) {
                    used += ms.demand.cpu_mips;
                }
            }
        }
        residual_cpu.insert(region.id.clone(), region.capacity.cpu_mips - used);
    }

    // Aggregate processing budget: sum of per-microservice delays, each the
    // per-slot work over the pooled rate of its host regions.
    let mut total_processing = 0.0_f64;
    for m in instance.app.microservices() {
        let work =
            instance.requests.get(&m.id).copied().unwrap_or(0) as f64 * m.work_per_request_mi;
        if work == 0.0 {
            continue;
        }
        let pooled: f64 = deployment
            .instance_map
            .get(&m.id)
            .map(|regions| {
                regions
                    .iter()
                    .map(|r| processing_rate(residual_cpu.get(r).copied().unwrap_or(0.0)))
                    .sum()
            })
            .unwrap_or(0.0);
        if pooled <= 0.0 {
            total_processing = f64::INFINITY;
            break;
        }
        total_processing += work / pooled;
    }
    if total_processing > instance.psi_s {
        violations.push(Violation::ProcessingBudgetExceeded {
            total_s: total_processing,
            budget_s: instance.psi_s,
        });
    }

    // Aggregate communication budget over every mapped path.
    let total_comm_ms: f64 = deployment
        .link_map
        .values()
        .map(|p| p.total_delay_ms())
        .sum();
    if total_comm_ms > instance.zeta_s * 1000.0 {
        violations.push(Violation::CommunicationBudgetExceeded {
            total_ms: total_comm_ms,
            budget_ms: instance.zeta_s * 1000.0,
        });
    }

    violations
}

/// A path demand implied by an assignment: application link `(u, v)` needs a
/// physical path between two host regions.
struct PathDemand {
    link_index: usize,
    candidates: Vec<Path>,
}

/// Solves the exact program. Assignments are enumerated in ascending order
/// of public instance count (then lexicographically), so the first feasible
/// assignment minimizes the objective. Deterministic for a given instance.
pub fn solve_exact(instance: &ExactInstance<'_>) -> Result<ExactSolution, SolveError> {
    let regions = instance.topology.regions();
    let micros = instance.app.microservices();
    let n = micros.len();
    let r = regions.len();
    let bits = n * r;
    if bits > MAX_ASSIGNMENT_BITS {
        return Err(SolveError::InstanceTooLarge { bits });
    }

    let public_mask: u32 = regions
        .iter()
        .enumerate()
        .filter(|(_, reg)| reg.kind.is_public())
        .fold(0, |acc, (i, _)| acc | (1 << i));
    let max_public = n * (public_mask.count_ones() as usize);

    // Path candidates between every ordered region pair, reused across
    // assignments.
    let mut all_paths: BTreeMap<(usize, usize), Vec<Path>> = BTreeMap::new();
    for i in 0..r {
        for j in 0..r {
            if i != j {
                all_paths.insert(
                    (i, j),
                    enumerate_paths(instance.topology, &regions[i].id, &regions[j].id),
                );
            }
        }
    }

    let mut masks = vec![0u32; n];
    for target_public in 0..=max_public {
        if let Some(solution) = search_level(
            instance,
            &mut masks,
            0,
            target_public,
            public_mask,
            &all_paths,
        ) {
            return Ok(solution);
        }
    }
    Err(SolveError::Infeasible)
}

/// Depth-first enumeration of per-microservice region subsets whose total
/// public instance count equals `target_public`.
fn search_level(
    instance: &ExactInstance<'_>,
    masks: &mut Vec<u32>,
    index: usize,
    remaining_public: usize,
    public_mask: u32,
    all_paths: &BTreeMap<(usize, usize), Vec<Path>>,
) -> Option<ExactSolution> {
    let regions = instance.topology.regions();
    let micros = instance.app.microservices();
    let n = micros.len();
    let r = regions.len();
    if index == n {
        if remaining_public != 0 {
            return None;
        }
        return try_assignment(instance, masks, all_paths);
    }
    // Even with every remaining microservice fully public, can the target
    // still be met?
    let per_micro_public = public_mask.count_ones() as usize;
    for mask in 1..(1u32 << r) {
        let public_here = (mask & public_mask).count_ones() as usize;
        if public_here > remaining_public {
            continue;
        }
        let rest = (n - index - 1) * per_micro_public;
        if public_here + rest < remaining_public {
            continue;
        }
        masks[index] = mask;
        if let Some(sol) = search_level(
            instance,
            masks,
            index + 1,
            remaining_public - public_here,
            public_mask,
            all_paths,
        ) {
            return Some(sol);
        }
    }
    None
}

/// Full feasibility check of one assignment: capacities, processing budget,
/// then routing by backtracking. Returns the completed solution on success.
fn try_assignment(
    instance: &ExactInstance<'_>,
    masks: &[u32],
    all_paths: &BTreeMap<(usize, usize), Vec<Path>>,
) -> Option<ExactSolution> {
    let regions = instance.topology.regions();
    let micros = instance.app.microservices();
    let r = regions.len();

    // Capacity per region, and the residual CPU the rate function sees.
    let mut residual_cpu = vec![0.0_f64; r];
    for (ri, region) in regions.iter().enumerate() {
        let mut used = CapacityVector::zero();
        for (mi, micro) in micros.iter().enumerate() {
            if masks[mi] & (1 << ri) != 0 {
                used = used.add(&micro.demand);
            }
        }
        if !region.capacity.covers(&used) {
            return None;
        }
        residual_cpu[ri] = region.capacity.cpu_mips - used.cpu_mips;
    }

    // Aggregate processing budget.
    let mut processing_delay_s: BTreeMap<ServiceId, f64> = BTreeMap::new();
    let mut total_processing = 0.0_f64;
    for (mi, micro) in micros.iter().enumerate() {
        let work = instance.requests.get(&micro.id).copied().unwrap_or(0) as f64
            * micro.work_per_request_mi;
        let pooled: f64 = (0..r)
            .filter(|ri| masks[mi] & (1 << ri) != 0)
            .map(|ri| processing_rate(residual_cpu[ri]))
            .sum();
        let d = if work == 0.0 {
            0.0
        } else if pooled <= 0.0 {
            return None;
        } else {
            work / pooled
        };
        processing_delay_s.insert(micro.id.clone(), d);
        total_processing += d;
    }
    if total_processing > instance.psi_s {
        return None;
    }

    // Path demands implied by the assignment.
    let micro_index: BTreeMap<&str, usize> = micros
        .iter()
        .enumerate()
        .map(|(i, m)| (m.id.as_str(), i))
        .collect();
    let mut demands: Vec<PathDemand> = Vec::new();
    for (li, link) in instance.app.links().iter().enumerate() {
        let um = masks[micro_index[link.from.as_str()]];
        let vm = masks[micro_index[link.to.as_str()]];
        for i in 0..r {
            for j in 0..r {
                if i == j {
                    continue;
                }
                let required = um & (1 << i) != 0
                    && vm & (1 << j) != 0
                    && !(vm & (1 << i) != 0 && um & (1 << j) != 0);
                if !required {
                    continue;
                }
                let candidates: Vec<Path> = all_paths[&(i, j)]
                    .iter()
                    .filter(|p| p.total_delay_ms() <= link.max_delay_ms)
                    .cloned()
                    .collect();
                if candidates.is_empty() {
                    return None;
                }
                demands.push(PathDemand {
                    link_index: li,
                    candidates,
                });
            }
        }
    }

    // Backtracking over candidate paths under shared bandwidth and the
    // aggregate communication budget.
    let mut chosen: Vec<usize> = Vec::with_capacity(demands.len());
    let mut link_load: BTreeMap<(RegionId, RegionId), f64> = BTreeMap::new();
    if !route(instance, &demands, 0, 0.0, &mut chosen, &mut link_load) {
        return None;
    }

    // Materialize the deployment.
    let mut deployment = Deployment::empty();
    for (mi, micro) in micros.iter().enumerate() {
        let entry = deployment.instance_map.entry(micro.id.clone()).or_default();
        for (ri, region) in regions.iter().enumerate() {
            if masks[mi] & (1 << ri) != 0 {
                entry.insert(region.id.clone());
            }
        }
    }
    let mut communication_delay_ms = 0.0;
    for (demand, &pick) in demands.iter().zip(&chosen) {
        let link = &instance.app.links()[demand.link_index];
        let path = demand.candidates[pick].clone();
        communication_delay_ms += path.total_delay_ms();
        deployment.link_map.insert(
            LinkMapKey {
                link_from: link.from.clone(),
                link_to: link.to.clone(),
                from_region: path.source().to_string(),
                to_region: path.destination().to_string(),
            },
            path,
        );
    }

    let public_instance_count: usize = masks
        .iter()
        .map(|m| {
            (0..r)
                .filter(|ri| regions[*ri].kind.is_public() && m & (1 << ri) != 0)
                .count()
        })
        .sum();
    Some(ExactSolution {
        deployment,
        public_instance_count,
        objective: instance.cost_model.per_microservice_unit_cost * public_instance_count as f64,
        processing_delay_s,
        communication_delay_s: communication_delay_ms / 1000.0,
    })
}

fn route(
    instance: &ExactInstance<'_>,
    demands: &[PathDemand],
    index: usize,
    delay_so_far_ms: f64,
    chosen: &mut Vec<usize>,
    link_load: &mut BTreeMap<(RegionId, RegionId), f64>,
) -> bool {
    if index == demands.len() {
        return true;
    }
    let demand = &demands[index];
    let lambda = instance.app.links()[demand.link_index].max_throughput_mbps;
    let zeta_ms = instance.zeta_s * 1000.0;
    for (pi, path) in demand.candidates.iter().enumerate() {
        if delay_so_far_ms + path.total_delay_ms() > zeta_ms {
            continue;
        }
        let fits = path.hops().iter().all(|hop| {
            let used = link_load
                .get(&(hop.from.clone(), hop.to.clone()))
                .copied()
                .unwrap_or(0.0);
            used + lambda <= hop.bandwidth_mbps
        });
        if !fits {
            continue;
        }
        for hop in path.hops() {
            *link_load
                .entry((hop.from.clone(), hop.to.clone()))
                .or_insert(0.0) += lambda;
        }
        chosen.push(pi);
        if route(
            instance,
            demands,
            index + 1,
            delay_so_far_ms + path.total_delay_ms(),
            chosen,
            link_load,
        ) {
            return true;
        }
        chosen.pop();
        for hop in path.hops() {
            *link_load
                .get_mut(&(hop.from.clone(), hop.to.clone()))
                .unwrap() -= lambda;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{AppLink, Microservice, NetLink, Region, RegionKind};

    fn region(id: &str, kind: RegionKind, cpu: f64, delay: f64) -> Region {
        Region {
            id: id.into(),
            kind,
            capacity: CapacityVector::new(8192.0, cpu, 100.0),
            access_delay_ms: delay,
        }
    }

    fn micro(id: &str, cpu: f64, work: f64) -> Microservice {
        Microservice {
            id: id.into(),
            demand: CapacityVector::new(200.0, cpu, 2.0),
            work_per_request_mi: work,
        }
    }

    fn mesh(regions: Vec<Region>) -> Topology {
        let ids: Vec<String> = regions.iter().map(|r| r.id.clone()).collect();
        let mut links = Vec::new();
        for a in &ids {
            for b in &ids {
                if a != b {
                    links.push(NetLink {
                        from: a.clone(),
                        to: b.clone(),
                        delay_ms: 20.0,
                        bandwidth_mbps: 700.0,
                    });
                }
            }
        }
        Topology::new(regions, links, 2).unwrap()
    }

    fn requests_for(app: &Application, n: u64) -> BTreeMap<ServiceId, u64> {
        app.microservices()
            .iter()
            .map(|m| (m.id.clone(), n))
            .collect()
    }

    #[test]
    fn processing_budget_arithmetic() {
        // One microservice, 10 requests of 500 MI each, residual 2500 MIPS:
        // 2 seconds of processing.
        let topo = mesh(vec![region("r", RegionKind::EdgePrivate, 2600.0, 10.0)]);
        let app = Application::new(vec![micro("m", 100.0, 500.0)], vec![], "m".into()).unwrap();
        let mut deployment = Deployment::empty();
        deployment
            .instance_map
            .entry("m".into())
            .or_default()
            .insert("r".into());
        let mut instance = ExactInstance {
            topology: &topo,
            app: &app,
            requests: requests_for(&app, 10),
            psi_s: 3.0,
            zeta_s: 0.5,
            cost_model: CostModel::default(),
        };
        assert!(check_full(&instance, &deployment).is_empty());
        instance.psi_s = 1.5;
        let violations = check_full(&instance, &deployment);
        assert!(violations.iter().any(|v| matches!(
            v,
            Violation::ProcessingBudgetExceeded { total_s, .. } if (*total_s - 2.0).abs() < 1e-12
        )));
    }

    #[test]
    fn colocated_deployment_has_no_communication_violation() {
        let topo = mesh(vec![region("r", RegionKind::EdgePrivate, 4000.0, 10.0)]);
        let app = Application::new(
            vec![micro("a", 100.0, 10.0), micro("b", 100.0, 10.0)],
            vec![AppLink {
                from: "a".into(),
                to: "b".into(),
                max_delay_ms: 100.0,
                max_throughput_mbps: 20.0,
            }],
            "a".into(),
        )
        .unwrap();
        let mut deployment = Deployment::empty();
        deployment
            .instance_map
            .entry("a".into())
            .or_default()
            .insert("r".into());
        deployment
            .instance_map
            .entry("b".into())
            .or_default()
            .insert("r".into());
        let instance = ExactInstance {
            topology: &topo,
            app: &app,
            requests: requests_for(&app, 5),
            psi_s: 10.0,
            zeta_s: 0.0,
            cost_model: CostModel::default(),
        };
        assert!(check_full(&instance, &deployment).is_empty());
    }

    #[test]
    fn zero_cost_when_private_fits() {
        let topo = mesh(vec![
            region("edge", RegionKind::EdgePrivate, 4000.0, 10.0),
            region("public", RegionKind::Public, 8000.0, 40.0),
        ]);
        let app = Application::new(
            vec![micro("a", 300.0, 20.0), micro("b", 400.0, 30.0)],
            vec![AppLink {
                from: "a".into(),
                to: "b".into(),
                max_delay_ms: 100.0,
                max_throughput_mbps: 20.0,
            }],
            "a".into(),
        )
        .unwrap();
        let instance = ExactInstance {
            topology: &topo,
            app: &app,
            requests: requests_for(&app, 10),
            psi_s: 3.0,
            zeta_s: 0.5,
            cost_model: CostModel::default(),
        };
        let solution = solve_exact(&instance).unwrap();
        assert_eq!(solution.public_instance_count, 0);
        assert_eq!(solution.objective, 0.0);
        assert!(check_full(&instance, &solution.deployment).is_empty());
    }

    #[test]
    fn forced_single_public_instance() {
        // The private region can hold only one of the two microservices.
        let topo = mesh(vec![
            region("edge", RegionKind::EdgePrivate, 500.0, 10.0),
            region("public", RegionKind::Public, 8000.0, 40.0),
        ]);
        let app = Application::new(
            vec![micro("a", 300.0, 5.0), micro("b", 400.0, 5.0)],
            vec![AppLink {
                from: "a".into(),
                to: "b".into(),
                max_delay_ms: 100.0,
                max_throughput_mbps: 20.0,
            }],
            "a".into(),
        )
        .unwrap();
        let instance = ExactInstance {
            topology: &topo,
            app: &app,
            requests: requests_for(&app, 1),
            psi_s: 5.0,
            zeta_s: 0.5,
            cost_model: CostModel::default(),
        };
        let solution = solve_exact(&instance).unwrap();
        assert_eq!(solution.public_instance_count, 1);
        assert_eq!(solution.objective, 1.0);
        assert!(check_full(&instance, &solution.deployment).is_empty());
    }

    #[test]
    fn infeasible_when_demand_exceeds_everything() {
        let topo = mesh(vec![
            region("edge", RegionKind::EdgePrivate, 100.0, 10.0),
            region("public", RegionKind::Public, 100.0, 40.0),
        ]);
        let app = Application::new(vec![micro("a", 300.0, 5.0)], vec![], "a".into()).unwrap();
        let instance = ExactInstance {
            topology: &topo,
            app: &app,
            requests: requests_for(&app, 1),
            psi_s: 5.0,
            zeta_s: 0.5,
            cost_model: CostModel::default(),
        };
        assert_eq!(solve_exact(&instance), Err(SolveError::Infeasible));
    }

    #[test]
    fn guard_rejects_oversized_instances() {
        let regions: Vec<Region> = (0..5)
            .map(|i| region(&format!("r{i}"), RegionKind::EdgePrivate, 4000.0, 10.0))
            .collect();
        let topo = mesh(regions);
        let micros: Vec<Microservice> = (0..6)
            .map(|i| micro(&format!("m{i}"), 100.0, 5.0))
            .collect();
        let links: Vec<AppLink> = (1..6)
            .map(|i| AppLink {
                from: format!("m{}", i - 1),
                to: format!("m{i}"),
                max_delay_ms: 100.0,
                max_throughput_mbps: 20.0,
            })
            .collect();
        let app = Application::new(micros, links, "m0".into()).unwrap();
        let instance = ExactInstance {
            topology: &topo,
            app: &app,
            requests: requests_for(&app, 1),
            psi_s: 5.0,
            zeta_s: 0.5,
            cost_model: CostModel::default(),
        };
        assert_eq!(
            solve_exact(&instance),
            Err(SolveError::InstanceTooLarge { bits: 30 })
        );
    }
}
