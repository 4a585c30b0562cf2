//! One-shot initial placement: traversal ordering of the application,
//! delay-based ordering of the regions, joint node and link mapping with a
//! saturation threshold, replica-array selection, and replica-array
//! placement.
//!
//! The replica array is a strict, consecutive (in traversal order) subset of
//! the microservices, replicated as a unit into every region that can take
//! it. Replicating consecutive microservices keeps their internal traffic
//! inside one region and yields a single traffic-split point.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    enumerate_paths, Application, Deployment, DomainError, LinkMapKey, Path, Region, RegionId,
    ServiceId, Topology,
};

/// An inter-region path demand: which application link, between which host
/// regions.
type LinkDemand = (ServiceId, ServiceId, RegionId, RegionId);
/// A demand resolved to a concrete physical path.
type MappedPath = (ServiceId, ServiceId, Path);

/// Parameters of the initial placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementConfig {
    /// Residual CPU (MIPS) a region must retain after any deployment.
    pub tau_mips: f64,
    /// Number of consecutive microservices in the replica array.
    pub array_size: usize,
}

impl PlacementConfig {
    pub fn validate(&self, app: &Application) -> Result<(), PlacementError> {
        if self.tau_mips < 0.0 {
            return Err(PlacementError::InvalidConfig(
                "tau_mips must be >= 0".into(),
            ));
        }
        if self.array_size < 1 || self.array_size >= app.microservices().len() {
            return Err(PlacementError::InvalidConfig(format!(
                "array_size must be in [1, {}) for this application",
                app.microservices().len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlacementError {
    #[error("invalid placement config: {0}")]
    InvalidConfig(String),
    #[error("microservice {0} is not reachable from the entry")]
    Unreachable(ServiceId),
    #[error("no region can host microservice {0}")]
    PlacementInfeasible(ServiceId),
    #[error("no feasible path for application link {0}->{1}")]
    LinkInfeasible(ServiceId, ServiceId),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Breadth-first order of the microservices starting at the entry.
///
/// Within one frontier, neighbors are visited in the order their links were
/// declared, which makes the order reproducible.
pub fn bfs_order(app: &Application) -> Result<Vec<ServiceId>, PlacementError> {
    let mut order = Vec::with_capacity(app.microservices().len());
    let mut seen: BTreeSet<ServiceId> = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(app.entry.clone());
    queue.push_back(app.entry.clone());
    while let Some(cur) = queue.pop_front() {
        order.push(cur.clone());
        for link in app.links().iter().filter(|l| l.from == cur) {
            if seen.insert(link.to.clone()) {
                queue.push_back(link.to.clone());
            }
        }
    }
    for m in app.microservices() {
        if !seen.contains(&m.id) {
            return Err(PlacementError::Unreachable(m.id.clone()));
        }
    }
    Ok(order)
}

/// Regions ordered for placement and activation: private regions first,
/// sorted by users' access delay ascending, then public regions likewise;
/// ties broken by region id.
pub fn sort_regions(topology: &Topology) -> Vec<RegionId> {
    let mut regions: Vec<&Region> = topology.regions().iter().collect();
    regions.sort_by(|a, b| {
        a.kind
            .is_public()
            .cmp(&b.kind.is_public())
            .then(a.access_delay_ms.partial_cmp(&b.access_delay_ms).unwrap())
            .then(a.id.cmp(&b.id))
    });
    regions.into_iter().map(|r| r.id.clone()).collect()
}

/// Mutable bookkeeping shared by node mapping and replica placement.
struct Mapper<'a> {
    app: &'a Application,
    topology: &'a Topology,
    cfg: &'a PlacementConfig,
    deployment: Deployment,
    /// Residual capacity per region, updated as instances are placed.
    residual: BTreeMap<RegionId, crate::domain::CapacityVector>,
    /// Throughput already mapped onto each physical link.
    link_load: BTreeMap<(RegionId, RegionId), f64>,
}

impl<'a> Mapper<'a> {
    fn new(app: &'a Application, topology: &'a Topology, cfg: &'a PlacementConfig) -> Self {
        let residual = topology
            .regions()
            .iter()
            .map(|r| (r.id.clone(), r.capacity))
            .collect();
        Self {
            app,
            topology,
            cfg,
            deployment: Deployment::empty(),
            residual,
            link_load: BTreeMap::new(),
        }
    }

    fn from_deployment(
        app: &'a Application,
        topology: &'a Topology,
        cfg: &'a PlacementConfig,
        deployment: Deployment,
    ) -> Self {
        let mut mapper = Self::new(app, topology, cfg);
        for (m, regions) in &deployment.instance_map {
            let demand = app
                .microservice(m)
                .expect("deployment references known microservice")
                .demand;
            for r in regions {
                let res = mapper.residual.get_mut(r).expect("known region");
                *res = res.sub(&demand);
            }
        }
        for (key, path) in &deployment.link_map {
            let lambda = app
                .links()
                .iter()
                .find(|l| l.from == key.link_from && l.to == key.link_to)
                .map(|l| l.max_throughput_mbps)
                .unwrap_or(0.0);
            for hop in path.hops() {
                *mapper
                    .link_load
                    .entry((hop.from.clone(), hop.to.clone()))
                    .or_insert(0.0) += lambda;
            }
        }
        mapper.deployment = deployment;
        mapper
    }

    /// Region `r` can take `demand` and keep residual CPU above tau.
    fn region_admits(&self, r: &str, demand: &crate::domain::CapacityVector) -> bool {
        let res = &self.residual[r];
        res.covers(demand) && (res.cpu_mips - demand.cpu_mips) > self.cfg.tau_mips
    }

    /// Least congested feasible path from `i` to `j` for the given link
    /// weights: every hop must retain `lambda` Mbps (counting loads pending
    /// in the same mapping step) and the total delay must stay within
    /// `max_delay`. Congestion of a path is the largest mapped throughput
    /// across its hops; ties resolve toward lower delay, then enumeration
    /// order.
    fn pick_path(
        &self,
        i: &str,
        j: &str,
        max_delay: f64,
        lambda: f64,
        pending: &BTreeMap<(RegionId, RegionId), f64>,
    ) -> Option<Path> {
        let load_on = |hop: &crate::domain::NetLink| -> f64 {
            let key = (hop.from.clone(), hop.to.clone());
            self.link_load.get(&key).copied().unwrap_or(0.0)
                + pending.get(&key).copied().unwrap_or(0.0)
        };
        let mut best: Option<(f64, f64, Path)> = None;
        for path in enumerate_paths(self.topology, i, j) {
            if path.total_delay_ms() > max_delay {
                continue;
            }
            if !path
                .hops()
                .iter()
                .all(|hop| load_on(hop) + lambda <= hop.bandwidth_mbps)
            {
                continue;
            }
            let congestion = path.hops().iter().map(load_on).fold(0.0_f64, f64::max);
            let better = match &best {
                None => true,
                Some((c, d, _)) => {
                    congestion < *c || (congestion == *c && path.total_delay_ms() < *d)
                }
            };
            if better {
                best = Some((congestion, path.total_delay_ms(), path));
            }
        }
        best.map(|(_, _, p)| p)
    }

    /// Chooses a path for every demand in order, accounting for the
    /// bandwidth the earlier picks of the same step already claim. Returns
    /// `None` (with the blocking link) as soon as one demand has no feasible
    /// path.
    fn pick_paths(&self, needed: &[LinkDemand]) -> Result<Vec<MappedPath>, (ServiceId, ServiceId)> {
        let mut pending: BTreeMap<(RegionId, RegionId), f64> = BTreeMap::new();
        let mut chosen = Vec::with_capacity(needed.len());
        for (u, v, i, j) in needed {
            let app_link = self
                .app
                .links()
                .iter()
                .find(|l| &l.from == u && &l.to == v)
                .expect("required link exists");
            match self.pick_path(
                i,
                j,
                app_link.max_delay_ms,
                app_link.max_throughput_mbps,
                &pending,
            ) {
                Some(path) => {
                    for hop in path.hops() {
                        *pending
                            .entry((hop.from.clone(), hop.to.clone()))
                            .or_insert(0.0) += app_link.max_throughput_mbps;
                    }
                    chosen.push((u.clone(), v.clone(), path));
                }
                None => return Err((u.clone(), v.clone())),
            }
        }
        Ok(chosen)
    }

    /// The inter-region path demands that placing `instances` into `region`
    /// would add: every (link, source region, destination region) triple the
    /// mapping condition requires on the tentative placement and that is not
    /// mapped yet.
    fn new_path_demands(&self, instances: &[ServiceId], region: &str) -> Vec<LinkDemand> {
        let mut tentative = self.deployment.clone();
        for m in instances {
            tentative
                .instance_map
                .entry(m.clone())
                .or_default()
                .insert(region.to_string());
        }
        let mut needed = Vec::new();
        for link in self.app.links() {
            let sources: Vec<RegionId> = tentative
                .instance_map
                .get(&link.from)
                .map(|rs| rs.iter().cloned().collect())
                .unwrap_or_default();
            let targets: Vec<RegionId> = tentative
                .instance_map
                .get(&link.to)
                .map(|rs| rs.iter().cloned().collect())
                .unwrap_or_default();
            for i in &sources {
                for j in &targets {
                    if crate::domain::path_required(&tentative, &link.from, &link.to, i, j)
                        && !self.deployment.link_map.contains_key(&LinkMapKey {
                            link_from: link.from.clone(),
                            link_to: link.to.clone(),
                            from_region: i.clone(),
                            to_region: j.clone(),
                        })
                    {
                        needed.push((link.from.clone(), link.to.clone(), i.clone(), j.clone()));
                    }
                }
            }
        }
        needed
    }

    fn commit_instance(&mut self, m: &str, region: &str) {
        let demand = self.app.microservice(m).expect("known microservice").demand;
        let res = self.residual.get_mut(region).expect("known region");
        *res = res.sub(&demand);
        self.deployment
            .instance_map
            .entry(m.to_string())
            .or_default()
            .insert(region.to_string());
    }

    fn commit_path(&mut self, u: &str, v: &str, path: Path) {
        let lambda = self
            .app
            .links()
            .iter()
            .find(|l| l.from == u && l.to == v)
            .expect("known app link")
            .max_throughput_mbps;
        for hop in path.hops() {
            *self
                .link_load
                .entry((hop.from.clone(), hop.to.clone()))
                .or_insert(0.0) += lambda;
        }
        self.deployment.link_map.insert(
            LinkMapKey {
                link_from: u.to_string(),
                link_to: v.to_string(),
                from_region: path.source().to_string(),
                to_region: path.destination().to_string(),
            },
            path,
        );
    }
}

/// Places one instance of every microservice, iterating microservices in
/// traversal order and regions in [`sort_regions`] order. A region is
/// selected if it has enough residual resources, keeps its residual CPU
/// above tau after hosting, and feasible paths exist toward every already
/// placed communication partner; the chosen paths are mapped as part of the
/// same step.
pub fn place_initial(
    app: &Application,
    topology: &Topology,
    cfg: &PlacementConfig,
) -> Result<Deployment, PlacementError> {
    cfg.validate(app)?;
    let order = bfs_order(app)?;
    let regions = sort_regions(topology);
    let mut mapper = Mapper::new(app, topology, cfg);

    for m in &order {
        let demand = app
            .microservice(m)
            .expect("ordered microservice exists")
            .demand;
        let mut placed = false;
        let mut link_blocked: Option<(ServiceId, ServiceId)> = None;
        for region in &regions {
            if !mapper.region_admits(region, &demand) {
                continue;
            }
            let needed = mapper.new_path_demands(std::slice::from_ref(m), region);
            match mapper.pick_paths(&needed) {
                Ok(chosen) => {
                    mapper.commit_instance(m, region);
                    for (u, v, path) in chosen {
                        mapper.commit_path(&u, &v, path);
                    }
                    placed = true;
                }
                Err(blocked) => {
                    link_blocked = Some(blocked);
                    continue;
                }
            }
            if placed {
                break;
            }
        }
        if !placed {
            return Err(match link_blocked {
                Some((u, v)) => PlacementError::LinkInfeasible(u, v),
                None => PlacementError::PlacementInfeasible(m.clone()),
            });
        }
    }
    Ok(mapper.deployment)
}

/// Selects the consecutive window of `size` microservices with the highest
/// total CPU demand. The scan starts at the window ending at the last
/// element of `order` and moves toward the front; among equal-demand windows
/// the one nearer the tail wins.
pub fn select_replicas_array(
    app: &Application,
    order: &[ServiceId],
    size: usize,
) -> Vec<ServiceId> {
    assert!(
        size >= 1 && size < order.len(),
        "array must be a strict, non-empty subset"
    );
    let window_cpu = |start: usize| -> f64 {
        order[start..start + size]
            .iter()
            .map(|m| {
                app.microservice(m)
                    .expect("ordered microservice exists")
                    .demand
                    .cpu_mips
            })
            .sum()
    };
    let mut best_start = order.len() - size;
    let mut best_cpu = window_cpu(best_start);
    for start in (0..order.len() - size).rev() {
        let cpu = window_cpu(start);
        if cpu > best_cpu {
            best_cpu = cpu;
            best_start = start;
        }
    }
    order[best_start..best_start + size].to_vec()
}

/// Replicates the array into every region that satisfies the placement
/// criteria: enough residual resources for the whole array, residual CPU
/// above tau afterwards, no instance of any array microservice already
/// present, and feasible paths for the array's boundary links.
///
/// The first array host is the region holding the base instances of the
/// array (when they are co-located); copies are appended in region order.
/// Zero additional copies is legal, but a single host means traffic can
/// never be redirected, which is reported as a warning.
pub fn place_replicas_arrays(
    app: &Application,
    topology: &Topology,
    base: Deployment,
    array: &[ServiceId],
    cfg: &PlacementConfig,
) -> Result<Deployment, PlacementError> {
    let regions = sort_regions(topology);
    let mut mapper = Mapper::from_deployment(app, topology, cfg, base);
    mapper.deployment.replicas_array = array.to_vec();

    // Anchor: the region already hosting the whole array from the initial
    // placement, if any.
    let anchor = {
        let first_host = array
            .first()
            .and_then(|m| mapper.deployment.instance_map.get(m))
            .and_then(|rs| rs.iter().next().cloned());
        match first_host {
            Some(region)
                if array
                    .iter()
                    .all(|m| mapper.deployment.has_instance(m, &region)) =>
            {
                Some(region)
            }
            _ => None,
        }
    };
    if let Some(region) = &anchor {
        mapper.deployment.array_hosts.push(region.clone());
    } else {
        warn!("base instances of the replica array are not co-located; no anchor host");
    }

    let array_demand = array
        .iter()
        .fold(crate::domain::CapacityVector::zero(), |acc, m| {
            acc.add(&app.microservice(m).expect("array member exists").demand)
        });

    for region in &regions {
        // Criterion: no instance of any array microservice already present.
        if array
            .iter()
            .any(|m| mapper.deployment.has_instance(m, region))
        {
            continue;
        }
        // Criteria: resources and the CPU saturation floor.
        if !mapper.region_admits(region, &array_demand) {
            continue;
        }
        // Criterion: feasible paths for every inter-region demand the copy
        // creates (its boundary links; internal array links stay inside the
        // copy and add no demand).
        let needed = mapper.new_path_demands(array, region);
        let Ok(chosen) = mapper.pick_paths(&needed) else {
            continue;
        };
        for m in array {
            mapper.commit_instance(m, region);
        }
        for (u, v, path) in chosen {
            mapper.commit_path(&u, &v, path);
        }
        mapper.deployment.array_hosts.push(region.clone());
    }

    if mapper.deployment.array_hosts.len() < 2 {
        warn!(
            "replica array has {} host(s); traffic redirection is not possible",
            mapper.deployment.array_hosts.len()
        );
    }
    Ok(mapper.deployment)
}
