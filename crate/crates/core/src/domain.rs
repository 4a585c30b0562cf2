//! Model types for the hybrid cloud and the application, plus the primitive
//! computations (residual capacity, processing rate, path enumeration,
//! deployment validity) shared by every other module.
//!
//! The infrastructure is a directed weighted graph of regions; the
//! application is a directed weighted graph of microservices. A `Deployment`
//! maps microservice instances onto regions and application links onto
//! physical paths.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Region identifier. Unique within a [`Topology`].
pub type RegionId = String;
/// Microservice identifier. Unique within an [`Application`].
pub type ServiceId = String;

/// Memory (MB), CPU (MIPS) and storage (GB) of a region or a microservice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityVector {
    pub memory_mb: f64,
    pub cpu_mips: f64,
    pub storage_gb: f64,
}

impl CapacityVector {
    pub fn new(memory_mb: f64, cpu_mips: f64, storage_gb: f64) -> Self {
        Self {
            memory_mb,
            cpu_mips,
            storage_gb,
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn add(&self, other: &CapacityVector) -> CapacityVector {
        CapacityVector::new(
            self.memory_mb + other.memory_mb,
            self.cpu_mips + other.cpu_mips,
            self.storage_gb + other.storage_gb,
        )
    }

    pub fn sub(&self, other: &CapacityVector) -> CapacityVector {
        CapacityVector::new(
            self.memory_mb - other.memory_mb,
            self.cpu_mips - other.cpu_mips,
            self.storage_gb - other.storage_gb,
        )
    }

    /// Component-wise `self >= other`.
    pub fn covers(&self, other: &CapacityVector) -> bool {
        self.memory_mb >= other.memory_mb
            && self.cpu_mips >= other.cpu_mips
            && self.storage_gb >= other.storage_gb
    }

    pub fn is_non_negative(&self) -> bool {
        self.memory_mb >= 0.0 && self.cpu_mips >= 0.0 && self.storage_gb >= 0.0
    }
}

/// Which resource component a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Resource {
    Memory,
    Cpu,
    Storage,
}

/// Kind of a region. Private regions (edge or central) are owned
/// infrastructure; public regions are rented pay-per-use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    EdgePrivate,
    CentralPrivate,
    Public,
}

impl RegionKind {
    pub fn is_public(self) -> bool {
        matches!(self, RegionKind::Public)
    }
}

/// A geographic pool of compute resources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: RegionId,
    pub kind: RegionKind,
    pub capacity: CapacityVector,
    /// Users' propagation delay to reach this region, in milliseconds.
    pub access_delay_ms: f64,
}

/// A directed network link between two regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetLink {
    pub from: RegionId,
    pub to: RegionId,
    pub delay_ms: f64,
    pub bandwidth_mbps: f64,
}

/// The infrastructure graph: regions plus directed weighted links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    regions: Vec<Region>,
    links: Vec<NetLink>,
    /// Bound on the number of hops considered during path enumeration.
    pub max_path_hops: usize,
}

impl Topology {
    /// Builds a topology, validating region uniqueness, link endpoints,
    /// positive link weights and reachability of a public region from every
    /// private one (when a public region exists).
    pub fn new(
        regions: Vec<Region>,
        links: Vec<NetLink>,
        max_path_hops: usize,
    ) -> Result<Self, DomainError> {
        let mut seen = BTreeSet::new();
        for r in &regions {
            if !seen.insert(r.id.clone()) {
                return Err(DomainError::DuplicateRegion(r.id.clone()));
            }
            if !r.capacity.is_non_negative() {
                return Err(DomainError::InvalidCapacity(r.id.clone()));
            }
        }
        for l in &links {
            if l.from == l.to {
                return Err(DomainError::SelfLoop(l.from.clone()));
            }
            if !seen.contains(&l.from) || !seen.contains(&l.to) {
                return Err(DomainError::UnknownRegion(format!("{}->{}", l.from, l.to)));
            }
            if l.delay_ms <= 0.0 || l.bandwidth_mbps <= 0.0 {
                return Err(DomainError::InvalidLink(l.from.clone(), l.to.clone()));
            }
        }
        let topo = Self {
            regions,
            links,
            max_path_hops,
        };
        // Every private region must be able to reach some public region.
        let publics: Vec<&Region> = topo.regions.iter().filter(|r| r.kind.is_public()).collect();
        if !publics.is_empty() {
            for r in topo.regions.iter().filter(|r| !r.kind.is_public()) {
                let reach = topo.reachable_from(&r.id);
                if !publics.iter().any(|p| reach.contains(&p.id)) {
                    return Err(DomainError::PublicUnreachable(r.id.clone()));
                }
            }
        }
        Ok(topo)
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn links(&self) -> &[NetLink] {
        &self.links
    }

    pub fn region(&self, id: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.id == id)
    }

    pub fn link(&self, from: &str, to: &str) -> Option<&NetLink> {
        self.links.iter().find(|l| l.from == from && l.to == to)
    }

    /// A copy of the topology with `mips` subtracted from one region's CPU
    /// capacity (clamped at zero), modeling transient interference.
    pub fn with_cpu_reduced(&self, region: &str, mips: f64) -> Topology {
        let mut clone = self.clone();
        if let Some(r) = clone.regions.iter_mut().find(|r| r.id == region) {
            r.capacity.cpu_mips = (r.capacity.cpu_mips - mips).max(0.0);
        }
        clone
    }

    fn reachable_from(&self, start: &str) -> BTreeSet<RegionId> {
        let mut seen: BTreeSet<RegionId> = BTreeSet::new();
        let mut queue = VecDeque::new();
        seen.insert(start.to_string());
        queue.push_back(start.to_string());
        while let Some(cur) = queue.pop_front() {
            for l in self.links.iter().filter(|l| l.from == cur) {
                if seen.insert(l.to.clone()) {
                    queue.push_back(l.to.clone());
                }
            }
        }
        seen
    }
}

/// A simple directed path through the region graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    hops: Vec<NetLink>,
    total_delay_ms: f64,
    bottleneck_bw_mbps: f64,
}

impl Path {
    /// Builds a path from contiguous hops; rejects empty, non-contiguous or
    /// non-simple hop sequences.
    pub fn new(hops: Vec<NetLink>) -> Result<Self, DomainError> {
        if hops.is_empty() {
            return Err(DomainError::EmptyPath);
        }
        let mut visited = BTreeSet::new();
        visited.insert(hops[0].from.clone());
        for (i, hop) in hops.iter().enumerate() {
            if i > 0 && hops[i - 1].to != hop.from {
                return Err(DomainError::BrokenPath);
            }
            if !visited.insert(hop.to.clone()) {
                return Err(DomainError::RepeatedRegion(hop.to.clone()));
            }
        }
        let total_delay_ms = hops.iter().map(|h| h.delay_ms).sum();
        let bottleneck_bw_mbps = hops
            .iter()
            .map(|h| h.bandwidth_mbps)
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            hops,
            total_delay_ms,
            bottleneck_bw_mbps,
        })
    }

    pub fn hops(&self) -> &[NetLink] {
        &self.hops
    }

    pub fn source(&self) -> &str {
        &self.hops[0].from
    }

    pub fn destination(&self) -> &str {
        &self.hops[self.hops.len() - 1].to
    }

    pub fn total_delay_ms(&self) -> f64 {
        self.total_delay_ms
    }

    pub fn bottleneck_bw_mbps(&self) -> f64 {
        self.bottleneck_bw_mbps
    }

    /// Ordered region ids traversed, source first.
    pub fn region_seq(&self) -> Vec<RegionId> {
        let mut seq = vec![self.hops[0].from.clone()];
        seq.extend(self.hops.iter().map(|h| h.to.clone()));
        seq
    }
}

/// A single application module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Microservice {
    pub id: ServiceId,
    pub demand: CapacityVector,
    /// CPU instructions (MI) required to process one request.
    pub work_per_request_mi: f64,
}

/// A directed API call between two microservices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppLink {
    pub from: ServiceId,
    pub to: ServiceId,
    /// Maximum delay the call tolerates, in milliseconds.
    pub max_delay_ms: f64,
    /// Maximum throughput generated from `from` to `to`, in Mbps.
    pub max_throughput_mbps: f64,
}

/// The application graph: microservices plus directed weighted links.
///
/// `entry` is the first microservice users reach; every microservice must be
/// reachable from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Application {
    microservices: Vec<Microservice>,
    links: Vec<AppLink>,
    pub entry: ServiceId,
}

impl Application {
    pub fn new(
        microservices: Vec<Microservice>,
        links: Vec<AppLink>,
        entry: ServiceId,
    ) -> Result<Self, DomainError> {
        let mut seen = BTreeSet::new();
        for m in &microservices {
            if !seen.insert(m.id.clone()) {
                return Err(DomainError::DuplicateMicroservice(m.id.clone()));
            }
            if m.demand.memory_mb <= 0.0 || m.demand.cpu_mips <= 0.0 || m.demand.storage_gb <= 0.0 {
                return Err(DomainError::InvalidDemand(m.id.clone()));
            }
            if m.work_per_request_mi <= 0.0 {
                return Err(DomainError::InvalidDemand(m.id.clone()));
            }
        }
        for l in &links {
            if !seen.contains(&l.from) || !seen.contains(&l.to) {
                return Err(DomainError::UnknownMicroservice(format!(
                    "{}->{}",
                    l.from, l.to
                )));
            }
            if l.max_delay_ms <= 0.0 || l.max_throughput_mbps <= 0.0 {
                return Err(DomainError::InvalidAppLink(l.from.clone(), l.to.clone()));
            }
        }
        if !seen.contains(&entry) {
            return Err(DomainError::UnknownMicroservice(entry));
        }
        let app = Self {
            microservices,
            links,
            entry,
        };
        // Reachability from the entry is required for the traversal order.
        let mut reached = BTreeSet::new();
        let mut queue = VecDeque::new();
        reached.insert(app.entry.clone());
        queue.push_back(app.entry.clone());
        while let Some(cur) = queue.pop_front() {
            for l in app.links.iter().filter(|l| l.from == cur) {
                if reached.insert(l.to.clone()) {
                    queue.push_back(l.to.clone());
                }
            }
        }
        for m in &app.microservices {
            if !reached.contains(&m.id) {
                return Err(DomainError::Unreachable(m.id.clone()));
            }
        }
        Ok(app)
    }

    pub fn microservices(&self) -> &[Microservice] {
        &self.microservices
    }

    pub fn links(&self) -> &[AppLink] {
        &self.links
    }

    pub fn microservice(&self, id: &str) -> Option<&Microservice> {
        self.microservices.iter().find(|m| m.id == id)
    }
}

/// Key of a mapped application link: which call, between which host regions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkMapKey {
    pub link_from: ServiceId,
    pub link_to: ServiceId,
    pub from_region: RegionId,
    pub to_region: RegionId,
}

/// A mapping of microservice instances onto regions and of application links
/// onto physical paths, plus the replica-array structure used for traffic
/// redirection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    /// Instance placement: microservice id -> regions hosting an instance.
    pub instance_map: BTreeMap<ServiceId, BTreeSet<RegionId>>,
    /// Inter-region application links mapped onto physical paths.
    pub link_map: BTreeMap<LinkMapKey, Path>,
    /// The consecutive slice of microservices replicated as a unit.
    pub replicas_array: Vec<ServiceId>,
    /// Regions hosting a full copy of the replica array, in activation order.
    pub array_hosts: Vec<RegionId>,
}

impl Deployment {
    pub fn empty() -> Self {
        Self {
            instance_map: BTreeMap::new(),
            link_map: BTreeMap::new(),
            replicas_array: Vec::new(),
            array_hosts: Vec::new(),
        }
    }

    /// All microservice instances hosted in `region`.
    pub fn instances_in(&self, region: &str) -> Vec<&ServiceId> {
        self.instance_map
            .iter()
            .filter(|(_, regions)| regions.contains(region))
            .map(|(m, _)| m)
            .collect()
    }

    pub fn has_instance(&self, microservice: &str, region: &str) -> bool {
        self.instance_map
            .get(microservice)
            .map(|rs| rs.contains(region))
            .unwrap_or(false)
    }

    pub fn is_array_member(&self, microservice: &str) -> bool {
        self.replicas_array.iter().any(|m| m == microservice)
    }
}

/// Per-iteration public-cloud pricing plus the pay-per-use projection
/// parameters used for monthly cost estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Linear coefficient applied to the number of public microservices
    /// receiving traffic in a slot.
    pub per_microservice_unit_cost: f64,
    /// Price in USD per GB-second.
    pub aws_price_per_gb_s: f64,
    /// Memory footprint billed per request, in MB.
    pub aws_memory_mb: f64,
    /// Billed execution time per request, in seconds.
    pub aws_duration_s: f64,
    /// Number of simulation periods in one month.
    pub periods_per_month: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            per_microservice_unit_cost: 1.0,
            aws_price_per_gb_s: 0.0000195172,
            aws_memory_mb: 1024.0,
            aws_duration_s: 1.0,
            periods_per_month: 360.0,
        }
    }
}

/// A violated deployment constraint. Violations are data, not errors:
/// checkers report all of them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    /// Sum of hosted demands exceeds the region capacity in one component.
    CapacityExceeded {
        region: RegionId,
        resource: Resource,
        demand: f64,
        capacity: f64,
    },
    /// Mapped traffic through a physical link exceeds its bandwidth.
    BandwidthOverrun {
        from: RegionId,
        to: RegionId,
        load_mbps: f64,
        bandwidth_mbps: f64,
    },
    /// A mapped path is slower than the application link tolerates.
    DelayExceeded {
        link_from: ServiceId,
        link_to: ServiceId,
        from_region: RegionId,
        to_region: RegionId,
        delay_ms: f64,
        max_delay_ms: f64,
    },
    /// A microservice has no instance anywhere.
    MissingInstance { microservice: ServiceId },
    /// Two communicating instances live in different regions but no path is
    /// mapped for them.
    MissingPathMapping {
        link_from: ServiceId,
        link_to: ServiceId,
        from_region: RegionId,
        to_region: RegionId,
    },
    /// A path is mapped where none is required (or its endpoints do not
    /// match the mapping key).
    SpuriousPathMapping {
        link_from: ServiceId,
        link_to: ServiceId,
        from_region: RegionId,
        to_region: RegionId,
    },
    /// Aggregate processing time exceeds the processing budget.
    ProcessingBudgetExceeded { total_s: f64, budget_s: f64 },
    /// Aggregate communication delay exceeds the communication budget.
    CommunicationBudgetExceeded { total_ms: f64, budget_ms: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::CapacityExceeded {
                region,
                resource,
                demand,
                capacity,
            } => write!(
                f,
                "capacity exceeded in {region}: {resource:?} demand {demand} > capacity {capacity}"
            ),
            Violation::BandwidthOverrun {
                from,
                to,
                load_mbps,
                bandwidth_mbps,
            } => write!(
                f,
                "bandwidth overrun on {from}->{to}: mapped {load_mbps} Mbps > {bandwidth_mbps} Mbps"
            ),
            Violation::DelayExceeded {
                link_from,
                link_to,
                from_region,
                to_region,
                delay_ms,
                max_delay_ms,
            } => {
                write!(
                    f,
                    "path for {link_from}->{link_to} ({from_region}->{to_region}) takes {delay_ms} ms > {max_delay_ms} ms"
                )
            }
            Violation::MissingInstance { microservice } => {
                write!(f, "microservice {microservice} has no instance")
            }
            Violation::MissingPathMapping {
                link_from,
                link_to,
                from_region,
                to_region,
            } => {
                write!(
                    f,
                    "no path mapped for {link_from}->{link_to} ({from_region}->{to_region})"
                )
            }
            Violation::SpuriousPathMapping {
                link_from,
                link_to,
                from_region,
                to_region,
            } => {
                write!(
                    f,
                    "spurious path mapped for {link_from}->{link_to} ({from_region}->{to_region})"
                )
            }
            Violation::ProcessingBudgetExceeded { total_s, budget_s } => {
                write!(f, "processing time {total_s} s exceeds budget {budget_s} s")
            }
            Violation::CommunicationBudgetExceeded {
                total_ms,
                budget_ms,
            } => {
                write!(
                    f,
                    "communication delay {total_ms} ms exceeds budget {budget_ms} ms"
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("duplicate region id {0}")]
    DuplicateRegion(RegionId),
    #[error("region {0} has a negative capacity component")]
    InvalidCapacity(RegionId),
    #[error("self-loop link on region {0}")]
    SelfLoop(RegionId),
    #[error("link references unknown region: {0}")]
    UnknownRegion(String),
    #[error("link {0}->{1} must have positive delay and bandwidth")]
    InvalidLink(RegionId, RegionId),
    #[error("private region {0} cannot reach any public region")]
    PublicUnreachable(RegionId),
    #[error("path must contain at least one hop")]
    EmptyPath,
    #[error("path hops are not contiguous")]
    BrokenPath,
    #[error("path visits region {0} twice")]
    RepeatedRegion(RegionId),
    #[error("duplicate microservice id {0}")]
    DuplicateMicroservice(ServiceId),
    #[error("microservice {0} must have strictly positive demand and work per request")]
    InvalidDemand(ServiceId),
    #[error("application link references unknown microservice: {0}")]
    UnknownMicroservice(String),
    #[error("application link {0}->{1} must have positive delay and throughput")]
    InvalidAppLink(ServiceId, ServiceId),
    #[error("microservice {0} is not reachable from the entry")]
    Unreachable(ServiceId),
    #[error("region {region} oversubscribed on {resource:?}")]
    OverSubscribed {
        region: RegionId,
        resource: Resource,
    },
}

/// Capacity left in `region` after subtracting the demands of every instance
/// the deployment places there.
///
/// Errors with [`DomainError::OverSubscribed`] if any component would go
/// negative, which signals an invalid deployment.
pub fn residual_capacity(
    region: &Region,
    app: &Application,
    deployment: &Deployment,
) -> Result<CapacityVector, DomainError> {
    let mut used = CapacityVector::zero();
    for (m, regions) in &deployment.instance_map {
        if regions.contains(&region.id) {
            if let Some(ms) = app.microservice(m) {
                used = used.add(&ms.demand);
            }
        }
    }
    let residual = region.capacity.sub(&used);
    if residual.memory_mb < 0.0 {
        return Err(DomainError::OverSubscribed {
            region: region.id.clone(),
            resource: Resource::Memory,
        });
    }
    if residual.cpu_mips < 0.0 {
        return Err(DomainError::OverSubscribed {
            region: region.id.clone(),
            resource: Resource::Cpu,
        });
    }
    if residual.storage_gb < 0.0 {
        return Err(DomainError::OverSubscribed {
            region: region.id.clone(),
            resource: Resource::Storage,
        });
    }
    Ok(residual)
}

/// Processing rate of a region as a function of its residual CPU capacity.
///
/// The rate is linear and monotone in the residual; the identity slope makes
/// residual-proportional traffic splits equalize replica finish times.
/// Negative inputs (transient over-consumption) clamp to zero.
pub fn processing_rate(residual_cpu_mips: f64) -> f64 {
    residual_cpu_mips.max(0.0)
}

/// All simple directed paths from `from` to `to` with at most
/// `topology.max_path_hops` hops, sorted by total delay ascending, ties by
/// hop count, then by the lexicographic region sequence.
///
/// Returns an empty list when the regions are disconnected within the hop
/// bound.
pub fn enumerate_paths(topology: &Topology, from: &str, to: &str) -> Vec<Path> {
    assert_ne!(from, to, "path endpoints must differ");
    let mut found: Vec<Path> = Vec::new();
    let mut stack: Vec<NetLink> = Vec::new();
    let mut visited: BTreeSet<RegionId> = BTreeSet::new();
    visited.insert(from.to_string());
    dfs_paths(topology, from, to, &mut stack, &mut visited, &mut found);
    found.sort_by(|a, b| {
        a.total_delay_ms()
            .partial_cmp(&b.total_delay_ms())
            .unwrap()
            .then(a.hops().len().cmp(&b.hops().len()))
            .then(a.region_seq().cmp(&b.region_seq()))
    });
    found
}

fn dfs_paths(
    topology: &Topology,
    current: &str,
    target: &str,
    stack: &mut Vec<NetLink>,
    visited: &mut BTreeSet<RegionId>,
    found: &mut Vec<Path>,
) {
    if stack.len() >= topology.max_path_hops {
        return;
    }
    for link in topology.links().iter().filter(|l| l.from == current) {
        if visited.contains(&link.to) {
            continue;
        }
        stack.push(link.clone());
        if link.to == target {
            found.push(Path::new(stack.clone()).expect("DFS builds contiguous simple paths"));
        } else {
            visited.insert(link.to.clone());
            dfs_paths(topology, &link.to, target, stack, visited, found);
            visited.remove(&link.to);
        }
        stack.pop();
    }
}

/// Whether the application link `(u, v)` placed with `u` in region `i` and
/// `v` in region `j` requires a physical path `i -> j`.
///
/// No path is needed when both regions host both endpoints: each instance
/// pair then communicates locally.
pub fn path_required(deployment: &Deployment, u: &str, v: &str, i: &str, j: &str) -> bool {
    if i == j {
        return false;
    }
    deployment.has_instance(u, i)
        && deployment.has_instance(v, j)
        && !(deployment.has_instance(v, i) && deployment.has_instance(u, j))
}

/// Checks a deployment against the structural constraints: per-region
/// capacities, shared link bandwidth, per-link path delay, instance
/// completeness, and the inter-region path-mapping condition. Reports every
/// violation rather than failing fast.
pub fn validate_deployment(
    topology: &Topology,
    app: &Application,
    deployment: &Deployment,
) -> Vec<Violation> {
    let mut violations = Vec::new();

    // Capacity per region.
    for region in topology.regions() {
        let mut used = CapacityVector::zero();
        for (m, regions) in &deployment.instance_map {
            if regions.contains(&region.id) {
                if let Some(ms) = app.microservice(m) {
                    used = used.add(&ms.demand);
                }
            }
        }
        let checks = [
            (used.memory_mb, region.capacity.memory_mb, Resource::Memory),
            (used.cpu_mips, region.capacity.cpu_mips, Resource::Cpu),
            (
                used.storage_gb,
                region.capacity.storage_gb,
                Resource::Storage,
            ),
        ];
        for (demand, capacity, resource) in checks {
            if demand > capacity {
                violations.push(Violation::CapacityExceeded {
                    region: region.id.clone(),
                    resource,
                    demand,
                    capacity,
                });
            }
        }
    }

    // Every microservice deployed somewhere.
    for m in app.microservices() {
        let placed = deployment
            .instance_map
            .get(&m.id)
            .map(|rs| !rs.is_empty())
            .unwrap_or(false);
        if !placed {
            violations.push(Violation::MissingInstance {
                microservice: m.id.clone(),
            });
        }
    }

    // Per-path delay bounds and shared bandwidth accounting.
    let mut link_load: BTreeMap<(RegionId, RegionId), f64> = BTreeMap::new();
    for (key, path) in &deployment.link_map {
        let app_link = app
            .links()
            .iter()
            .find(|l| l.from == key.link_from && l.to == key.link_to);
        let Some(app_link) = app_link else {
            violations.push(Violation::SpuriousPathMapping {
                link_from: key.link_from.clone(),
                link_to: key.link_to.clone(),
                from_region: key.from_region.clone(),
                to_region: key.to_region.clone(),
            });
            continue;
        };
        if path.total_delay_ms() > app_link.max_delay_ms {
            violations.push(Violation::DelayExceeded {
                link_from: key.link_from.clone(),
                link_to: key.link_to.clone(),
                from_region: key.from_region.clone(),
                to_region: key.to_region.clone(),
                delay_ms: path.total_delay_ms(),
                max_delay_ms: app_link.max_delay_ms,
            });
        }
        for hop in path.hops() {
            *link_load
                .entry((hop.from.clone(), hop.to.clone()))
                .or_insert(0.0) += app_link.max_throughput_mbps;
        }
    }
    for ((from, to), load) in &link_load {
        let bandwidth = topology
            .link(from, to)
            .map(|l| l.bandwidth_mbps)
            .unwrap_or(0.0);
        if *load > bandwidth {
            violations.push(Violation::BandwidthOverrun {
                from: from.clone(),
                to: to.clone(),
                load_mbps: *load,
                bandwidth_mbps: bandwidth,
            });
        }
    }

    // Path-mapping condition: a path must exist exactly for the region pairs
    // where two communicating instances cannot talk locally.
    for app_link in app.links() {
        for i in topology.regions() {
            for j in topology.regions() {
                if i.id == j.id {
                    continue;
                }
                let key = LinkMapKey {
                    link_from: app_link.from.clone(),
                    link_to: app_link.to.clone(),
                    from_region: i.id.clone(),
                    to_region: j.id.clone(),
                };
                let required =
                    path_required(deployment, &app_link.from, &app_link.to, &i.id, &j.id);
                match deployment.link_map.get(&key) {
                    Some(path) => {
                        let endpoints_ok =
                            path.source() == i.id.as_str() && path.destination() == j.id.as_str();
                        if !required || !endpoints_ok {
                            violations.push(Violation::SpuriousPathMapping {
                                link_from: key.link_from,
                                link_to: key.link_to,
                                from_region: key.from_region,
                                to_region: key.to_region,
                            });
                        }
                    }
                    None => {
                        if required {
                            violations.push(Violation::MissingPathMapping {
                                link_from: key.link_from,
                                link_to: key.link_to,
                                from_region: key.from_region,
                                to_region: key.to_region,
                            });
                        }
                    }
                }
            }
        }
    }

    violations
}
