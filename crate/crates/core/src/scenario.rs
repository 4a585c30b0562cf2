//! Scenario files: the JSON document describing one experiment, its
//! validation into runnable configs, and the range-based instance sampler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    AppLink, Application, CapacityVector, CostModel, Microservice, NetLink, Region, RegionKind,
    Topology,
};
use crate::dsr::DsrConfig;
use crate::engine::{NoiseModel, Policy, RequestPattern, ScenarioConfig};
use crate::mea::MeaSettings;
use crate::placement::PlacementConfig;

/// Communication budget applied when a scenario does not state a maximum
/// completion time: the processing budget plus half a second.
pub const DEFAULT_ZETA_S: f64 = 0.5;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    #[serde(default = "default_max_path_hops")]
    pub max_path_hops: usize,
    pub regions: Vec<Region>,
    pub links: Vec<NetLink>,
}

fn default_max_path_hops() -> usize {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApplicationSpec {
    pub entry: String,
    pub microservices: Vec<Microservice>,
    pub links: Vec<AppLink>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_noise_range")]
    pub range_mips: (f64, f64),
    /// Separate noise seed; defaults to the scenario seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_noise_range() -> (f64, f64) {
    (0.0, 250.0)
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            enabled: false,
            range_mips: default_noise_range(),
            seed: None,
        }
    }
}

/// One experiment: instance, controller parameters, policies to run, and
/// the request/noise processes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub seed: u64,
    pub topology: TopologySpec,
    pub application: ApplicationSpec,
    pub placement: PlacementConfig,
    pub dsr: DsrConfig,
    pub policies: Vec<Policy>,
    #[serde(default)]
    pub mea: MeaSettings,
    pub pattern: RequestPattern,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub cost_model: CostModel,
    /// Maximum allowed completion time; defaults to `dsr.psi_s + 0.5`.
    #[serde(default)]
    pub max_completion_s: Option<f64>,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn max_completion_s(&self) -> f64 {
        self.max_completion_s
            .unwrap_or(self.dsr.psi_s + DEFAULT_ZETA_S)
    }

    /// Validates the document and builds one runnable config per listed
    /// policy. `seed_override` takes precedence over the file seed.
    pub fn configs(
        &self,
        seed_override: Option<u64>,
    ) -> Result<Vec<ScenarioConfig>, ScenarioError> {
        let topology = Topology::new(
            self.topology.regions.clone(),
            self.topology.links.clone(),
            self.topology.max_path_hops,
        )
        .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        let app = Application::new(
            self.application.microservices.clone(),
            self.application.links.clone(),
            self.application.entry.clone(),
        )
        .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        self.placement
            .validate(&app)
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        self.dsr
            .validate()
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        if self.policies.is_empty() {
            return Err(ScenarioError::Invalid("policies must not be empty".into()));
        }
        // Ids end up in CSV cells and pipe-joined lists.
        let id_ok = |id: &str| {
            !id.is_empty()
                && id
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        };
        for r in self.topology.regions.iter().map(|r| r.id.as_str()) {
            if !id_ok(r) {
                return Err(ScenarioError::Invalid(format!(
                    "region id {r:?} must be alphanumeric with '-' or '_'"
                )));
            }
        }
        for m in self.application.microservices.iter().map(|m| m.id.as_str()) {
            if !id_ok(m) {
                return Err(ScenarioError::Invalid(format!(
                    "microservice id {m:?} must be alphanumeric with '-' or '_'"
                )));
            }
        }
        if self.pattern.length() == 0 {
            return Err(ScenarioError::Invalid(
                "pattern length must be positive".into(),
            ));
        }
        if self.mea.grid < 10 {
            return Err(ScenarioError::Invalid(
                "mea.grid must be at least 10".into(),
            ));
        }
        let max_completion_s = self.max_completion_s();
        let zeta_s = max_completion_s - self.dsr.psi_s;
        if zeta_s < 0.0 {
            return Err(ScenarioError::Invalid(
                "max_completion_s must not be below dsr.psi_s".into(),
            ));
        }
        let seed = seed_override.unwrap_or(self.seed);
        let noise = NoiseModel {
            enabled: self.noise.enabled,
            range_mips: self.noise.range_mips,
            seed: self.noise.seed.unwrap_or(seed),
        };
        if noise.range_mips.0 > noise.range_mips.1 || noise.range_mips.0 < 0.0 {
            return Err(ScenarioError::Invalid(
                "noise range must be 0 <= lo <= hi".into(),
            ));
        }
        Ok(self
            .policies
            .iter()
            .map(|&policy| ScenarioConfig {
                topology: topology.clone(),
                app: app.clone(),
                placement: self.placement,
                dsr: self.dsr,
                policy,
                pattern: self.pattern.clone(),
                noise: noise.clone(),
                max_completion_s,
                zeta_s,
                cost_model: self.cost_model.clone(),
                mea: self.mea.clone(),
                seed,
            })
            .collect())
    }
}

/// Closed interval a value is drawn from.
pub type Interval = (f64, f64);

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionRanges {
    pub memory_gb: Interval,
    pub cpu_mips: Interval,
    pub storage_gb: Interval,
    pub bandwidth_mbps: Interval,
    pub delay_ms: Interval,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicroserviceRanges {
    pub count: usize,
    pub memory_mb: Interval,
    pub cpu_mips: Interval,
    pub storage_gb: Interval,
    pub max_throughput_mbps: Interval,
    pub max_delay_ms: f64,
    pub work_per_request_mi: Interval,
}

/// Per-kind intervals used to sample a concrete instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangesFile {
    pub edge: RegionRanges,
    pub central: RegionRanges,
    pub public: RegionRanges,
    pub microservices: MicroserviceRanges,
}

impl RangesFile {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let all = [
            ("edge", &self.edge),
            ("central", &self.central),
            ("public", &self.public),
        ];
        for (name, r) in all {
            for (field, iv) in [
                ("memory_gb", r.memory_gb),
                ("cpu_mips", r.cpu_mips),
                ("storage_gb", r.storage_gb),
                ("bandwidth_mbps", r.bandwidth_mbps),
                ("delay_ms", r.delay_ms),
            ] {
                if iv.0 > iv.1 {
                    return Err(ScenarioError::Invalid(format!(
                        "inverted interval {name}.{field}: [{}, {}]",
                        iv.0, iv.1
                    )));
                }
            }
        }
        let m = &self.microservices;
        for (field, iv) in [
            ("memory_mb", m.memory_mb),
            ("cpu_mips", m.cpu_mips),
            ("storage_gb", m.storage_gb),
            ("max_throughput_mbps", m.max_throughput_mbps),
            ("work_per_request_mi", m.work_per_request_mi),
        ] {
            if iv.0 > iv.1 {
                return Err(ScenarioError::Invalid(format!(
                    "inverted interval microservices.{field}: [{}, {}]",
                    iv.0, iv.1
                )));
            }
        }
        if m.count < 2 {
            return Err(ScenarioError::Invalid(
                "microservices.count must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

/// The sampled part of a scenario: a concrete topology and application that
/// can be merged into a full scenario document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFragment {
    pub topology: TopologySpec,
    pub application: ApplicationSpec,
}

fn draw(rng: &mut ChaCha8Rng, iv: Interval) -> f64 {
    if iv.1 > iv.0 {
        rng.gen_range(iv.0..=iv.1)
    } else {
        iv.0
    }
}

/// Samples a three-region instance (edge, central, public; fully connected)
/// and a chain application, uniformly within the configured intervals.
///
/// Inter-region link delays are the mean of the two endpoint delays and the
/// bandwidth the minimum of the two endpoint draws, so links between private
/// regions come out faster than links involving the public region.
pub fn sample_instance(ranges: &RangesFile, seed: u64) -> Result<InstanceFragment, ScenarioError> {
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let kinds = [
        ("edge", RegionKind::EdgePrivate, &ranges.edge),
        ("central", RegionKind::CentralPrivate, &ranges.central),
        ("public", RegionKind::Public, &ranges.public),
    ];
    let mut regions = Vec::new();
    let mut delays = Vec::new();
    let mut bandwidths = Vec::new();
    for (id, kind, r) in kinds {
        let delay = draw(&mut rng, r.delay_ms);
        regions.push(Region {
            id: id.to_string(),
            kind,
            capacity: CapacityVector::new(
                draw(&mut rng, r.memory_gb) * 1024.0,
                draw(&mut rng, r.cpu_mips),
                draw(&mut rng, r.storage_gb),
            ),
            access_delay_ms: delay,
        });
        delays.push(delay);
        bandwidths.push(draw(&mut rng, r.bandwidth_mbps));
    }
    let mut links = Vec::new();
    for i in 0..regions.len() {
        for j in 0..regions.len() {
            if i != j {
                links.push(NetLink {
                    from: regions[i].id.clone(),
                    to: regions[j].id.clone(),
                    delay_ms: (delays[i] + delays[j]) / 2.0,
                    bandwidth_mbps: bandwidths[i].min(bandwidths[j]),
                });
            }
        }
    }

    let m = &ranges.microservices;
    let mut microservices = Vec::new();
    for index in 1..=m.count {
        microservices.push(Microservice {
            id: format!("m{index}"),
            demand: CapacityVector::new(
                draw(&mut rng, m.memory_mb),
                draw(&mut rng, m.cpu_mips),
                draw(&mut rng, m.storage_gb),
            ),
            work_per_request_mi: draw(&mut rng, m.work_per_request_mi),
        });
    }
    let app_links = (1..m.count)
        .map(|i| AppLink {
            from: format!("m{i}"),
            to: format!("m{}", i + 1),
            max_delay_ms: m.max_delay_ms,
            max_throughput_mbps: draw(&mut rng, m.max_throughput_mbps),
        })
        .collect();

    Ok(InstanceFragment {
        topology: TopologySpec {
            max_path_hops: 2,
            regions,
            links,
        },
        application: ApplicationSpec {
            entry: "m1".into(),
            microservices,
            links: app_links,
        },
    })
}

/// The default sampling intervals: edge capacities below central below
/// public, constant 100 ms link tolerance for the application.
pub fn default_ranges() -> RangesFile {
    RangesFile {
        edge: RegionRanges {
            memory_gb: (4.0, 16.0),
            cpu_mips: (2000.0, 4000.0),
            storage_gb: (20.0, 100.0),
            bandwidth_mbps: (400.0, 800.0),
            delay_ms: (10.0, 50.0),
        },
        central: RegionRanges {
            memory_gb: (6.0, 16.0),
            cpu_mips: (4000.0, 6000.0),
            storage_gb: (20.0, 100.0),
            bandwidth_mbps: (400.0, 800.0),
            delay_ms: (20.0, 50.0),
        },
        public: RegionRanges {
            memory_gb: (8.0, 32.0),
            cpu_mips: (4000.0, 8000.0),
            storage_gb: (40.0, 100.0),
            bandwidth_mbps: (400.0, 1000.0),
            delay_ms: (30.0, 100.0),
        },
        microservices: MicroserviceRanges {
            count: 5,
            memory_mb: (100.0, 500.0),
            cpu_mips: (100.0, 900.0),
            storage_gb: (1.0, 6.0),
            max_throughput_mbps: (10.0, 50.0),
            max_delay_ms: 100.0,
            work_per_request_mi: (20.0, 160.0),
        },
    }
}
