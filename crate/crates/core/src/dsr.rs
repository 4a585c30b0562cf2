//! Reactive workload redirection: threshold detection with memory-based
//! hysteresis, replica-array activation/deactivation, and
//! residual-proportional traffic splitting.
//!
//! The controller watches the measured processing time of the application.
//! When it crosses the upper threshold a further replica array is activated;
//! when it falls below the lower threshold the most recently activated array
//! is released, unless the request level has not dropped enough since the
//! last activation (the memory rule that prevents decision oscillation).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{processing_rate, RegionId, Topology};
use crate::placement::sort_regions;

/// Outcome of one decision round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Activate,
    Deactivate,
    None,
}

/// When the controller captures the request level used by the memory rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestCapture {
    /// Capture on every allowed (non-none) decision.
    #[default]
    AnyDecision,
    /// Capture only when an activation is allowed.
    ActivateOnly,
}

/// Controller thresholds, expressed against the processing-time budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DsrConfig {
    /// Maximum processing time budget, in seconds.
    pub psi_s: f64,
    /// Upper threshold as a percentage of `psi_s`.
    pub upper_pct: f64,
    /// Lower threshold as a percentage of `psi_s`.
    pub lower_pct: f64,
    /// Request drop (percent) required to release a deactivation after an
    /// activation.
    pub q_pct: f64,
    /// Capture point of the remembered request level.
    #[serde(default)]
    pub capture: RequestCapture,
}

impl DsrConfig {
    pub fn validate(&self) -> Result<(), DsrError> {
        if self.psi_s <= 0.0 {
            return Err(DsrError::InvalidConfig("psi_s must be > 0".into()));
        }
        if !(0.0 < self.lower_pct && self.lower_pct < self.upper_pct && self.upper_pct <= 100.0) {
            return Err(DsrError::InvalidConfig(
                "thresholds must satisfy 0 < lower < upper <= 100".into(),
            ));
        }
        if !(0.0 < self.q_pct && self.q_pct < 100.0) {
            return Err(DsrError::InvalidConfig("q_pct must be in (0, 100)".into()));
        }
        Ok(())
    }

    pub fn upper_threshold_s(&self) -> f64 {
        self.upper_pct / 100.0 * self.psi_s
    }

    pub fn lower_threshold_s(&self) -> f64 {
        self.lower_pct / 100.0 * self.psi_s
    }
}

/// Traffic fractions over the active array hosts. Fractions are
/// non-negative and sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub fractions: BTreeMap<RegionId, f64>,
}

impl SplitConfig {
    pub fn single(host: RegionId) -> Self {
        let mut fractions = BTreeMap::new();
        fractions.insert(host, 1.0);
        Self { fractions }
    }

    pub fn fraction(&self, region: &str) -> f64 {
        self.fractions.get(region).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DsrError {
    #[error("invalid controller config: {0}")]
    InvalidConfig(String),
    #[error("all active hosts are saturated; split undefined")]
    AllSaturated,
    #[error("deployment has no array hosts")]
    NoArrayHosts,
}

/// The controller memory: which arrays are active, the last allowed
/// decision, and the request level at that decision.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    active_arrays: Vec<RegionId>,
    last_decision: Decision,
    last_requests: u64,
    /// Array hosts in activation order, fixed at construction.
    region_order: Vec<RegionId>,
    /// Elementary operations performed by the latest step.
    last_step_work: usize,
}

/// Result of one controller step. `split` is `None` when every active host
/// is saturated; callers keep the previous split in that case.
#[derive(Debug, Clone, PartialEq)]
pub struct DsrStep {
    pub decision: Decision,
    pub split: Option<SplitConfig>,
}

impl ControllerState {
    /// Builds the controller for a deployment whose array copies live in
    /// `array_hosts`. The activation order follows the region sort; the
    /// first host starts active and is never deactivated.
    pub fn new(topology: &Topology, array_hosts: &[RegionId]) -> Result<Self, DsrError> {
        if array_hosts.is_empty() {
            return Err(DsrError::NoArrayHosts);
        }
        let region_order: Vec<RegionId> = sort_regions(topology)
            .into_iter()
            .filter(|r| array_hosts.contains(r))
            .collect();
        Ok(Self {
            active_arrays: vec![region_order[0].clone()],
            last_decision: Decision::None,
            last_requests: 0,
            region_order,
            last_step_work: 0,
        })
    }

    pub fn active_arrays(&self) -> &[RegionId] {
        &self.active_arrays
    }

    pub fn region_order(&self) -> &[RegionId] {
        &self.region_order
    }

    pub fn last_decision(&self) -> Decision {
        self.last_decision
    }

    pub fn last_requests(&self) -> u64 {
        self.last_requests
    }

    /// Elementary operations (list scans and per-host arithmetic) performed
    /// by the most recent [`ControllerState::step`], for complexity
    /// measurements.
    pub fn last_step_work(&self) -> usize {
        self.last_step_work
    }

    /// One decision round: decide, apply the activation or deactivation, and
    /// recompute the traffic split over the active hosts.
    pub fn step(
        &mut self,
        current_proc_time_s: f64,
        current_requests: u64,
        residuals: &BTreeMap<RegionId, f64>,
        cfg: &DsrConfig,
    ) -> DsrStep {
        let mut work = 0usize;
        let decision = is_workload_shift_required(self, current_proc_time_s, current_requests, cfg);
        match decision {
            Decision::Activate => {
                // Next host in activation order not yet active; no-op when
                // every array is already active.
                let next = self
                    .region_order
                    .iter()
                    .inspect(|_| work += 1)
                    .find(|r| !self.active_arrays.contains(r))
                    .cloned();
                if let Some(host) = next {
                    self.active_arrays.push(host);
                }
            }
            Decision::Deactivate => {
                work += 1;
                // The first array stays active so traffic always has a home.
                if self.active_arrays.len() > 1 {
                    self.active_arrays.pop();
                }
            }
            Decision::None => {}
        }
        if decision != Decision::None {
            self.last_decision = decision;
            let capture = match cfg.capture {
                RequestCapture::AnyDecision => true,
                RequestCapture::ActivateOnly => decision == Decision::Activate,
            };
            if capture {
                self.last_requests = current_requests;
            }
        }
        work += 2 * self.active_arrays.len();
        self.last_step_work = work;
        let split = compute_split(&self.active_arrays, residuals).ok();
        DsrStep { decision, split }
    }
}

/// The decision procedure: threshold comparison plus the memory rule.
///
/// A candidate activation fires at or above the upper threshold and a
/// candidate deactivation at or below the lower one. After an allowed
/// activation, a deactivation is suppressed until the request level drops by
/// `q_pct` percent below the remembered level.
pub fn is_workload_shift_required(
    state: &ControllerState,
    current_proc_time_s: f64,
    current_requests: u64,
    cfg: &DsrConfig,
) -> Decision {
    let mut candidate = Decision::None;
    if current_proc_time_s >= cfg.upper_threshold_s() {
        candidate = Decision::Activate;
    }
    if current_proc_time_s <= cfg.lower_threshold_s() {
        candidate = Decision::Deactivate;
    }
    match state.last_decision {
        Decision::None | Decision::Deactivate => candidate,
        Decision::Activate => match candidate {
            Decision::Activate | Decision::None => candidate,
            Decision::Deactivate => {
                let release_level = state.last_requests as f64 * (1.0 - cfg.q_pct / 100.0);
                if current_requests as f64 > release_level {
                    Decision::None
                } else {
                    Decision::Deactivate
                }
            }
        },
    }
}

/// Residual-proportional traffic split over the active hosts:
/// `fraction_i = rate(residual_i) / sum_j rate(residual_j)`.
pub fn compute_split(
    active_hosts: &[RegionId],
    residuals: &BTreeMap<RegionId, f64>,
) -> Result<SplitConfig, DsrError> {
    assert!(!active_hosts.is_empty(), "split requires at least one host");
    let rates: Vec<f64> = active_hosts
        .iter()
        .map(|h| processing_rate(residuals.get(h).copied().unwrap_or(0.0)))
        .collect();
    let total: f64 = rates.iter().sum();
    if total <= 0.0 {
        return Err(DsrError::AllSaturated);
    }
    let fractions = active_hosts
        .iter()
        .zip(rates)
        .map(|(h, r)| (h.clone(), r / total))
        .collect();
    Ok(SplitConfig { fractions })
}
