//! Load-balancing baseline: chooses traffic-split fractions over the array
//! hosts by minimizing a weighted sum of bandwidth cost and maximum server
//! utilization, under single-server and single-path assumptions.
//!
//! The baseline is stateless and has no notion of a processing-time budget:
//! it is re-solved from scratch every slot and its output never depends on
//! deadlines or thresholds.

use serde::{Deserialize, Serialize};

use crate::domain::RegionId;
use crate::dsr::SplitConfig;

/// Weights of the composite objective. The link-utilization term is out of
/// scope and its weight is pinned to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeaWeights {
    /// Bandwidth-cost weight.
    pub alpha: f64,
    /// Link-utilization weight; always zero here.
    #[serde(default)]
    pub beta: f64,
    /// Maximum-server-utilization weight.
    pub gamma: f64,
}

impl MeaWeights {
    /// Load balancing with the cost term off.
    pub fn load_balancing() -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
            gamma: 1.0,
        }
    }

    /// Load balancing prioritized over bandwidth spending.
    pub fn load_balancing_prioritized() -> Self {
        Self {
            alpha: -1.0,
            beta: 0.0,
            gamma: 1.0,
        }
    }
}

/// One server (an array host region) as the baseline sees it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeaHost {
    pub region: RegionId,
    /// CPU capacity available for the array workload, in MIPS.
    pub cpu_capacity_mips: f64,
    /// Cost per Mb of traffic routed to this host.
    pub bandwidth_price: f64,
}

/// A per-slot instance of the baseline problem.
#[derive(Debug, Clone, PartialEq)]
pub struct MeaInstance {
    pub hosts: Vec<MeaHost>,
    /// Total CPU demand this slot: requests times the summed per-request
    /// work of the array microservices, in MI.
    pub cpu_demand_total_mi: f64,
    /// Total bandwidth demand this slot: requests times the average request
    /// size, in Mb.
    pub bw_demand_total_mb: f64,
}

/// Minimizes
/// `alpha * sum_i price_i * bw_demand * s_i + gamma * max_i (cpu_demand * s_i / capacity_i)`
/// over the simplex by exhaustive grid search at resolution `1/grid`,
/// followed by one refinement pass at resolution `1/(10*grid)` around the
/// incumbent. Ties resolve to the lexicographically smallest split.
pub fn solve_mea(instance: &MeaInstance, weights: &MeaWeights, grid: usize) -> SplitConfig {
    assert!(grid >= 10, "grid must be at least 10");
    assert!(
        (1..=4).contains(&instance.hosts.len()),
        "baseline supports 1 to 4 hosts"
    );
    let n = instance.hosts.len();
    if n == 1 {
        return SplitConfig::single(instance.hosts[0].region.clone());
    }

    let objective = |s: &[f64]| -> f64 {
        let bw_cost: f64 = instance
            .hosts
            .iter()
            .zip(s)
            .map(|(h, si)| h.bandwidth_price * instance.bw_demand_total_mb * si)
            .sum();
        let max_util = instance
            .hosts
            .iter()
            .zip(s)
            .map(|(h, si)| instance.cpu_demand_total_mi * si / h.cpu_capacity_mips)
            .fold(0.0_f64, f64::max);
        weights.alpha * bw_cost + weights.gamma * max_util
    };

    // Coarse pass over the lattice {k/grid : sum k = grid}.
    let mut best_ticks = vec![0usize; n];
    best_ticks[n - 1] = grid;
    let mut best_val = f64::INFINITY;
    enumerate_simplex(n, grid, &mut |ticks| {
        let s: Vec<f64> = ticks.iter().map(|&k| k as f64 / grid as f64).collect();
        let val = objective(&s);
        if val < best_val {
            best_val = val;
            best_ticks = ticks.to_vec();
        }
    });

    // Refinement at one decimal finer, within one coarse cell of the
    // incumbent.
    let fine = grid * 10;
    let center: Vec<usize> = best_ticks.iter().map(|&k| k * 10).collect();
    let mut best_fine: Vec<usize> = center.clone();
    let mut best_fine_val = f64::INFINITY;
    enumerate_simplex_near(n, fine, &center, 10, &mut |ticks| {
        let s: Vec<f64> = ticks.iter().map(|&k| k as f64 / fine as f64).collect();
        let val = objective(&s);
        if val < best_fine_val {
            best_fine_val = val;
            best_fine = ticks.to_vec();
        }
    });

    let fractions = instance
        .hosts
        .iter()
        .zip(&best_fine)
        .map(|(h, &k)| (h.region.clone(), k as f64 / fine as f64))
        .collect();
    SplitConfig { fractions }
}

/// Visits every lattice point of the simplex `{k in N^n : sum k = total}` in
/// lexicographic order.
fn enumerate_simplex(n: usize, total: usize, visit: &mut impl FnMut(&[usize])) {
    let mut ticks = vec![0usize; n];
    fn recurse(
        ticks: &mut Vec<usize>,
        index: usize,
        remaining: usize,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if index == ticks.len() - 1 {
            ticks[index] = remaining;
            visit(ticks);
            return;
        }
        for k in 0..=remaining {
            ticks[index] = k;
            recurse(ticks, index + 1, remaining - k, visit);
        }
    }
    recurse(&mut ticks, 0, total, visit);
}

/// Visits the lattice points of the simplex `{sum k = total}` whose every
/// coordinate lies within `radius` of `center`, in lexicographic order.
fn enumerate_simplex_near(
    n: usize,
    total: usize,
    center: &[usize],
    radius: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    let mut ticks = vec![0usize; n];
    fn recurse(
        ticks: &mut Vec<usize>,
        index: usize,
        remaining: usize,
        center: &[usize],
        radius: usize,
        visit: &mut impl FnMut(&[usize]),
    ) {
        let lo = center[index].saturating_sub(radius);
        let hi = center[index] + radius;
        if index == ticks.len() - 1 {
            if remaining >= lo && remaining <= hi {
                ticks[index] = remaining;
                visit(ticks);
            }
            return;
        }
        for k in lo..=hi.min(remaining) {
            ticks[index] = k;
            recurse(ticks, index + 1, remaining - k, center, radius, visit);
        }
    }
    recurse(&mut ticks, 0, total, center, radius, visit);
}

/// Per-slot parameters needed to build a [`MeaInstance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeaSettings {
    pub weights: MeaWeights,
    /// Coarse grid resolution of the simplex search.
    pub grid: usize,
    /// Average size of one request, in Mb, used for the bandwidth demand.
    pub request_size_mb: f64,
    /// Bandwidth price toward private hosts.
    pub private_bandwidth_price: f64,
    /// Bandwidth price toward public hosts.
    pub public_bandwidth_price: f64,
}

impl Default for MeaSettings {
    fn default() -> Self {
        Self {
            weights: MeaWeights::load_balancing_prioritized(),
            grid: 100,
            request_size_mb: 1.0,
            private_bandwidth_price: 1.0,
            public_bandwidth_price: 5.0,
        }
    }
}

/// Builds the per-slot instance from the request count and the array's
/// per-request work, then solves it. With zero requests the split defaults
/// to uniform.
pub fn mea_iteration(
    hosts: &[MeaHost],
    requests: u64,
    array_work_per_request_mi: f64,
    settings: &MeaSettings,
) -> SplitConfig {
    if requests == 0 {
        let n = hosts.len() as f64;
        let fractions = hosts.iter().map(|h| (h.region.clone(), 1.0 / n)).collect();
        return SplitConfig { fractions };
    }
    let instance = MeaInstance {
        hosts: hosts.to_vec(),
        cpu_demand_total_mi: requests as f64 * array_work_per_request_mi,
        bw_demand_total_mb: requests as f64 * settings.request_size_mb,
    };
    solve_mea(&instance, &settings.weights, settings.grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn host(region: &str, capacity: f64, price: f64) -> MeaHost {
        MeaHost {
            region: region.into(),
            cpu_capacity_mips: capacity,
            bandwidth_price: price,
        }
    }

    #[test]
    fn symmetric_hosts_split_evenly() {
        let instance = MeaInstance {
            hosts: vec![host("a", 4000.0, 1.0), host("b", 4000.0, 1.0)],
            cpu_demand_total_mi: 1000.0,
            bw_demand_total_mb: 10.0,
        };
        let split = solve_mea(&instance, &MeaWeights::load_balancing(), 100);
        assert!((split.fraction("a") - 0.5).abs() < 1e-9);
        assert!((split.fraction("b") - 0.5).abs() < 1e-9);
    }

    #[test]
    fn utilization_equalizes_on_capacity_ratio() {
        // Max utilization is minimized when demand*s_i/cap_i are equal:
        // capacities 4000/2000 give s = (2/3, 1/3).
        let instance = MeaInstance {
            hosts: vec![host("a", 4000.0, 1.0), host("b", 2000.0, 1.0)],
            cpu_demand_total_mi: 1000.0,
            bw_demand_total_mb: 10.0,
        };
        let split = solve_mea(&instance, &MeaWeights::load_balancing(), 100);
        assert!((split.fraction("a") - 2.0 / 3.0).abs() <= 1e-3);
        assert!((split.fraction("b") - 1.0 / 3.0).abs() <= 1e-3);
    }

    #[test]
    fn single_host_gets_everything() {
        let instance = MeaInstance {
            hosts: vec![host("only", 1000.0, 1.0)],
            cpu_demand_total_mi: 500.0,
            bw_demand_total_mb: 5.0,
        };
        let split = solve_mea(&instance, &MeaWeights::load_balancing(), 100);
        assert_eq!(split.fraction("only"), 1.0);
    }

    #[test]
    fn zero_requests_defaults_to_uniform() {
        let hosts = vec![host("a", 1000.0, 1.0), host("b", 2000.0, 5.0)];
        let split = mea_iteration(&hosts, 0, 100.0, &MeaSettings::default());
        assert!((split.fraction("a") - 0.5).abs() < 1e-9);
        assert!((split.fraction("b") - 0.5).abs() < 1e-9);
    }

    #[test]
    fn fractions_sum_to_one() {
        let instance = MeaInstance {
            hosts: vec![
                host("a", 2200.0, 1.0),
                host("b", 4700.0, 1.0),
                host("c", 6700.0, 5.0),
            ],
            cpu_demand_total_mi: 9600.0,
            bw_demand_total_mb: 40.0,
        };
        for weights in [
            MeaWeights::load_balancing(),
            MeaWeights::load_balancing_prioritized(),
        ] {
            let split = solve_mea(&instance, &weights, 50);
            let sum: f64 = split.fractions.values().sum();
            assert!((sum - 1.0).abs() < 1e-9, "{weights:?}");
        }
    }

    #[test]
    fn negative_alpha_pushes_toward_expensive_host() {
        let instance = MeaInstance {
            hosts: vec![host("private", 4000.0, 1.0), host("public", 4000.0, 5.0)],
            cpu_demand_total_mi: 1000.0,
            bw_demand_total_mb: 100.0,
        };
        let split = solve_mea(&instance, &MeaWeights::load_balancing_prioritized(), 100);
        assert!(split.fraction("public") > split.fraction("private"));
    }
}
