//! The exact solver against a naive, unpruned full enumeration of every
//! assignment and routing combination, re-derived from scratch: the two must
//! agree on feasibility and on the optimal objective.

mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;

use common::{chain_app, mesh, region};
use fogflow_core::{
    check_full, solve_exact, Application, CostModel, ExactInstance, RegionKind, SolveError,
    Topology,
};

/// All simple directed paths `from -> to` with at most `max_hops` hops,
/// written independently of the library's enumeration. Each path is a list
/// of link indices.
fn naive_paths(topology: &Topology, from: &str, to: &str, max_hops: usize) -> Vec<Vec<usize>> {
    let links = topology.links();
    let mut found = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    fn recurse(
        links: &[fogflow_core::NetLink],
        current: &str,
        target: &str,
        max_hops: usize,
        visited: &mut Vec<String>,
        stack: &mut Vec<usize>,
        found: &mut Vec<Vec<usize>>,
    ) {
        if stack.len() >= max_hops {
            return;
        }
        for (i, l) in links.iter().enumerate() {
            if l.from != current || visited.contains(&l.to) {
                continue;
            }
            stack.push(i);
            if l.to == target {
                found.push(stack.clone());
            } else {
                visited.push(l.to.clone());
                recurse(links, &l.to, target, max_hops, visited, stack, found);
                visited.pop();
            }
            stack.pop();
        }
    }
    let mut visited = vec![from.to_string()];
    recurse(
        links,
        from,
        to,
        max_hops,
        &mut visited,
        &mut stack,
        &mut found,
    );
    found
}

/// Minimum public instance count over every feasible `(x, y)` pair, or
/// `None` when nothing is feasible. Enumerates everything; no ordering, no
/// pruning beyond skipping already-broken assignments.
fn naive_optimum(
    topology: &Topology,
    app: &Application,
    requests: &BTreeMap<String, u64>,
    psi_s: f64,
    zeta_s: f64,
) -> Option<usize> {
    let regions = topology.regions();
    let micros = app.microservices();
    let r = regions.len();
    let n = micros.len();
    let mut best: Option<usize> = None;

    'assignments: for assignment in 0..(1u64 << (n * r)) {
        let mask = |mi: usize| -> u64 { (assignment >> (mi * r)) & ((1 << r) - 1) };
        for mi in 0..n {
            if mask(mi) == 0 {
                continue 'assignments;
            }
        }
        // Capacities and residual CPU.
        let mut residual = vec![0.0f64; r];
        for (ri, reg) in regions.iter().enumerate() {
            let (mut mem, mut cpu, mut sto) = (0.0, 0.0, 0.0);
            for (mi, m) in micros.iter().enumerate() {
                if mask(mi) & (1 << ri) != 0 {
                    mem += m.demand.memory_mb;
                    cpu += m.demand.cpu_mips;
                    sto += m.demand.storage_gb;
                }
            }
            if mem > reg.capacity.memory_mb
                || cpu > reg.capacity.cpu_mips
                || sto > reg.capacity.storage_gb
            {
                continue 'assignments;
            }
            residual[ri] = reg.capacity.cpu_mips - cpu;
        }
        // Aggregate processing budget.
        let mut total = 0.0f64;
        for (mi, m) in micros.iter().enumerate() {
            let work = requests[&m.id] as f64 * m.work_per_request_mi;
            if work == 0.0 {
                continue;
            }
            let pooled: f64 = (0..r)
                .filter(|ri| mask(mi) & (1 << ri) != 0)
                .map(|ri| residual[ri])
                .sum();
            if pooled <= 0.0 {
                continue 'assignments;
            }
            total += work / pooled;
        }
        if total > psi_s {
            continue 'assignments;
        }

        // Required path slots and their candidates.
        let index_of = |id: &str| micros.iter().position(|m| m.id == id).unwrap();
        let mut slots: Vec<(usize, Vec<Vec<usize>>)> = Vec::new();
        let mut routable = true;
        for (li, link) in app.links().iter().enumerate() {
            let um = mask(index_of(&link.from));
            let vm = mask(index_of(&link.to));
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
                    let candidates: Vec<Vec<usize>> = naive_paths(
                        topology,
                        &regions[i].id,
                        &regions[j].id,
                        topology.max_path_hops,
                    )
                    .into_iter()
                    .filter(|p| {
                        let delay: f64 = p.iter().map(|&li2| topology.links()[li2].delay_ms).sum();
                        delay <= link.max_delay_ms
                    })
                    .collect();
                    if candidates.is_empty() {
                        routable = false;
                    }
                    slots.push((li, candidates));
                }
            }
        }
        if !routable {
            continue 'assignments;
        }

        // Full cartesian product over the candidates.
        let mut counters = vec![0usize; slots.len()];
        let feasible = 'product: loop {
            let mut load: BTreeMap<(String, String), f64> = BTreeMap::new();
            let mut delay_total = 0.0f64;
            for (slot, &pick) in slots.iter().zip(&counters) {
                let lambda = app.links()[slot.0].max_throughput_mbps;
                for &li2 in &slot.1[pick] {
                    let l = &topology.links()[li2];
                    *load.entry((l.from.clone(), l.to.clone())).or_insert(0.0) += lambda;
                    delay_total += l.delay_ms;
                }
            }
            let bandwidth_ok = load.iter().all(|((from, to), total_load)| {
                topology
                    .links()
                    .iter()
                    .find(|l| &l.from == from && &l.to == to)
                    .map(|l| *total_load <= l.bandwidth_mbps)
                    .unwrap_or(false)
            });
            if bandwidth_ok && delay_total <= zeta_s * 1000.0 {
                break 'product true;
            }
            // Advance the product counters.
            let mut pos = 0;
            loop {
                if pos == counters.len() {
                    break 'product false;
                }
                counters[pos] += 1;
                if counters[pos] < slots[pos].1.len() {
                    break;
                }
                counters[pos] = 0;
                pos += 1;
            }
        };
        if !feasible {
            continue 'assignments;
        }

        let pub_count: usize = (0..n)
            .map(|mi| {
                (0..r)
                    .filter(|ri| regions[*ri].kind.is_public() && mask(mi) & (1 << *ri) != 0)
                    .count()
            })
            .sum();
        best = Some(best.map_or(pub_count, |b: usize| b.min(pub_count)));
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn solver_matches_naive_enumeration(
        n in 2usize..=3,
        three_regions in any::<bool>(),
        edge_cpu in 500.0..4000.0f64,
        central_cpu in 4000.0..6000.0f64,
        public_cpu in 4000.0..8000.0f64,
        cpus in proptest::collection::vec(100.0..900.0f64, 3),
        works in proptest::collection::vec(10.0..160.0f64, 3),
        delta in 1u64..30,
        psi in 1.0..5.0f64,
        zeta in 0.03..0.5f64,
    ) {
        let mut regions = vec![
            region("edge", RegionKind::EdgePrivate, edge_cpu, 10.0),
            region("public", RegionKind::Public, public_cpu, 40.0),
        ];
        if three_regions {
            regions.insert(1, region("central", RegionKind::CentralPrivate, central_cpu, 25.0));
        }
        let topology = mesh(regions, 20.0, 60.0, 2);
        let app = chain_app(&cpus[..n], &works[..n], 20.0);
        let requests: BTreeMap<String, u64> =
            app.microservices().iter().map(|m| (m.id.clone(), delta)).collect();
        let instance = ExactInstance {
            topology: &topology,
            app: &app,
            requests: requests.clone(),
            psi_s: psi,
            zeta_s: zeta,
            cost_model: CostModel::default(),
        };

        let expected = naive_optimum(&topology, &app, &requests, psi, zeta);
        match solve_exact(&instance) {
            Ok(solution) => {
                prop_assert_eq!(Some(solution.public_instance_count), expected);
                prop_assert!((solution.objective - solution.public_instance_count as f64).abs() < 1e-12);
                let violations = check_full(&instance, &solution.deployment);
                prop_assert!(violations.is_empty(), "violations: {:?}", violations);
            }
            Err(SolveError::Infeasible) => prop_assert_eq!(expected, None),
            Err(other) => prop_assert!(false, "unexpected error: {other}"),
        }
    }
}
