//! Property tests for the structural invariants: split exactness, path
//! enumeration, placement validity, window selection, the hysteresis rule,
//! and agreement between the constraint checker and an independently
//! re-derived brute-force checker.

mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;

use common::{chain_app, three_regions};
use fogflow_core::{
    bfs_order, compute_split, enumerate_paths, is_workload_shift_required, place_initial,
    place_replicas_arrays, processing_rate, select_replicas_array, validate_deployment,
    Application, ControllerState, Decision, Deployment, DsrConfig, LinkMapKey, PlacementConfig,
    Topology,
};

fn dsr_cfg() -> DsrConfig {
    DsrConfig {
        psi_s: 3.0,
        upper_pct: 90.0,
        lower_pct: 60.0,
        q_pct: 10.0,
        capture: Default::default(),
    }
}

/// Re-derivation of the structural constraints, written independently of
/// `validate_deployment`: capacities, completeness, per-path delay and
/// endpoints, shared bandwidth, and the exact path-mapping condition.
fn brute_force_accepts(topology: &Topology, app: &Application, dep: &Deployment) -> bool {
    for region in topology.regions() {
        let (mut mem, mut cpu, mut sto) = (0.0, 0.0, 0.0);
        for m in app.microservices() {
            if dep.has_instance(&m.id, &region.id) {
                mem += m.demand.memory_mb;
                cpu += m.demand.cpu_mips;
                sto += m.demand.storage_gb;
            }
        }
        if mem > region.capacity.memory_mb
            || cpu > region.capacity.cpu_mips
            || sto > region.capacity.storage_gb
        {
            return false;
        }
    }
    for m in app.microservices() {
        if dep.instance_map.get(&m.id).is_none_or(|s| s.is_empty()) {
            return false;
        }
    }
    for (key, path) in &dep.link_map {
        let Some(al) = app
            .links()
            .iter()
            .find(|l| l.from == key.link_from && l.to == key.link_to)
        else {
            return false;
        };
        if path.total_delay_ms() > al.max_delay_ms {
            return false;
        }
        if path.source() != key.from_region || path.destination() != key.to_region {
            return false;
        }
    }
    for link in topology.links() {
        let mut load = 0.0;
        for (key, path) in &dep.link_map {
            if path
                .hops()
                .iter()
                .any(|h| h.from == link.from && h.to == link.to)
            {
                load += app
                    .links()
                    .iter()
                    .find(|l| l.from == key.link_from && l.to == key.link_to)
                    .map(|l| l.max_throughput_mbps)
                    .unwrap_or(0.0);
            }
        }
        if load > link.bandwidth_mbps {
            return false;
        }
    }
    for al in app.links() {
        for i in topology.regions() {
            for j in topology.regions() {
                if i.id == j.id {
                    continue;
                }
                let required = dep.has_instance(&al.from, &i.id)
                    && dep.has_instance(&al.to, &j.id)
                    && !(dep.has_instance(&al.to, &i.id) && dep.has_instance(&al.from, &j.id));
                let mapped = dep.link_map.contains_key(&LinkMapKey {
                    link_from: al.from.clone(),
                    link_to: al.to.clone(),
                    from_region: i.id.clone(),
                    to_region: j.id.clone(),
                });
                if required != mapped {
                    return false;
                }
            }
        }
    }
    true
}

proptest! {
    #[test]
    fn split_sums_to_one_and_is_proportional(
        residuals in proptest::collection::vec(0.0..8000.0f64, 1..=5),
    ) {
        prop_assume!(residuals.iter().any(|r| *r > 0.0));
        let hosts: Vec<String> = (0..residuals.len()).map(|i| format!("r{i}")).collect();
        let map: BTreeMap<String, f64> =
            hosts.iter().cloned().zip(residuals.iter().copied()).collect();
        let split = compute_split(&hosts, &map).unwrap();
        let sum: f64 = split.fractions.values().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
        for (i, a) in hosts.iter().enumerate() {
            for (j, b) in hosts.iter().enumerate() {
                // Cross-multiplied proportionality avoids dividing by zero.
                let lhs = split.fraction(a) * residuals[j];
                let rhs = split.fraction(b) * residuals[i];
                prop_assert!((lhs - rhs).abs() < 1e-9, "{i},{j}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn processing_rate_is_homogeneous(x in 0.0..10000.0f64, k in 0.0..8.0f64) {
        let lhs = processing_rate(k * x);
        let rhs = k * processing_rate(x);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0));
    }

    #[test]
    fn paths_are_simple_and_delay_consistent(
        edge_cpu in 2000.0..4000.0f64,
        max_hops in 1usize..=3,
    ) {
        let mut topology = three_regions(edge_cpu, 5000.0, 7000.0);
        topology.max_path_hops = max_hops;
        for from in ["edge", "central", "public"] {
            for to in ["edge", "central", "public"] {
                if from == to {
                    continue;
                }
                for path in enumerate_paths(&topology, from, to) {
                    let seq = path.region_seq();
                    let mut dedup = seq.clone();
                    dedup.sort();
                    dedup.dedup();
                    prop_assert_eq!(dedup.len(), seq.len(), "repeated region in {:?}", seq);
                    let sum: f64 = path.hops().iter().map(|h| h.delay_ms).sum();
                    prop_assert_eq!(sum, path.total_delay_ms());
                    prop_assert!(path.hops().len() <= max_hops);
                }
            }
        }
    }

    #[test]
    fn placement_output_is_always_valid(
        cpus in proptest::collection::vec(100.0..900.0f64, 3..=6),
        works in proptest::collection::vec(10.0..160.0f64, 6),
        tau in 0.0..800.0f64,
        array_size in 1usize..=2,
        edge_cpu in 2000.0..4000.0f64,
        central_cpu in 4000.0..6000.0f64,
        public_cpu in 4000.0..8000.0f64,
    ) {
        let app = chain_app(&cpus, &works[..cpus.len()], 20.0);
        let topology = three_regions(edge_cpu, central_cpu, public_cpu);
        let cfg = PlacementConfig { tau_mips: tau, array_size };
        let Ok(base) = place_initial(&app, &topology, &cfg) else {
            return Ok(()); // infeasible draws are legal
        };
        prop_assert!(validate_deployment(&topology, &app, &base).is_empty());
        let order = bfs_order(&app).unwrap();
        let array = select_replicas_array(&app, &order, array_size);
        let dep = place_replicas_arrays(&app, &topology, base, &array, &cfg).unwrap();
        prop_assert!(validate_deployment(&topology, &app, &dep).is_empty());
        prop_assert!(brute_force_accepts(&topology, &app, &dep));

        // Array copies are whole and co-located per host.
        for host in &dep.array_hosts {
            for m in &dep.replicas_array {
                prop_assert!(dep.has_instance(m, host), "{m} missing in {host}");
            }
        }
    }

    #[test]
    fn chosen_window_maximizes_cpu(
        cpus in proptest::collection::vec(100.0..900.0f64, 2..=7),
        size_seed in 0usize..6,
    ) {
        prop_assume!(cpus.len() >= 2);
        let size = 1 + size_seed % (cpus.len() - 1);
        let works = vec![10.0; cpus.len()];
        let app = chain_app(&cpus, &works, 20.0);
        let order = bfs_order(&app).unwrap();
        let array = select_replicas_array(&app, &order, size);
        let sum_of = |ids: &[String]| -> f64 {
            ids.iter().map(|m| app.microservice(m).unwrap().demand.cpu_mips).sum()
        };
        let chosen = sum_of(&array);
        for start in 0..=order.len() - size {
            let window = order[start..start + size].to_vec();
            prop_assert!(chosen >= sum_of(&window) - 1e-9);
        }
    }

    #[test]
    fn validator_agrees_with_brute_force_on_mutations(
        cpus in proptest::collection::vec(100.0..600.0f64, 4..=5),
        works in proptest::collection::vec(10.0..160.0f64, 5),
        mutation in 0usize..4,
        pick in 0usize..16,
    ) {
        let app = chain_app(&cpus, &works[..cpus.len()], 20.0);
        let topology = three_regions(3500.0, 5000.0, 7000.0);
        let cfg = PlacementConfig { tau_mips: 100.0, array_size: 2 };
        let Ok(base) = place_initial(&app, &topology, &cfg) else { return Ok(()); };
        let order = bfs_order(&app).unwrap();
        let array = select_replicas_array(&app, &order, 2);
        let mut dep = place_replicas_arrays(&app, &topology, base, &array, &cfg).unwrap();

        match mutation {
            1 => {
                // Remove one instance.
                let keys: Vec<String> = dep.instance_map.keys().cloned().collect();
                let m = &keys[pick % keys.len()];
                let regions: Vec<String> =
                    dep.instance_map[m].iter().cloned().collect();
                let r = regions[pick % regions.len()].clone();
                dep.instance_map.get_mut(m).unwrap().remove(&r);
            }
            2 => {
                // Drop one path mapping, if any exist.
                let keys: Vec<LinkMapKey> = dep.link_map.keys().cloned().collect();
                if !keys.is_empty() {
                    dep.link_map.remove(&keys[pick % keys.len()]);
                }
            }
            3 => {
                // Add a mapping no placement requires.
                let al = &app.links()[pick % app.links().len()];
                let path = enumerate_paths(&topology, "central", "public").remove(0);
                dep.link_map.insert(
                    LinkMapKey {
                        link_from: al.from.clone(),
                        link_to: al.to.clone(),
                        from_region: "central".into(),
                        to_region: "public".into(),
                    },
                    path,
                );
            }
            _ => {}
        }

        let validator_ok = validate_deployment(&topology, &app, &dep).is_empty();
        let brute_ok = brute_force_accepts(&topology, &app, &dep);
        prop_assert_eq!(validator_ok, brute_ok);
    }

    #[test]
    fn controller_replay_matches_decision_procedure(
        observations in proptest::collection::vec((0.0..4.0f64, 0u64..100), 1..60),
    ) {
        let topology = three_regions(3000.0, 5000.0, 7000.0);
        let hosts =
            vec!["edge".to_string(), "central".to_string(), "public".to_string()];
        let cfg = dsr_cfg();
        let mut state = ControllerState::new(&topology, &hosts).unwrap();
        let residuals: BTreeMap<String, f64> =
            hosts.iter().map(|h| (h.clone(), 1000.0)).collect();

        // Independent transcription of the decision procedure.
        let mut last_decision = Decision::None;
        let mut last_requests = 0u64;
        let mut expected_active = 1usize;
        let mut last_activate_level: Option<u64> = None;

        for (proc_time, requests) in observations {
            let oracle = {
                let mut candidate = Decision::None;
                if proc_time >= 0.9 * cfg.psi_s {
                    candidate = Decision::Activate;
                }
                if proc_time <= 0.6 * cfg.psi_s {
                    candidate = Decision::Deactivate;
                }
                match last_decision {
                    Decision::None | Decision::Deactivate => candidate,
                    Decision::Activate => match candidate {
                        Decision::Deactivate => {
                            if requests as f64 > last_requests as f64 * 0.9 {
                                Decision::None
                            } else {
                                Decision::Deactivate
                            }
                        }
                        other => other,
                    },
                }
            };
            prop_assert_eq!(is_workload_shift_required(&state, proc_time, requests, &cfg), oracle);
            let step = state.step(proc_time, requests, &residuals, &cfg);
            prop_assert_eq!(step.decision, oracle);
            if oracle != Decision::None {
                last_decision = oracle;
                last_requests = requests;
            }
            match oracle {
                Decision::Activate => {
                    expected_active = (expected_active + 1).min(hosts.len());
                    last_activate_level = Some(requests);
                }
                Decision::Deactivate => {
                    expected_active = expected_active.saturating_sub(1).max(1);
                    // Hysteresis: a deactivation after an activation only
                    // fires once requests dropped far enough.
                    if let Some(n) = last_activate_level.take() {
                        prop_assert!(requests as f64 <= n as f64 * 0.9 + 1e-9);
                    }
                }
                Decision::None => {}
            }
            // Activation follows the fixed order, deactivation is LIFO, so
            // the active set is always a prefix of the host order.
            prop_assert_eq!(state.active_arrays(), &hosts[..expected_active]);
        }
    }
}
