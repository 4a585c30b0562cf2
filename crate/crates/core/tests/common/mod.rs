//! Shared instance builders for the integration tests.
#![allow(dead_code)]

use fogflow_core::{
    AppLink, Application, CapacityVector, Microservice, NetLink, Region, RegionKind, Topology,
};

pub fn region(id: &str, kind: RegionKind, cpu: f64, delay: f64) -> Region {
    Region {
        id: id.into(),
        kind,
        capacity: CapacityVector::new(16384.0, cpu, 200.0),
        access_delay_ms: delay,
    }
}

/// Fully connected directed mesh over the given regions.
pub fn mesh(regions: Vec<Region>, delay: f64, bw: f64, max_hops: usize) -> Topology {
    let ids: Vec<String> = regions.iter().map(|r| r.id.clone()).collect();
    let mut links = Vec::new();
    for a in &ids {
        for b in &ids {
            if a != b {
                links.push(NetLink {
                    from: a.clone(),
                    to: b.clone(),
                    delay_ms: delay,
                    bandwidth_mbps: bw,
                });
            }
        }
    }
    Topology::new(regions, links, max_hops).unwrap()
}

pub fn micro(id: &str, cpu: f64, work: f64) -> Microservice {
    Microservice {
        id: id.into(),
        demand: CapacityVector::new(cpu / 2.0 + 100.0, cpu, 2.0),
        work_per_request_mi: work,
    }
}

/// Chain application `m1 -> m2 -> ... -> mN` with the given CPU demands and
/// per-request work.
pub fn chain_app(cpus: &[f64], works: &[f64], lambda: f64) -> Application {
    assert_eq!(cpus.len(), works.len());
    let micros: Vec<Microservice> = cpus
        .iter()
        .zip(works)
        .enumerate()
        .map(|(i, (c, w))| micro(&format!("m{}", i + 1), *c, *w))
        .collect();
    let links: Vec<AppLink> = (1..cpus.len())
        .map(|i| AppLink {
            from: format!("m{i}"),
            to: format!("m{}", i + 1),
            max_delay_ms: 100.0,
            max_throughput_mbps: lambda,
        })
        .collect();
    Application::new(micros, links, "m1".into()).unwrap()
}

/// The three-region instance shape used throughout: an edge, a central and a
/// public region with ascending capacities and access delays.
pub fn three_regions(edge_cpu: f64, central_cpu: f64, public_cpu: f64) -> Topology {
    mesh(
        vec![
            region("edge", RegionKind::EdgePrivate, edge_cpu, 10.0),
            region("central", RegionKind::CentralPrivate, central_cpu, 25.0),
            region("public", RegionKind::Public, public_cpu, 40.0),
        ],
        20.0,
        700.0,
        2,
    )
}
