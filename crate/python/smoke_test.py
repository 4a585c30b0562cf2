#!/usr/bin/env python3
"""Smoke test for the fogflow_py extension module.

Builds the extension if needed, imports it, and exercises the main surface:
scenario loading, a full simulation run, the split formula, and the monthly
cost projection.

Usage: python3 python/smoke_test.py
"""

import json
import math
import os
import shutil
import subprocess
import sys

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
BUILD_DIR = os.path.join(REPO, "python", "_build")
SCENARIO = os.path.join(REPO, "crates", "cli", "scenarios", "incdec_ra2_90_60.json")


def build_extension():
    lib = os.path.join(REPO, "target", "release", "libfogflow_py.so")
    if not os.path.exists(lib):
        subprocess.run(
            ["cargo", "build", "-p", "fogflow-py", "--release"],
            cwd=REPO,
            check=True,
        )
    os.makedirs(BUILD_DIR, exist_ok=True)
    target = os.path.join(BUILD_DIR, "fogflow_py.so")
    if not os.path.exists(target) or os.path.getmtime(lib) > os.path.getmtime(target):
        shutil.copyfile(lib, target)
    sys.path.insert(0, BUILD_DIR)


def main():
    build_extension()
    import fogflow_py

    print(f"fogflow_py version {fogflow_py.version()}")

    # Split formula: proportional to residuals, sums to one.
    split = fogflow_py.compute_split(
        ["edge", "public"], {"edge": 3000.0, "public": 1000.0}
    )
    assert math.isclose(split["edge"], 0.75), split
    assert math.isclose(split["public"], 0.25), split
    assert math.isclose(sum(split.values()), 1.0, abs_tol=1e-9)

    # Monthly pay-per-use projection with the default pricing.
    cost = fogflow_py.monthly_cost(10_000)
    assert abs(cost - 70.26) < 0.01, cost

    # Scenario loading and a full run.
    scenario = fogflow_py.Scenario.from_path(SCENARIO)
    assert scenario.policies() == ["dsr", "optimal", "mea", "none"]
    assert scenario.max_completion_s == 3.5

    records = scenario.run("dsr")
    assert len(records) == 120
    assert records[0].requests == 0 and records[0].decision == "none"
    activations = [r for r in records if r.decision == "activate"]
    assert activations, "the ramp must trigger at least one activation"
    for r in records:
        if r.split:
            assert math.isclose(sum(r.split.values()), 1.0, abs_tol=1e-9)

    # Determinism: a rerun yields the same trace.
    again = scenario.run("dsr")
    assert [r.completion_s for r in records] == [r.completion_s for r in again]

    # The exact baseline never pays on this scenario.
    optimal = scenario.run("optimal")
    assert all(r.public_cost == 0.0 for r in optimal)

    # Instance sampling produces a parseable fragment.
    fragment = json.loads(fogflow_py.sample_instance_json(7))
    assert {r["id"] for r in fragment["topology"]["regions"]} == {
        "edge",
        "central",
        "public",
    }
    assert len(fragment["application"]["microservices"]) == 5

    print("smoke test passed")


if __name__ == "__main__":
    main()
