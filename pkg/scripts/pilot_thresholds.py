#!/usr/bin/env python3
"""Reproduce the pilot measurements behind the frozen test thresholds.

Reports, in order: census spread at (d=2, n=32, p=0.7, 50 seeds), the
phi-upper scaling sweep, the renormalization density trends at n=80, and the
dual first-passage regression. The numbers printed here are the ones recorded
in tests/test_acceptance.py.
"""

import numpy as np

import percmix as pm
from percmix.experiments import ExperimentConfig, run_scaling
from percmix.fitting import fit_loglog_geomean
from percmix.geometry import classify_good_vertices


def census_pilot():
    fracs, ratios = [], []
    for seed in range(50):
        census = pm.cluster_census(pm.sample_bond_config(pm.BoxSpec(2, 32), 0.7, seed))
        fracs.append(census.largest_vertex_fraction)
        ratios.append(census.second_largest_ratio)
    fr = np.asarray(fracs)
    print(f"census: vertex-fraction CV={fr.std(ddof=1) / fr.mean():.4f} "
          f"worst second/largest ratio={max(ratios):.4f}")


def phi_upper_pilot():
    cfg = ExperimentConfig(n_list=(8, 12, 16, 24, 32), seed_list=(0, 1, 2, 3, 4),
                           quantities=("phi_upper",), dense_cap=2500)
    report = run_scaling(cfg)
    fit = fit_loglog_geomean(
        [(r.n, r.value) for r in report.rows if r.quantity == "phi_upper"]
    )
    print(f"phi-upper sweep: slope={fit.slope:.3f} r2={fit.r_squared:.3f}")


def renorm_pilot():
    box = pm.BoxSpec(2, 80)
    n_wins = sum(
        classify_good_vertices(pm.sample_bond_config(box, 0.7, s), 24).density()
        > classify_good_vertices(pm.sample_bond_config(box, 0.7, s), 8).density()
        for s in range(20)
    )
    flips = total = p_wins = 0
    for s in range(20):
        lo = classify_good_vertices(pm.sample_bond_config(box, 0.7, s), 16)
        hi = classify_good_vertices(pm.sample_bond_config(box, 0.95, s), 16)
        p_wins += hi.density() > lo.density()
        flips += int(np.sum(lo.good & ~hi.good))
        total += lo.num_classified
    print(f"renorm: N=24 beats N=8 on {n_wins}/20 seeds; p=0.95 beats p=0.7 "
          f"on {p_wins}/20; condition-2 flips {flips}/{total}")


def fpp_pilot():
    reg = pm.fpp_regression(pm.sample_bond_config(pm.BoxSpec(2, 32), 0.7, 0),
                            n_pairs=300, rng_seed=0)
    print(f"fpp: slope={reg.slope:.3f} r2={reg.r_squared:.3f} pairs={reg.n_pairs}")


if __name__ == "__main__":
    census_pilot()
    fpp_pilot()
    renorm_pilot()
    phi_upper_pilot()
