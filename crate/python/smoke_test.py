#!/usr/bin/env python3
"""Smoke test for the amqd_py extension module.

Builds (or reuses) the cdylib, stages it under an importable name, and
checks a handful of known values end to end. Run from the repository root:

    python3 python/smoke_test.py
"""

import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def locate_or_build_extension() -> Path:
    candidates = [
        REPO / "target" / "release" / "libamqd_py.so",
        REPO / "target" / "debug" / "libamqd_py.so",
    ]
    for c in candidates:
        if c.exists():
            return c
    print("building amqd-py (release)...")
    subprocess.run(
        ["cargo", "build", "--release", "-p", "amqd-py"], cwd=REPO, check=True
    )
    return candidates[0]


def stage(so_path: Path) -> Path:
    stage_dir = Path(tempfile.mkdtemp(prefix="amqd_py_"))
    shutil.copy2(so_path, stage_dir / "amqd_py.so")
    return stage_dir


def approx(a: float, b: float, tol: float, what: str) -> None:
    assert abs(a - b) <= tol, f"{what}: {a} vs {b} (tol {tol})"
    print(f"  ok: {what} = {a:.6g}")


def main() -> int:
    sys.path.insert(0, str(stage(locate_or_build_extension())))
    import amqd_py as aq

    print("entropy functions")
    approx(aq.entropy_g(1.0), 0.0, 0.0, "g(1)")
    approx(aq.entropy_g(3.0), 2.0, 0.0, "g(3)")
    approx(aq.entropy_g(1.2), 0.4834466856136646, 1e-12, "g(1.2)")
    approx(aq.spectrum_entropy([3.0, 1.2]), 2.4834466856136646, 1e-12, "spectrum")
    approx(
        aq.differential_entropy_gaussian(1.0),
        2.0470955851806411,
        1e-12,
        "differential entropy",
    )

    print("channel and capacity")
    approx(aq.excess_noise(2.0, 0.5), 1.0, 1e-12, "excess noise")
    approx(
        aq.private_capacity_subchannel(10.0, 0.5, 0.5),
        0.5 * math.log2(11.0 / 7.0),
        1e-12,
        "private capacity",
    )

    print("key rates at the vacuum point (T=0.9, W=1)")
    approx(aq.keyrate("one_way", "hom", "rr", 0.9, 1.0), 1.6609640474436812, 1e-9, "RR hom")
    approx(aq.keyrate("one_way", "hom", "dr", 0.9, 1.0), 1.5849625007211562, 1e-9, "DR hom")
    approx(aq.keyrate("one_way", "het", "rr", 0.9, 1.0), 3.3219280948873623, 1e-9, "RR het")
    approx(aq.keyrate("two_way", "het", "dr", 0.9, 1.0), 6.4918530963296747, 1e-9, "two-way DR het")

    print("thresholds")
    approx(aq.tolerable_excess_noise("rr_one_way_single"), 0.3896, 5e-4, "RR one-way reference")
    approx(aq.tolerable_excess_noise("dr_two_way_single"), 0.75, 0.0, "DR two-way reference")
    w_max = aq.max_eve_variance("one_way", "hom", "rr", 0.9)
    approx(w_max, 4.1857567953132203, 1e-6, "W_max at T=0.9")
    n_tol = aq.tolerable_excess_noise_multicarrier("one_way", "hom", "rr", 0.9)
    assert n_tol is not None and n_tol > 0.0
    print(f"  ok: multicarrier N_tol = {n_tol:.6g}")
    assert aq.tolerable_excess_noise_multicarrier("one_way", "hom", "dr", 0.4) is None
    print("  ok: DR below half transmittance has no positive-rate region")

    print("ensemble and region")
    ens = aq.Ensemble([0.6, 0.5, 0.4], [0.2, 0.25, 0.3], [1.2, 1.2, 1.2], 1e12)
    assert ens.selected() == [0, 1, 2]
    approx(ens.averaged_fourier_gain(), 0.5, 1e-12, "averaged gain")
    region = ens.region(8.0, users=2, eve_terms=[0.3, 0.3], vacuum_noise=0.1)
    approx(
        region["symmetric_capacity"],
        region["sum_capacity"] / 2.0,
        1e-12,
        "symmetric = sum / K",
    )
    boosted = ens.region(
        8.0, users=2, eve_terms=[0.3, 0.3], vacuum_noise=0.1, svd_v=[1.05, 1.0, 1.0]
    )
    assert boosted["private_sum_capacity"] > region["private_sum_capacity"]
    print(
        f"  ok: SVD boost {region['private_sum_capacity']:.4f} -> "
        f"{boosted['private_sum_capacity']:.4f}"
    )

    print("simulation")
    rep = aq.simulate_block(8, 0.5, 0.25, 2.0, 20000, 42)
    approx(rep["analytic_output_quadrature_variance"], 1.25, 1e-12, "analytic variance")
    approx(rep["empirical_output_quadrature_variance"], 1.25, 0.02, "empirical variance")
    rep2 = aq.simulate_block(8, 0.5, 0.25, 2.0, 20000, 42)
    assert rep == rep2, "simulation must be deterministic for a fixed seed"
    print("  ok: deterministic for a fixed seed")
    inv = aq.verify_fft_noise_invariance(8, 20000, 7, 1.0)
    assert inv["pass"], f"invariance failed: {inv}"
    print(f"  ok: transform invariance, deviation {inv['max_deviation']:.4f}")

    print("all smoke checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
