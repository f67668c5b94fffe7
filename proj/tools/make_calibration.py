#!/usr/bin/env python3
"""Generate the shipped VARMA calibration files.

The default file is a hand-designed stable VAR(5) on seven standardized
macro-style variables; the small file is a 3-variable VAR(2) used by tests.
Run from the repository root:  python3 tools/make_calibration.py
"""
import json
import pathlib

import numpy as np

OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "calibration"


def spectral_radius(phis):
    n = phis[0].shape[0]
    p = len(phis)
    f = np.zeros((n * p, n * p))
    f[:n, :] = np.hstack(phis)
    if p > 1:
        f[n:, :-n] = np.eye(n * (p - 1))
    return max(abs(np.linalg.eigvals(f)))


def default_system():
    names = ["output_growth", "consumption_growth", "investment_growth", "hours",
             "inflation", "policy_rate", "wage_growth"]
    n = len(names)
    phi1 = np.diag([0.35, 0.30, 0.40, 0.80, 0.55, 0.85, 0.30])
    # policy rate depresses activity and inflation with a lag
    phi1[0, 5] = -0.12
    phi1[1, 5] = -0.08
    phi1[2, 5] = -0.20
    phi1[3, 5] = -0.05
    phi1[4, 5] = -0.04
    # activity feeds back into the policy rate and inflation
    phi1[5, 0] = 0.10
    phi1[5, 4] = 0.15
    phi1[4, 0] = 0.08
    phi1[0, 2] = 0.10
    phi1[1, 0] = 0.15
    phi1[3, 0] = 0.10
    phi1[6, 4] = 0.10

    rng = np.random.default_rng(20240501)
    phis = [phi1]
    for lag in range(2, 6):
        decay = 0.35 ** (lag - 1)
        noise = rng.normal(scale=0.03, size=(n, n))
        phis.append(decay * (0.2 * phi1 + noise))

    corr = np.full((n, n), 0.2) + 0.8 * np.eye(n)
    corr[0, 1] = corr[1, 0] = 0.5
    corr[0, 2] = corr[2, 0] = 0.5
    scales = np.array([0.8, 0.6, 1.0, 0.4, 0.5, 0.3, 0.6])
    impact = np.linalg.cholesky(corr * np.outer(scales, scales))
    return names, phis, impact


def small_system():
    names = ["output_growth", "inflation", "policy_rate"]
    phi1 = np.array([[0.5, 0.0, -0.2],
                     [0.1, 0.6, -0.1],
                     [0.1, 0.2, 0.8]])
    phi2 = np.array([[0.1, 0.0, 0.0],
                     [0.0, 0.1, 0.0],
                     [0.0, 0.0, -0.1]])
    impact = np.array([[1.0, 0.0, 0.0],
                       [0.3, 0.8, 0.0],
                       [0.2, 0.2, 0.5]])
    return names, [phi1, phi2], impact


def write(path, names, phis, impact, shock_index, ma_seed):
    radius = spectral_radius(phis)
    assert radius < 0.97, radius
    doc = {
        "schema_version": 1,
        "n": len(names),
        "P": len(phis),
        "J": 10,
        "pi": 0.5,
        "alpha": 2.0,
        "variables": names,
        "target_index": 0,
        "shock_index": shock_index,
        "ma_seed": ma_seed,
        "Phi": [np.round(p, 6).tolist() for p in phis],
        "H": np.round(impact, 6).tolist(),
    }
    path.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"{path.name}: spectral radius {radius:.4f}")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    names, phis, impact = default_system()
    write(OUT / "varma_default.json", names, phis, impact, shock_index=5, ma_seed=1234)
    names, phis, impact = small_system()
    write(OUT / "varma_small.json", names, phis, impact, shock_index=2, ma_seed=99)


if __name__ == "__main__":
    main()
