"""Plot-ready sweeps: minimum rates for an AoPI target and the policy threshold."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from .analytics import min_lambda_for_target, min_mu_for_target, policy_threshold
from .model import Policy

MIN_RATE_COLUMNS = ("policy", "p", "target", "fixed", "fixed_rate", "min_rate")
THRESHOLD_COLUMNS = ("rho", "p_star")
DEFAULT_ACCURACIES = (0.6, 0.8, 1.0)
DEFAULT_RATES = tuple(float(x) for x in np.round(np.linspace(1.0, 40.0, 79), 6))


def min_rate_curve(policy, target: float = 0.5, accuracies: Sequence[float] = DEFAULT_ACCURACIES,
                   rates: Sequence[float] = DEFAULT_RATES) -> list[tuple]:
    """Rows of the smallest lambda for each fixed mu, then the smallest mu for each fixed lambda.

    ``min_rate`` is None where no rate meets the target.
    """
    policy = Policy.parse(policy)
    rows = []
    for p in accuracies:
        for mu in rates:
            rows.append((policy.name, p, target, "mu", mu, min_lambda_for_target(policy, target, mu, p)))
        for lam in rates:
            rows.append((policy.name, p, target, "lambda", lam, min_mu_for_target(policy, target, lam, p)))
    return rows


def threshold_curve(rhos: Sequence[float] | None = None) -> list[tuple[float, float]]:
    if rhos is None:
        rhos = np.round(np.linspace(0.02, 1.5, 75), 6)
    return [(float(r), policy_threshold(float(r)).p_star) for r in rhos]


def _write(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, float) else v) for v in row])


def write_all_curves(out_dir, target: float = 0.5) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "fcfs_min_rates.csv", out / "lcfsp_min_rates.csv", out / "policy_threshold.csv"]
    _write(paths[0], MIN_RATE_COLUMNS, min_rate_curve(Policy.FCFS, target))
    _write(paths[1], MIN_RATE_COLUMNS, min_rate_curve(Policy.LCFSP, target))
    _write(paths[2], THRESHOLD_COLUMNS, threshold_curve())
    return paths
