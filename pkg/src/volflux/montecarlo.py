"""Seed-partitioned Monte Carlo integration over the area measure of a surface."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ExcessiveDegeneracy
from .surface import FlatSurface

CHUNK = 1 << 17
# abort when more than this fraction of samples needed resampling
DEGENERACY_BUDGET = 1e-3


@dataclass(frozen=True)
class MCResult:
    value: float
    stderr: float
    sample_count: int
    resampled: int
    max_abs: float


def _worker(surface: FlatSurface, integrand, n: int, seed_seq) -> tuple[float, float, int, float]:
    rng = np.random.default_rng(seed_seq)
    total = 0.0
    total_sq = 0.0
    resampled = 0
    max_abs = 0.0
    done = 0
    while done < n:
        k = min(CHUNK, n - done)
        pts = surface.sample_points(k, rng)
        vals, bad = integrand(pts)
        attempts = 0
        while bad.any():
            attempts += 1
            if attempts > 50:
                raise ExcessiveDegeneracy("resampling did not clear degenerate samples")
            idx = np.flatnonzero(bad)
            resampled += len(idx)
            if resampled > DEGENERACY_BUDGET * n + 1:
                # early exit; the caller raises with the global count
                return total, total_sq, resampled, max_abs
            pts[idx] = surface.sample_points(len(idx), rng)
            v2, b2 = integrand(pts[idx])
            vals[idx] = v2
            bad = np.zeros_like(bad)
            bad[idx] = b2
        total += float(np.sum(vals))
        total_sq += float(np.sum(vals * vals))
        if len(vals):
            max_abs = max(max_abs, float(np.max(np.abs(vals))))
        done += k
    return total, total_sq, resampled, max_abs


def integrate(surface: FlatSurface, integrand, sample_count: int, seed: int, workers: int = 1) -> MCResult:
    """Estimate the area integral of ``integrand`` (a callable ``pts -> (values, degenerate)``).

    Worker ``i`` draws from the ``i``-th child of ``SeedSequence(seed)``; partial
    sums are combined in worker order, so results are reproducible for a fixed
    seed and worker count.
    """
    if sample_count <= 0:
        raise ValueError("sample_count must be positive")
    workers = max(1, int(workers))
    children = np.random.SeedSequence(seed).spawn(workers)
    sizes = [sample_count // workers + (1 if i < sample_count % workers else 0) for i in range(workers)]
    if workers == 1:
        parts = [_worker(surface, integrand, sizes[0], children[0])]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_worker, surface, integrand, sizes[i], children[i]) for i in range(workers)
            ]
            parts = [f.result() for f in futures]
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    resampled = sum(p[2] for p in parts)
    max_abs = max(p[3] for p in parts)
    if resampled > DEGENERACY_BUDGET * sample_count:
        raise ExcessiveDegeneracy(
            f"{resampled} of {sample_count} samples were degenerate (budget {DEGENERACY_BUDGET:.1%})"
        )
    n = sample_count
    mean = total / n
    var = max(0.0, (total_sq - n * mean * mean) / (n - 1)) if n > 1 else 0.0
    area = surface.area
    return MCResult(area * mean, area * math.sqrt(var / n), n, resampled, max_abs)
