"""Difficulty-first sampling of predicted holdout utterances.

Buckets are consumed from the hardest class downwards; the bucket that
would overflow the requested size (the boundary bucket) is sampled
uniformly at random, seeded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError


@dataclass(frozen=True)
class SampleResult:
    selected: list[str]            # bucket-descending, then draw order
    boundary_bucket: int
    per_bucket_taken: dict[int, int]
    shortage: bool = False
    requested: int = 0
    diagnostics: dict = field(default_factory=dict)


def sample_difficult(predictions: dict[str, int], k: int,
                     seed: int = 0) -> SampleResult:
    """Pick the k hardest ids: exhaust buckets from the top class down,
    then draw the remainder uniformly from the boundary bucket."""
    if not predictions:
        raise UsageError("empty predictions")
    if k < 1:
        raise UsageError(f"sample size must be >= 1, got {k}")
    buckets: dict[int, list[str]] = {}
    for uid, cls in predictions.items():
        buckets.setdefault(int(cls), []).append(uid)
    # Insertion order of dict values follows the caller's iteration
    # order; keep it, so results depend only on (predictions, k, seed).
    rng = np.random.default_rng(seed)
    selected: list[str] = []
    taken: dict[int, int] = {}
    boundary = min(buckets)
    shortage = False
    for cls in sorted(buckets, reverse=True):
        ids = buckets[cls]
        remaining = k - len(selected)
        if remaining <= 0:
            break
        if len(ids) <= remaining:
            selected.extend(ids)
            taken[cls] = len(ids)
            boundary = cls
        else:
            draw = rng.choice(len(ids), size=remaining, replace=False)
            selected.extend(ids[i] for i in draw)
            taken[cls] = remaining
            boundary = cls
            break
    if len(selected) < k:
        shortage = True
    per_bucket_sizes = {cls: len(ids) for cls, ids in buckets.items()}
    return SampleResult(selected=selected, boundary_bucket=boundary,
                        per_bucket_taken=taken, shortage=shortage,
                        requested=k,
                        diagnostics={"bucket_sizes": per_bucket_sizes})
