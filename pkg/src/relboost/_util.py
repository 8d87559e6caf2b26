"""Small shared helpers: order-statistic medians and seed derivation."""

import numpy as np


def lower_median(values) -> float:
    """Median that always returns an observed value.

    For an even number of values the lower of the two middle elements is
    returned (order statistic at index ceil(k/2) - 1), so the result stays
    inside the observed set.
    """
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValueError("median of an empty set is undefined")
    k = (arr.size - 1) // 2
    return float(np.partition(arr, k)[k])


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministically derive a child 64-bit seed from ``seed`` and integer keys."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
