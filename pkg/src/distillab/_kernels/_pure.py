"""Numpy fallback for the pair-counting kernels."""
import numpy as np


def _pair_signs(a: np.ndarray):
    n, c = a.shape
    i, j = np.triu_indices(c, 1)
    return a[:, i] - a[:, j]


def kendall_signed_many(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise signed Kendall tau between two (N, C) arrays."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    c = a.shape[1]
    s = (np.sign(_pair_signs(a)) * np.sign(_pair_signs(b))).sum(axis=1)
    return 2.0 * s / (c * (c - 1))


def kendall_paper_many(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise pair statistic with the 1/0 step in place of the sign."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    c = a.shape[1]
    s = ((_pair_signs(a) > 0) & (_pair_signs(b) > 0)).sum(axis=1)
    return 2.0 * s / (c * (c - 1))
