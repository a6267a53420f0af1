"""
KernelTestLab - Brute-Force Oracles
Direct index enumeration of the estimators, for small n only
"""

import itertools

import numpy as np


def distinct(n: int, m: int):
    return itertools.permutations(range(n), m)


def brute_ustat_moments(A: np.ndarray):
    """(u_pair, u_pair_sq, u_triple, u_quad) by enumerating distinct index tuples."""
    n = A.shape[0]
    pairs = list(distinct(n, 2))
    u_pair = np.mean([A[i, j] for i, j in pairs])
    u_pair_sq = np.mean([A[i, j] ** 2 for i, j in pairs])
    u_triple = np.mean([A[i, j] * A[i, k] for i, j, k in distinct(n, 3)])
    u_quad = np.mean([A[i1, j1] * A[i2, j2] for i1, i2, j1, j2 in distinct(n, 4)])
    return u_pair, u_pair_sq, u_triple, u_quad


def brute_triple_cross(A: np.ndarray, B: np.ndarray) -> float:
    return float(np.mean([A[i, j1] * B[i, j2] for i, j1, j2 in distinct(A.shape[0], 3)]))


def brute_quad_cross(A: np.ndarray, B: np.ndarray) -> float:
    return float(np.mean([A[i1, j1] * B[i2, j2] for i1, i2, j1, j2 in distinct(A.shape[0], 4)]))


def brute_offdiag_mean(A: np.ndarray) -> float:
    return float(np.mean([A[i, j] for i, j in distinct(A.shape[0], 2)]))


def gaussian(x: np.ndarray, y: np.ndarray, nu: float) -> float:
    return float(np.exp(-nu * np.sum((np.asarray(x) - np.asarray(y)) ** 2)))


def brute_hom_gamma2(X: np.ndarray, Y: np.ndarray, nu: float) -> float:
    n, m = len(X), len(Y)
    xx = np.mean([gaussian(X[i], X[j], nu) for i, j in distinct(n, 2)])
    yy = np.mean([gaussian(Y[i], Y[j], nu) for i, j in distinct(m, 2)])
    xy = np.mean([gaussian(X[i], Y[j], nu) for i in range(n) for j in range(m)])
    return float(xx + yy - 2.0 * xy)


def brute_hsic_unbiased(A1: np.ndarray, A2: np.ndarray) -> float:
    n = A1.shape[0]
    pair = np.mean([A1[i, j] * A2[i, j] for i, j in distinct(n, 2)])
    quad = np.mean([A1[i, j] * A2[q, r] for i, j, q, r in distinct(n, 4)])
    triple = np.mean([A1[i, j] * A2[i, q] for i, j, q in distinct(n, 3)])
    return float(pair + quad - 2.0 * triple)


def brute_dhsic_v(arrays) -> float:
    n = arrays[0].shape[0]
    k = len(arrays)
    joint = sum(np.prod([A[i, j] for A in arrays]) for i in range(n) for j in range(n)) / n ** 2
    means = np.prod([A.sum() / n ** 2 for A in arrays])
    cross = sum(np.prod([A[i].sum() for A in arrays]) for i in range(n)) * 2.0 / n ** (k + 1)
    return float(joint + means - cross)


def divided_variance(e1: np.ndarray, e2: np.ndarray, e3: np.ndarray) -> float:
    """General-k variance written with the ratios of the block moments."""
    k = len(e1)
    P1, P2, P3 = np.prod(e1), np.prod(e2), np.prod(e3)
    centered_sq = P1 - 2.0 * P2 + P3
    first = P2 * (np.sum(e1 / e2) - k) - P3 * (np.sum(e2 / e3) - k)
    ratio = e2 / e3 - 1.0
    second = P3 * (
        np.sum((e1 - 2.0 * e2 + e3) / e3)
        + sum(ratio[a] * ratio[b] for a in range(k) for b in range(k) if a != b)
    )
    return float(centered_sq - 2.0 * first + second)


def random_gram(rng: np.random.Generator, n: int, d: int = 1, nu: float = 1.0) -> np.ndarray:
    X = rng.standard_normal((n, d))
    D = np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=2)
    return np.exp(-nu * D)
