"""Independent brute-force reference implementations used as test oracles.

Everything here is evaluated directly from the defining formulas with plain
loops over t = 1..T. Nothing is shared with the package internals, so
agreement with the library is evidence, not tautology.
"""

import itertools
import math

import numpy as np


def epan(x):
    x = float(x)
    if abs(x) > 1.0:
        return 0.0
    return 0.75 * (1.0 - x * x)


def naive_lambda(h):
    return math.sqrt(2.0 * math.log(1.0 / (2.0 * h)))


def naive_weights(T, u, h):
    """Full length-T local-linear contrast weight vector, unit sum of squares.

    w_t = Lambda_t / sqrt(sum Lambda^2) with
    Lambda_t = K(x_t) (S2 - x_t S1), x_t = (t/T - u)/h,
    S_l = (Th)^{-1} sum_t K(x_t) x_t^l.
    """
    s1 = 0.0
    s2 = 0.0
    for t in range(1, T + 1):
        x = (t / T - u) / h
        k = epan(x)
        s1 += k * x
        s2 += k * x * x
    s1 /= T * h
    s2 /= T * h
    lam = np.zeros(T)
    for t in range(1, T + 1):
        x = (t / T - u) / h
        lam[t - 1] = epan(x) * (s2 - x * s1)
    norm = math.sqrt(float(lam @ lam))
    if norm == 0.0:
        raise ZeroDivisionError("degenerate support")
    return lam / norm


def naive_pair_psi0(y_aug, sigma2, grid_uh):
    """psi0 matrix over lexicographic pairs and grid points, by direct sums."""
    y_aug = np.asarray(y_aug, dtype=np.float64)
    n, T = y_aug.shape
    pairs = list(itertools.combinations(range(n), 2))
    out = np.empty((len(pairs), len(grid_uh)))
    for g, (u, h) in enumerate(grid_uh):
        w = naive_weights(T, u, h)
        lam = naive_lambda(h)
        for p, (i, j) in enumerate(pairs):
            acc = 0.0
            for t in range(T):
                acc += w[t] * (y_aug[i, t] - y_aug[j, t])
            out[p, g] = abs(acc) / math.sqrt(sigma2[i] + sigma2[j]) - lam
    return out


def naive_gaussian_draw(n, T, grid_uh, rng):
    """One Gaussian reference draw; consumes the stream exactly like the library."""
    z = rng.standard_normal((n, T))
    best = -math.inf
    zc = z - z.mean(axis=1, keepdims=True)
    for u, h in grid_uh:
        w = naive_weights(T, u, h)
        lam = naive_lambda(h)
        for i, j in itertools.combinations(range(n), 2):
            acc = 0.0
            for t in range(T):
                acc += w[t] * (zc[i, t] - zc[j, t])
            val = abs(acc) / math.sqrt(2.0) - lam
            if val > best:
                best = val
    return best


def naive_minimal(intervals, tol=0.0):
    """Indices of intervals [lo, hi] not strictly containing another member.

    ``tol`` is the boundary slack of the containment definition (the library
    contract uses 1e-12 to absorb grid arithmetic noise).
    """
    keep = []
    for a, (lo_a, hi_a) in enumerate(intervals):
        bad = False
        for b, (lo_b, hi_b) in enumerate(intervals):
            if a == b:
                continue
            inside = lo_b >= lo_a - tol and hi_b <= hi_a + tol
            strict = lo_b > lo_a + tol or hi_b < hi_a - tol
            if inside and strict:
                bad = True
                break
        if not bad:
            keep.append(a)
    return keep


def naive_classification_errors(estimated, truth):
    """Min total mismatch over all injective label matchings, by enumeration."""
    est = [frozenset(g) for g in estimated]
    tru = [frozenset(g) for g in truth]
    k = max(len(est), len(tru))
    est = est + [frozenset()] * (k - len(est))
    tru = tru + [frozenset()] * (k - len(tru))
    best = None
    for perm in itertools.permutations(range(k)):
        errors = sum(len(tru[l] - est[perm[l]]) for l in range(k))
        if best is None or errors < best:
            best = errors
    return best
