"""First-kind Bessel functions of integer and half-integer order, and
their positive roots.

Half-integer orders start from the closed trigonometric forms
J_{1/2}(x) = sqrt(2/(pi x)) sin x and its neighbors; the three-term
recurrence runs upward where that is stable (x >= order) and downward
with renormalization against the closed-form J_{1/2} otherwise. Integer
orders use the power series for small x and the downward recurrence
with the even-order normalization sum elsewhere.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import NumericalError

_SERIES_CUTOFF = 12.0
_RESCALE = 1e250


def _check_order(order: float) -> tuple[int, bool]:
    k2 = 2.0 * order
    if k2 < 0 or abs(k2 - round(k2)) > 1e-12:
        raise ValueError(f"order must be a nonnegative half-integer, got {order}")
    k2 = int(round(k2))
    return k2, k2 % 2 == 0


def _j_half(x):
    return np.sqrt(2.0 / (np.pi * x)) * np.sin(x)


def _j_minus_half(x):
    return np.sqrt(2.0 / (np.pi * x)) * np.cos(x)


def _j_three_half(x):
    return np.sqrt(2.0 / (np.pi * x)) * (np.sin(x) / x - np.cos(x))


def _half_upward(nu: float, x: np.ndarray) -> np.ndarray:
    jm, j = _j_half(x), _j_three_half(x)
    if nu == 0.5:
        return jm
    cur = 1.5
    while cur < nu - 1e-9:
        jm, j = j, (2 * cur / x) * j - jm
        cur += 1.0
    return j


def _half_downward(nu: float, x: float) -> float:
    top = nu + int(x) + 25
    fp1, f = 0.0, 1e-30
    target = None
    cur = top
    while cur > 0.5 + 1e-9:
        fp1, f = f, (2 * cur / x) * f - fp1
        cur -= 1.0
        if abs(f) > _RESCALE:
            f, fp1 = f / _RESCALE, fp1 / _RESCALE
            if target is not None:
                target /= _RESCALE
        if abs(cur - nu) < 1e-9:
            target = f
    if target is None:
        target = fp1 if abs(top - nu) < 1e-9 else 0.0
    return target * _j_half(x) / f


def _int_series(n: int, x: np.ndarray) -> np.ndarray:
    half = x / 2.0
    term = half ** n / math.factorial(n)
    total = term.copy()
    for k in range(1, 46):
        term = -term * half * half / (k * (k + n))
        total += term
    return total


def _int_downward(n: int, x: float) -> float:
    top = int(x) + n + 30
    if top % 2:
        top += 1
    fp1, f = 0.0, 1e-30
    norm = 0.0
    target = None
    for cur in range(top, 0, -1):
        fp1, f = f, (2 * cur / x) * f - fp1
        if abs(f) > _RESCALE:
            f, fp1 = f / _RESCALE, fp1 / _RESCALE
            norm /= _RESCALE
            if target is not None:
                target /= _RESCALE
        m = cur - 1
        if m == n:
            target = f
        if m >= 2 and m % 2 == 0:
            norm += 2.0 * f
    norm += f  # J_0 term
    if target is None:
        target = fp1 if top == n else 0.0
    return target / norm


def bessel_j(order: float, x):
    """J_order(x) for half-integer order >= 0 and x > 0."""
    k2, is_int = _check_order(order)
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr <= 0):
        raise ValueError("bessel_j requires x > 0")
    out = np.empty_like(arr)
    nu = k2 / 2.0
    if not is_int:
        up = arr >= max(nu, 1.0)
        if np.any(up):
            out[up] = _half_upward(nu, arr[up])
        for i in np.nonzero(~up)[0]:
            out[i] = _half_downward(nu, float(arr[i]))
    else:
        n = k2 // 2
        small = arr <= _SERIES_CUTOFF
        if np.any(small):
            out[small] = _int_series(n, arr[small])
        for i in np.nonzero(~small)[0]:
            out[i] = _int_downward(n, float(arr[i]))
    return float(out[0]) if scalar else out


def bessel_j_derivative(order: float, x):
    """d/dx J_order(x) via the neighbor identity."""
    k2, _ = _check_order(order)
    arr = np.asarray(x, dtype=float)
    if k2 == 0:
        return -bessel_j(1.0, arr) if arr.ndim else -bessel_j(1.0, float(arr))
    if k2 == 1:  # order 1/2; the lower neighbor has the cosine closed form
        lower = _j_minus_half(np.atleast_1d(arr))
        lower = lower[0] if arr.ndim == 0 else lower
    else:
        lower = bessel_j(order - 1.0, arr)
    upper = bessel_j(order + 1.0, arr)
    return (lower - upper) / 2.0


def _mcmahon_guess(nu: float, m: int) -> float:
    beta = (m + nu / 2 - 0.25) * math.pi
    mu = 4 * nu * nu
    return (beta - (mu - 1) / (8 * beta)
            - 4 * (mu - 1) * (7 * mu - 31) / (3 * (8 * beta) ** 3))


_root_cache: dict[int, list[float]] = {}


def bessel_roots(order: float, count: int) -> np.ndarray:
    """First `count` positive roots of J_order, ascending, each verified
    by a sign change."""
    k2, _ = _check_order(order)
    if count < 1:
        raise ValueError("count must be >= 1")
    nu = k2 / 2.0
    roots = _root_cache.setdefault(k2, [])
    step = math.pi / 4
    while len(roots) < count:
        m = len(roots) + 1
        lo = roots[-1] + 1e-6 if roots else max(nu, 1e-3)
        f_lo = bessel_j(nu, lo)
        hi = lo
        # march until the sign flips; the McMahon point bounds the search
        limit = _mcmahon_guess(nu, m) + max(10.0, nu) + 10.0
        while True:
            hi = hi + step
            if hi > limit:
                raise NumericalError(
                    f"no sign change found for root {m} of J_{nu} below {limit:.2f}")
            f_hi = bessel_j(nu, hi)
            if f_lo == 0.0:
                lo += 1e-12
                f_lo = bessel_j(nu, lo)
            if f_lo * f_hi < 0:
                break
            lo, f_lo = hi, f_hi
        root = _newton_in_bracket(nu, lo, hi, min(max(_mcmahon_guess(nu, m), lo), hi))
        eps = 1e-7 * (1.0 + root)
        if bessel_j(nu, root - eps) * bessel_j(nu, root + eps) >= 0:
            raise NumericalError(
                f"sign-change verification failed for root {m} of J_{nu}")
        roots.append(root)
    return np.array(roots[:count])


def _newton_in_bracket(nu: float, lo: float, hi: float, x0: float) -> float:
    f_lo = bessel_j(nu, lo)
    x = x0
    for _ in range(100):
        f = bessel_j(nu, x)
        if f == 0.0:
            return x
        if f * f_lo < 0:
            hi = x
        else:
            lo = x
        df = bessel_j_derivative(nu, x)
        x_new = x - f / df if df != 0 else 0.5 * (lo + hi)
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) < 1e-15 * max(1.0, x):
            return x_new
        x = x_new
    return x
