"""Analytic slit-disk spectrum, mode identification, exact error norms,
and the stored benchmark tables for the half-disk and bridge problems.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .bessel import bessel_j, bessel_j_derivative, bessel_roots
from .errors import CapabilityError, ConfigurationError, DetectionError, InvariantViolation

#: the spectrum was checked simple only this far
MAX_SPECTRUM_INDEX = 100

_ANGULAR_SAMPLES = 512
_RADIAL_SAMPLES = 200
_DOMINANCE_FACTOR = 1.5


@dataclass(frozen=True)
class AnalyticMode:
    """Slit-disk eigenmode J_{n/2}(j_{m,n} r) sin(n theta / 2)."""
    m: int
    n: int
    root: float
    lam: float

    @property
    def order(self) -> float:
        return self.n / 2.0

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        r = np.hypot(pts[:, 0], pts[:, 1])
        theta = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * math.pi)
        out = np.zeros(len(pts))
        ok = r > 0
        out[ok] = bessel_j(self.order, self.root * r[ok]) \
            * np.sin(self.n * theta[ok] / 2)
        return out

    def gradient(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        r = np.hypot(pts[:, 0], pts[:, 1])
        theta = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * math.pi)
        grad = np.zeros((len(pts), 2))
        ok = r > 0
        rr, tt = r[ok], theta[ok]
        jr = bessel_j(self.order, self.root * rr)
        djr = bessel_j_derivative(self.order, self.root * rr) * self.root
        st, ct = np.sin(self.n * tt / 2), np.cos(self.n * tt / 2)
        dr = djr * st
        dth_over_r = jr * (self.n / 2) * ct / rr
        grad[ok, 0] = dr * np.cos(tt) - dth_over_r * np.sin(tt)
        grad[ok, 1] = dr * np.sin(tt) + dth_over_r * np.cos(tt)
        return grad

    def l2_norm(self) -> float:
        """||psi||_0 over the slit disk, by radial quadrature."""
        x, w = np.polynomial.legendre.leggauss(_RADIAL_SAMPLES)
        r = (x + 1) / 2
        w = w / 2
        vals = bessel_j(self.order, self.root * r)
        return math.sqrt(math.pi * float(np.sum(w * r * vals ** 2)))


@dataclass(frozen=True)
class ReferenceTable:
    label: str
    entries: tuple[tuple[int, float], ...]

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.entries])


def slit_disk_spectrum(count: int) -> list[tuple[int, AnalyticMode]]:
    """First `count` slit-disk eigenvalues with their (m, n) modes."""
    if count < 1:
        raise ConfigurationError("count must be >= 1")
    if count > MAX_SPECTRUM_INDEX:
        raise CapabilityError(
            f"spectrum verified simple only up to index {MAX_SPECTRUM_INDEX}")
    cap = 25.0
    while True:
        modes = []
        n = 1
        while True:
            roots = _roots_below(n / 2.0, cap)
            if len(roots) == 0:
                # first roots grow with the order, so no larger n contributes
                break
            for m, j in enumerate(roots, start=1):
                modes.append(AnalyticMode(m, n, float(j), float(j) ** 2))
            n += 1
        modes.sort(key=lambda md: md.lam)
        if len(modes) >= count and modes[count - 1].root <= cap - 0.5:
            break
        cap *= 1.4
    out = [(k + 1, md) for k, md in enumerate(modes[:count])]
    lam = np.array([md.lam for _, md in out])
    rel_gaps = np.diff(lam) / lam[1:]
    if np.any(rel_gaps <= 1e-9):
        raise InvariantViolation("slit-disk spectrum produced a duplicate value")
    return out


def _roots_below(order: float, cap: float) -> np.ndarray:
    if order >= cap:
        return np.array([])
    guess = max(4, int((cap - order) / math.pi) + 2)
    roots = bessel_roots(order, guess)
    while roots[-1] <= cap:
        guess += 4
        roots = bessel_roots(order, guess)
    return roots[roots <= cap]


def exact_error_norms(evaluator, mode: AnalyticMode, quad_degree: int | None = None):
    """L2 and energy errors between a finite element field and an exact
    mode, both normalized to unit L2 norm with nonnegative overlap.

    Returns (l2_error, energy_error, alpha).
    """
    if quad_degree is None:
        quad_degree = 2 * evaluator.max_degree + 12
    ip_l2 = ip_b = nrm0_sq = nrmE_sq = 0.0
    for t in range(evaluator.n_elements):
        phys, dv, vals, grads = evaluator.quadrature_sample(t, quad_degree)
        psi = mode(phys)
        gpsi = mode.gradient(phys)
        nrm0_sq += float(np.sum(vals ** 2 * dv))
        nrmE_sq += float(np.sum((grads ** 2).sum(axis=1) * dv))
        ip_l2 += float(np.sum(psi * vals * dv))
        ip_b += float(np.sum((gpsi * grads).sum(axis=1) * dv))
    psi_l2 = mode.l2_norm()
    fe_l2 = math.sqrt(nrm0_sq)
    alpha = ip_l2 / (psi_l2 * fe_l2)
    sign = 1.0 if alpha >= 0 else -1.0
    alpha = abs(alpha)
    l2_err = math.sqrt(max(0.0, 2.0 - 2.0 * alpha))
    b_cross = sign * ip_b / (psi_l2 * fe_l2)
    energy_sq = mode.lam + nrmE_sq / nrm0_sq - 2.0 * b_cross
    energy_err = math.sqrt(max(0.0, energy_sq))
    return l2_err, energy_err, alpha


def detect_mode(field, max_m: int = 6, max_n: int = 25, seed: int = 0):
    """Identify the closest slit-disk mode (m, n) of a sampled field.

    The angular index comes from the dominant half-integer frequency on
    circles at two random radii (a third arbitrates disagreements); the
    radial index from the best-correlating radial Bessel profile.
    """
    rng = np.random.default_rng(seed)
    theta = 2 * math.pi * (np.arange(_ANGULAR_SAMPLES) + 0.5) / _ANGULAR_SAMPLES
    sin_tab = np.sin(np.outer(np.arange(1, max_n + 1), theta / 2))

    def circle_vote(radius: float):
        pts = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
        vals = field(pts)
        coeffs = np.abs(sin_tab @ vals)
        order = np.argsort(coeffs)[::-1]
        best, second = coeffs[order[0]], coeffs[order[1]]
        if best < 1e-13:
            return None, 0.0
        ambiguous = best < _DOMINANCE_FACTOR * second
        return (None if ambiguous else int(order[0]) + 1), best

    radii = list(rng.uniform(0.25, 0.85, size=2))
    votes, peaks = [], []
    for rad in radii:
        v, p = circle_vote(rad)
        votes.append(v)
        peaks.append(p)
    if votes[0] is None or votes[1] is None or votes[0] != votes[1]:
        third = float(rng.uniform(0.3, 0.8))
        v, p = circle_vote(third)
        votes.append(v)
        peaks.append(p)
    if max(peaks) < 1e-13:
        raise DetectionError("field is flat on all sampled circles")
    valid = [v for v in votes if v is not None]
    if not valid:
        raise DetectionError("no dominant angular frequency on any circle")
    counts = {v: valid.count(v) for v in set(valid)}
    n = max(counts, key=lambda v: (counts[v], v))
    if list(counts.values()).count(counts[n]) > 1 and len(counts) > 1:
        raise DetectionError(f"angular frequency votes tied: {counts}")

    gx, gw = np.polynomial.legendre.leggauss(_RADIAL_SAMPLES)
    r = (gx + 1) / 2
    w = gw / 2
    pts = np.empty((_RADIAL_SAMPLES * _ANGULAR_SAMPLES, 2))
    R = np.repeat(r, _ANGULAR_SAMPLES)
    T = np.tile(theta, _RADIAL_SAMPLES)
    pts[:, 0] = R * np.cos(T)
    pts[:, 1] = R * np.sin(T)
    vals = field(pts).reshape(_RADIAL_SAMPLES, _ANGULAR_SAMPLES)
    profile = vals @ np.sin(n * theta / 2)
    weight = w * r
    pnorm = math.sqrt(float(np.sum(weight * profile ** 2)))
    if pnorm < 1e-13:
        raise DetectionError("radial profile is flat")
    roots = bessel_roots(n / 2.0, max_m)
    best_m, best_score = 0, -1.0
    for mu, j in enumerate(roots, start=1):
        prof = bessel_j(n / 2.0, j * r)
        score = abs(float(np.sum(weight * profile * prof)))
        score /= pnorm * math.sqrt(float(np.sum(weight * prof ** 2)))
        if score > best_score:
            best_m, best_score = mu, score
    return best_m, n


# ---------------------------------------------------------------------------
# stored benchmark tables
# ---------------------------------------------------------------------------

def _read_data(name: str) -> list[list[str]]:
    text = resources.files(__package__).joinpath("data", name).read_text()
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            rows.append(line.split())
    return rows


@lru_cache(maxsize=None)
def _load_table(name: str, label: str) -> ReferenceTable:
    entries = tuple((int(i), float(v)) for i, v in _read_data(name))
    idx = [i for i, _ in entries]
    vals = [v for _, v in entries]
    if idx != list(range(1, len(idx) + 1)):
        raise ConfigurationError(f"table {name}: indices not contiguous from 1")
    if any(b < a for a, b in zip(vals, vals[1:])):
        raise ConfigurationError(f"table {name}: values not ascending")
    return ReferenceTable(label, entries)


def reference_tables() -> dict[str, ReferenceTable]:
    """The stored benchmark eigenvalue tables, keyed by problem label."""
    return {
        "isospectral": _load_table("isospectral_reference.txt", "isospectral"),
        "bridge_dirichlet_case2": _load_table("bridge_dirichlet_case2.txt",
                                              "bridge_dirichlet_case2"),
        "bridge_neumann_case9": _load_table("bridge_neumann_case9.txt",
                                            "bridge_neumann_case9"),
    }


_BRIDGE_LABELS = tuple("ABCDEFGHIJKL")


@lru_cache(maxsize=None)
def _bridge_config_rows() -> dict[int, tuple[str, ...]]:
    rows = {}
    for row in _read_data("bridge_configurations.txt"):
        rows[int(row[0])] = tuple(row[1:])
    return rows


def normalize_bc(kind: str) -> str:
    k = kind.strip().lower()
    if k in ("d", "dirichlet"):
        return "D"
    if k in ("n", "neumann"):
        return "N"
    raise ConfigurationError(f"boundary kind must be Dirichlet or Neumann, got {kind!r}")


def bridge_boundary_config(case: int, bridge_bc: str) -> dict[str, str]:
    """Dirichlet/Neumann assignment for segments A..L of one bridge case,
    with the bridge condition substituted on both bridge sides."""
    rows = _bridge_config_rows()
    if case not in rows:
        raise ConfigurationError(f"bridge case must be in 1..10, got {case}")
    x = normalize_bc(bridge_bc)
    out = {}
    for label, kind in zip(_BRIDGE_LABELS, rows[case]):
        out[label] = x if kind == "X" else kind
    return out
