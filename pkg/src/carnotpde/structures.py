"""Carnot-type structures: a horizontal frame sigma(x) with optional group law.

A structure is the data (n, m, sigma) where sigma(x) is an m x n matrix whose
rows are the horizontal vector fields. P(x) = sigma(x)^T sigma(x) is the
associated degenerate diffusion matrix. Presets cover the first Heisenberg
group, the Engel group, Euclidean space and two rank-one planar examples;
custom structures load from a JSON description with polynomial or rational
entries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import UnsupportedOperationError
from .fields import SmoothField, _check_terms, _poly_value
from .symmat import symmetrize


@dataclass(frozen=True)
class CarnotStructure:
    name: str
    n: int
    m: int
    step: int
    sigma: Callable[[np.ndarray], np.ndarray]
    group_law: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    dilation: Callable[[float, np.ndarray], np.ndarray] | None = None
    lipschitz_sigma: float | None = None


def as_point(x, n: int) -> np.ndarray:
    p = np.asarray(x, dtype=float).reshape(-1)
    if p.size != n:
        raise ValueError(f"point has dimension {p.size}, expected {n}")
    if not np.all(np.isfinite(p)):
        raise ValueError("point has non-finite entries")
    return p


def sigma_at(s: CarnotStructure, x) -> np.ndarray:
    """Evaluate the horizontal frame matrix sigma(x), shape (m, n)."""
    p = as_point(x, s.n)
    mat = np.asarray(s.sigma(p), dtype=float)
    if mat.shape != (s.m, s.n):
        raise ValueError(f"sigma returned shape {mat.shape}, expected {(s.m, s.n)}")
    return mat


def p_matrix_at(s: CarnotStructure, x) -> np.ndarray:
    """P(x) = sigma(x)^T sigma(x); symmetric positive semidefinite."""
    mat = sigma_at(s, x)
    return symmetrize(mat.T @ mat)


def trace_p(s: CarnotStructure, x) -> float:
    """Tr P(x), which equals the sum of squared row norms of sigma(x)."""
    return float(np.trace(p_matrix_at(s, x)))


def group_mul(s: CarnotStructure, x, y) -> np.ndarray:
    if s.group_law is None:
        raise UnsupportedOperationError(f"structure {s.name!r} has no group law")
    return np.asarray(s.group_law(as_point(x, s.n), as_point(y, s.n)), dtype=float)


def dilate(s: CarnotStructure, t: float, x) -> np.ndarray:
    if s.dilation is None:
        raise UnsupportedOperationError(f"structure {s.name!r} has no dilations")
    return np.asarray(s.dilation(float(t), as_point(x, s.n)), dtype=float)


def engel_trace_operator(s: CarnotStructure, u: SmoothField, x) -> tuple[float, float]:
    """Evaluate Tr(sigma D^2u sigma^T) on the Engel structure two ways.

    Returns (matrix_route, field_route) where the second value is
    X1^2 u + X2^2 u - x2 * du/dx4, each squared field expanded through its
    first-order part. The two must agree.
    """
    if s.name != "engel1":
        raise UnsupportedOperationError("engel_trace_operator requires the engel1 preset")
    p = as_point(x, 4)
    h = u.hessian(p)
    g = u.gradient(p)
    mat = sigma_at(s, p)
    matrix_route = float(np.trace(mat @ h @ mat.T))
    v1 = mat[0]
    v2 = mat[1]
    # X1 = (1, 0, -x2, -x3) has Jacobian J with J[2,1] = J[3,2] = -1, so the
    # first-order part of X1^2 is (J v1) . grad = x2 * du/dx4; X2 is constant.
    x1_sq = float(v1 @ h @ v1) + p[1] * g[3]
    x2_sq = float(v2 @ h @ v2)
    field_route = x1_sq + x2_sq - p[1] * g[3]
    return matrix_route, field_route


def lipschitz_sigma_estimate(
    s: CarnotStructure, box: Sequence[Sequence[float]], samples: int = 256, seed: int = 0
) -> float:
    """Max Frobenius difference quotient of sigma over sampled point pairs.

    A lower bound for the true Lipschitz constant on the box. The sample
    includes the box corners (all of them up to dimension 6) so constant and
    affine frames are resolved exactly.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    lo = np.array([float(b[0]) for b in box])
    hi = np.array([float(b[1]) for b in box])
    if lo.size != s.n:
        raise ValueError(f"box has {lo.size} axes, expected {s.n}")
    rng = np.random.default_rng(seed)
    pts = [lo + (hi - lo) * rng.random(s.n) for _ in range(samples)]
    if s.n <= 6:
        for bits in range(2**s.n):
            corner = np.array(
                [hi[k] if (bits >> k) & 1 else lo[k] for k in range(s.n)]
            )
            pts.append(corner)
    best = 0.0
    mats = [sigma_at(s, p) for p in pts]
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            gap = float(np.linalg.norm(pts[i] - pts[j]))
            if gap == 0.0:
                continue
            diff = float(np.linalg.norm(mats[i] - mats[j]))
            best = max(best, diff / gap)
    return best


# ---------------------------------------------------------------------------
# presets


def _sigma_heisenberg(x):
    return np.array([[1.0, 0.0, 2.0 * x[1]], [0.0, 1.0, -2.0 * x[0]]])


def _mul_heisenberg(x, y):
    return np.array(
        [
            x[0] + y[0],
            x[1] + y[1],
            x[2] + y[2] + 2.0 * (x[1] * y[0] - x[0] * y[1]),
        ]
    )


def _dil_heisenberg(t, x):
    return np.array([t * x[0], t * x[1], t * t * x[2]])


def _sigma_engel(x):
    return np.array([[1.0, 0.0, -x[1], -x[2]], [0.0, 1.0, 0.0, 0.0]])


def _mul_engel(x, y):
    return np.array(
        [
            x[0] + y[0],
            x[1] + y[1],
            x[2] + y[2] - y[0] * x[1],
            x[3] + y[3] + 0.5 * y[0] * y[0] * x[1] - y[0] * x[2],
        ]
    )


def _dil_engel(t, x):
    return np.array([t * x[0], t * x[1], t**2 * x[2], t**3 * x[3]])


def heisenberg_sqrt_transposed_variant(x) -> np.ndarray:
    """Closed-form square-root candidate for the Heisenberg P(x) whose first two
    diagonal entries are interchanged relative to the spectral square root.

    Squaring it does not recover P; it is kept as a documented counterexample
    (see the erratum checks in the lemma suite). Undefined at x1 = x2 = 0.
    """
    x = np.asarray(x, dtype=float)
    x1, x2 = x[0], x[1]
    rho2 = x1 * x1 + x2 * x2
    if rho2 == 0.0:
        raise ValueError("formula is undefined at x1 = x2 = 0")
    s = np.sqrt(1.0 + 4.0 * rho2)
    return np.array(
        [
            [(x2 * x2 + x1 * x1 / s) / rho2, x1 * x2 * (1.0 - 1.0 / s) / rho2, 2.0 * x2 / s],
            [x1 * x2 * (1.0 - 1.0 / s) / rho2, (x1 * x1 + x2 * x2 / s) / rho2, -2.0 * x1 / s],
            [2.0 * x2 / s, -2.0 * x1 / s, 4.0 * rho2 / s],
        ]
    )


def euclidean(n: int) -> CarnotStructure:
    eye = np.eye(n)
    return CarnotStructure(
        name=f"euclidean:{n}",
        n=n,
        m=n,
        step=1,
        sigma=lambda x: eye,
        group_law=lambda x, y: x + y,
        dilation=lambda t, x: t * x,
        lipschitz_sigma=0.0,
    )


def heisenberg1() -> CarnotStructure:
    return CarnotStructure(
        name="heisenberg1",
        n=3,
        m=2,
        step=2,
        sigma=_sigma_heisenberg,
        group_law=_mul_heisenberg,
        dilation=_dil_heisenberg,
        lipschitz_sigma=2.0,
    )


def engel1() -> CarnotStructure:
    return CarnotStructure(
        name="engel1",
        n=4,
        m=2,
        step=3,
        sigma=_sigma_engel,
        group_law=_mul_engel,
        dilation=_dil_engel,
        lipschitz_sigma=1.0,
    )


def line2d() -> CarnotStructure:
    mat = np.array([[1.0, 0.0]])
    return CarnotStructure(
        name="line2d", n=2, m=1, step=1, sigma=lambda x: mat, lipschitz_sigma=0.0
    )


def grushin_like2d() -> CarnotStructure:
    def sigma(x):
        return np.array([[x[0] / (1.0 + x[0] * x[0]), 0.0]])

    # sup |d/dt t/(1+t^2)| = 1 at t = 0
    return CarnotStructure(
        name="grushin-like2d", n=2, m=1, step=1, sigma=sigma, lipschitz_sigma=1.0
    )


_PRESETS = {
    "heisenberg1": heisenberg1,
    "engel1": engel1,
    "line2d": line2d,
    "grushin-like2d": grushin_like2d,
}


def preset(name: str) -> CarnotStructure:
    """Look up a structure by name: euclidean:<n>, heisenberg1, engel1, line2d, grushin-like2d."""
    if name.startswith("euclidean:"):
        n = int(name.split(":", 1)[1])
        if n < 1:
            raise ValueError("euclidean dimension must be >= 1")
        return euclidean(n)
    try:
        return _PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown structure preset {name!r}") from None


def _entry_callable(entry, n: int):
    if isinstance(entry, dict):
        num = _check_terms(entry["num"], n)
        den = _check_terms(entry["den"], n)

        def rational(x):
            d = _poly_value(den, x)
            if d == 0.0:
                raise ZeroDivisionError("rational sigma entry has vanishing denominator")
            return _poly_value(num, x) / d

        return rational
    parsed = _check_terms(entry, n)
    return lambda x: _poly_value(parsed, x)


def structure_from_json(desc: dict) -> CarnotStructure:
    """Build a structure from a JSON description with polynomial/rational entries.

    Expected keys: name, n, m (rows), entries (m x n nested list where each
    entry is a monomial table ``[[coeff, e1..en], ...]`` or
    ``{"num": table, "den": table}``), optional step and lipschitz_sigma.
    """
    name = str(desc.get("name", "custom"))
    n = int(desc["n"])
    m = int(desc["m"])
    rows = desc["entries"]
    if len(rows) != m or any(len(r) != n for r in rows):
        raise ValueError(f"entries must be an {m} x {n} nested list")
    fns = [[_entry_callable(rows[i][j], n) for j in range(n)] for i in range(m)]

    def sigma(x):
        return np.array([[fns[i][j](x) for j in range(n)] for i in range(m)])

    lip = desc.get("lipschitz_sigma")
    return CarnotStructure(
        name=name,
        n=n,
        m=m,
        step=int(desc.get("step", 1)),
        sigma=sigma,
        lipschitz_sigma=None if lip is None else float(lip),
    )
