"""The operator family F(M, x) = G(sigma(x) M sigma(x)^T).

G acts on m x m symmetric matrices and is pinned between lambda*Tr and
Lambda*Tr on ordered pairs. Implemented kinds: "trace" (sum of eigenvalues)
and the extremal pair "pucci_plus" / "pucci_minus" evaluated in closed form
from the eigenvalues. Property checks (the two-sided trace sandwich,
degenerate ellipticity) run batched over random trials and return reports
rather than raising.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import symmat
from .structures import CarnotStructure, as_point, sigma_at

KINDS = ("trace", "pucci_plus", "pucci_minus")


@dataclass(frozen=True)
class EllipticityBounds:
    lam: float
    Lam: float

    def __post_init__(self):
        if not (0.0 < self.lam <= self.Lam):
            raise ValueError(f"need 0 < lambda <= Lambda, got ({self.lam}, {self.Lam})")


@dataclass(frozen=True)
class OperatorSpec:
    kind: str
    bounds: EllipticityBounds
    structure: CarnotStructure

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if self.kind == "trace" and (self.bounds.lam != 1.0 or self.bounds.Lam != 1.0):
            raise ValueError("trace kind uses lambda = Lambda = 1")


def trace_operator(structure: CarnotStructure) -> OperatorSpec:
    return OperatorSpec("trace", EllipticityBounds(1.0, 1.0), structure)


def pucci_operator(structure: CarnotStructure, lam: float, Lam: float, plus: bool = True) -> OperatorSpec:
    kind = "pucci_plus" if plus else "pucci_minus"
    return OperatorSpec(kind, EllipticityBounds(lam, Lam), structure)


@dataclass(frozen=True)
class Coefficients:
    """Zero-order coefficient c and right-hand side f with their Holder data.

    c0 is the infimum of c over the working box; it must be positive for the
    regularity machinery.
    """

    c: Callable[[np.ndarray], float]
    f: Callable[[np.ndarray], float]
    L_c: float
    beta: float
    L_f: float
    beta_prime: float
    c0: float

    def __post_init__(self):
        if not (0.0 < self.beta <= 1.0 and 0.0 < self.beta_prime <= 1.0):
            raise ValueError("beta and beta_prime must lie in (0, 1]")
        if self.c0 <= 0.0:
            raise ValueError("c0 must be positive")
        if self.L_c < 0.0 or self.L_f < 0.0:
            raise ValueError("Holder seminorms must be nonnegative")


def pucci_from_eigenvalues(kind: str, lam: float, Lam: float, evals: np.ndarray) -> np.ndarray:
    """Closed-form extremal values from eigenvalue arrays (batched over the
    leading axes)."""
    pos = np.clip(evals, 0.0, None).sum(axis=-1)
    neg = np.clip(-evals, 0.0, None).sum(axis=-1)
    if kind == "pucci_plus":
        return Lam * pos - lam * neg
    if kind == "pucci_minus":
        return lam * pos - Lam * neg
    raise ValueError(f"not an extremal kind: {kind!r}")


def g_eval(spec: OperatorSpec, n_mat: np.ndarray) -> float:
    """Evaluate G on an m x m symmetric matrix."""
    n_mat = symmat.require_symmetric(n_mat)
    if n_mat.shape[0] != spec.structure.m:
        raise ValueError(
            f"G acts on {spec.structure.m} x {spec.structure.m} matrices, got {n_mat.shape}"
        )
    if spec.kind == "trace":
        return float(np.trace(n_mat))
    evals = symmat.eigh(n_mat).eigenvalues
    return float(pucci_from_eigenvalues(spec.kind, spec.bounds.lam, spec.bounds.Lam, evals))


def f_eval(spec: OperatorSpec, m_mat: np.ndarray, x) -> float:
    """Evaluate F(M, x) = G(sigma(x) M sigma(x)^T)."""
    m_mat = symmat.require_symmetric(m_mat)
    if m_mat.shape[0] != spec.structure.n:
        raise ValueError(
            f"F acts on {spec.structure.n} x {spec.structure.n} Hessians, got {m_mat.shape}"
        )
    s = sigma_at(spec.structure, x)
    return g_eval(spec, symmat.symmetrize(s @ m_mat @ s.T))


def _g_batch(kind: str, lam: float, Lam: float, mats: np.ndarray) -> np.ndarray:
    if kind == "trace":
        return np.trace(mats, axis1=-2, axis2=-1)
    evals = np.linalg.eigvalsh(mats)
    return pucci_from_eigenvalues(kind, lam, Lam, evals)


@dataclass(frozen=True)
class PropertyReport:
    """Outcome of a randomized inequality check; a violation is reported, not raised."""

    name: str
    trials: int
    violations: int
    worst_slack: float
    witness: tuple | None = None
    seed: int = 0

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _random_symmetric(rng, count: int, dim: int) -> np.ndarray:
    x = rng.normal(size=(count, dim, dim))
    return (x + np.transpose(x, (0, 2, 1))) / 2.0


def sandwich_check(
    spec: OperatorSpec, trials: int, seed: int = 0, dim: int | None = None
) -> PropertyReport:
    """Draw ordered pairs B <= A and verify lam*Tr(A-B) <= G(A)-G(B) <= Lam*Tr(A-B).

    For the trace kind the bracket is taken with lambda = Lambda = 1.
    Tolerance is 1e-9 relative to the trial scale.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    d = spec.structure.m if dim is None else dim
    lam, Lam = spec.bounds.lam, spec.bounds.Lam
    rng = np.random.default_rng(seed)
    a = _random_symmetric(rng, trials, d)
    c = rng.normal(size=(trials, d, d))
    b = a - np.transpose(c, (0, 2, 1)) @ c
    b = (b + np.transpose(b, (0, 2, 1))) / 2.0
    ga = _g_batch(spec.kind, lam, Lam, a)
    gb = _g_batch(spec.kind, lam, Lam, b)
    gap = np.trace(a - b, axis1=-2, axis2=-1)
    diff = ga - gb
    scale = np.maximum(1.0, np.maximum(np.abs(ga), np.abs(gb)))
    scale = np.maximum(scale, Lam * np.abs(gap))
    tol = 1e-9 * scale
    low_slack = lam * gap - diff
    high_slack = diff - Lam * gap
    slack = np.maximum(low_slack, high_slack)
    bad = slack > tol
    worst = int(np.argmax(slack))
    witness = (a[worst], b[worst]) if bad.any() else None
    return PropertyReport(
        name=f"sandwich[{spec.kind}]",
        trials=trials,
        violations=int(bad.sum()),
        worst_slack=float(slack.max()),
        witness=witness,
        seed=seed,
    )


def degenerate_ellipticity_check(
    spec: OperatorSpec, x, trials: int, seed: int = 0
) -> PropertyReport:
    """Verify F(M, x) <= F(N, x) for random ordered Hessians M <= N."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = as_point(x, spec.structure.n)
    s = sigma_at(spec.structure, p)
    n = spec.structure.n
    lam, Lam = spec.bounds.lam, spec.bounds.Lam
    rng = np.random.default_rng(seed)
    m_mats = _random_symmetric(rng, trials, n)
    c = rng.normal(size=(trials, n, n))
    n_mats = m_mats + np.transpose(c, (0, 2, 1)) @ c
    n_mats = (n_mats + np.transpose(n_mats, (0, 2, 1))) / 2.0
    sm = np.einsum("ij,tjk,lk->til", s, m_mats, s)
    sn = np.einsum("ij,tjk,lk->til", s, n_mats, s)
    sm = (sm + np.transpose(sm, (0, 2, 1))) / 2.0
    sn = (sn + np.transpose(sn, (0, 2, 1))) / 2.0
    fm = _g_batch(spec.kind, lam, Lam, sm)
    fn = _g_batch(spec.kind, lam, Lam, sn)
    scale = np.maximum(1.0, np.maximum(np.abs(fm), np.abs(fn)))
    slack = fm - fn
    bad = slack > 1e-9 * scale
    worst = int(np.argmax(slack))
    witness = (m_mats[worst], n_mats[worst]) if bad.any() else None
    return PropertyReport(
        name=f"degenerate_ellipticity[{spec.kind}]",
        trials=trials,
        violations=int(bad.sum()),
        worst_slack=float(slack.max()),
        witness=witness,
        seed=seed,
    )
