"""Holder modulus estimation on grid functions and end-to-end verification.

The pairwise scan is exhaustive up to 4096 nodes and otherwise a seeded
stratified sample (about one million pairs spread over geometric distance
bins, realized as random lattice offsets so distances are exact). fit_alpha
regresses the log of the per-bin maximal increment against log distance;
verify_theorem combines the fitted modulus with the hypothesis checks and the
explicit admissible-seminorm bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .doubling import (
    ConstantBundle,
    growth_condition_margin,
    growth_margin_asymptotic,
    holder_constant_bound,
)
from .errors import InadmissibleExponentError, PreconditionError
from .grids import GridFunction
from .operators import Coefficients, OperatorSpec
from .solver import SolveReport
from .structures import lipschitz_sigma_estimate

ALL_PAIRS_NODE_CAP = 4096
PAIR_BUDGET = 1_000_000
NUM_BINS = 12
GROWTH_TOL = 1e-9


def _scan_all_pairs(u: GridFunction, chunk: int = 256) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    coords = u.grid.coords()
    vals = u.flat
    n = coords.shape[0]
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        block = coords[start:stop]
        diff = block[:, None, :] - coords[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=2))
        inc = np.abs(vals[start:stop, None] - vals[None, :])
        mask = dist > 0.0
        yield dist[mask], inc[mask]


def _offset_increments(values: np.ndarray, offset: np.ndarray) -> np.ndarray:
    """|u(x + offset) - u(x)| over every node pair realizing the lattice offset."""
    src = []
    dst = []
    for k, o in enumerate(offset):
        size = values.shape[k]
        if abs(o) >= size:
            return np.empty(0)
        if o >= 0:
            src.append(slice(0, size - o))
            dst.append(slice(o, size))
        else:
            src.append(slice(-o, size))
            dst.append(slice(0, size + o))
    return np.abs(values[tuple(dst)] - values[tuple(src)]).ravel()


def _scan_stratified(
    u: GridFunction, seed: int, budget: int = PAIR_BUDGET
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    grid = u.grid
    h = grid.h
    diam = math.sqrt(sum((hi - lo) ** 2 for lo, hi in zip(grid.lo, grid.hi)))
    edges = np.geomspace(h, diam * (1.0 + 1e-12), NUM_BINS + 1)
    rng = np.random.default_rng(seed)
    quota = budget // NUM_BINS
    for b in range(NUM_BINS):
        lo_r, hi_r = edges[b], edges[b + 1]
        got = 0
        seen: set = set()
        for _ in range(400):
            if got >= quota:
                break
            direction = rng.normal(size=grid.n)
            norm = float(np.linalg.norm(direction))
            if norm == 0.0:
                continue
            radius = lo_r * (hi_r / lo_r) ** rng.random()
            offset = np.rint(radius * direction / (norm * h)).astype(int)
            if not offset.any():
                continue
            dist = h * float(np.linalg.norm(offset))
            if not (lo_r <= dist < hi_r):
                continue
            key = tuple(offset)
            if key in seen:
                continue
            seen.add(key)
            inc = _offset_increments(u.values, offset)
            if inc.size == 0:
                continue
            remaining = quota - got
            if inc.size > remaining:
                inc = inc[rng.integers(0, inc.size, size=remaining)]
            got += inc.size
            yield np.full(inc.size, dist), inc


def _pair_scan(u: GridFunction, seed: int) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    if u.grid.num_nodes <= ALL_PAIRS_NODE_CAP:
        return _scan_all_pairs(u)
    return _scan_stratified(u, seed)


def pair_count(u: GridFunction, seed: int = 0) -> int:
    n = u.grid.num_nodes
    if n <= ALL_PAIRS_NODE_CAP:
        return n * (n - 1) // 2
    return sum(d.size for d, _ in _scan_stratified(u, seed))


def holder_seminorm(u: GridFunction, alpha: float, seed: int = 0) -> float:
    """max over scanned pairs of |u(x) - u(y)| / |x - y|^alpha."""
    if not (0.0 < alpha <= 1.0):
        raise ValueError("alpha must lie in (0, 1]")
    if u.grid.num_nodes < 2:
        raise ValueError("need at least two nodes")
    best = 0.0
    for dist, inc in _pair_scan(u, seed):
        if dist.size:
            best = max(best, float((inc / dist**alpha).max()))
    return best


def binned_increments(u: GridFunction, seed: int = 0) -> list[dict]:
    """Per-bin maximal increments over the pair scan (for fitting and dumps)."""
    grid = u.grid
    diam = math.sqrt(sum((hi - lo) ** 2 for lo, hi in zip(grid.lo, grid.hi)))
    edges = np.geomspace(grid.h, diam * (1.0 + 1e-12), NUM_BINS + 1)
    max_inc = np.zeros(NUM_BINS)
    at_dist = np.zeros(NUM_BINS)
    counts = np.zeros(NUM_BINS, dtype=np.int64)
    for dist, inc in _pair_scan(u, seed):
        if dist.size == 0:
            continue
        bins = np.clip(np.searchsorted(edges, dist, side="right") - 1, 0, NUM_BINS - 1)
        for b in np.unique(bins):
            sel = bins == b
            counts[b] += int(sel.sum())
            local = inc[sel]
            pos = int(np.argmax(local))
            if local[pos] > max_inc[b]:
                max_inc[b] = float(local[pos])
                at_dist[b] = float(dist[sel][pos])
    return [
        {
            "distance": float(at_dist[b] if counts[b] else edges[b]),
            "max_increment": float(max_inc[b]),
            "pairs": int(counts[b]),
        }
        for b in range(NUM_BINS)
    ]


def fit_alpha(u: GridFunction, seed: int = 0) -> tuple[float, float]:
    """Log-log fit of the per-bin maximal increments; returns (alpha_fit, L_fit).

    alpha_fit is the regression slope clamped to (0, 1]; L_fit is the Holder
    seminorm at alpha_fit. A constant u yields the degenerate signal
    (nan, 0.0).
    """
    if float(np.ptp(u.flat)) == 0.0:
        return float("nan"), 0.0
    table = binned_increments(u, seed)
    xs = [math.log(row["distance"]) for row in table if row["pairs"] and row["max_increment"] > 0]
    ys = [math.log(row["max_increment"]) for row in table if row["pairs"] and row["max_increment"] > 0]
    if len(xs) < 3:
        return float("nan"), 0.0
    slope = float(np.polyfit(xs, ys, 1)[0])
    alpha = float(np.clip(slope, 1e-9, 1.0))
    return alpha, holder_seminorm(u, alpha, seed)


def max_quotient_violation(u: GridFunction, alpha: float, L: float, seed: int = 0) -> float:
    """max over scanned pairs of |u(x)-u(y)|/|x-y|^alpha - L (nonpositive when
    L is the seminorm from the same scan)."""
    worst = -math.inf
    for dist, inc in _pair_scan(u, seed):
        if dist.size:
            worst = max(worst, float((inc / dist**alpha).max() - L))
    return worst


@dataclass
class HolderReport:
    alpha_fit: float
    L_fit: float
    pair_count: int
    max_violation: float
    theorem_bound: float
    hypothesis_verdicts: dict
    admissible_alpha: bool
    l_fit_within_bound: bool
    growth_box_local: bool
    lipschitz_estimate: float
    lipschitz_samples: int
    seed: int

    @property
    def hypotheses_pass(self) -> bool:
        return all(self.hypothesis_verdicts.values())

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "alpha_fit": self.alpha_fit,
            "L_fit": self.L_fit,
            "pair_count": self.pair_count,
            "max_violation": self.max_violation,
            "theorem_bound": self.theorem_bound,
            "hypothesis_verdicts": {k: bool(v) for k, v in self.hypothesis_verdicts.items()},
            "admissible_alpha": self.admissible_alpha,
            "l_fit_within_bound": self.l_fit_within_bound,
            "growth_box_local": self.growth_box_local,
            "lipschitz_estimate": self.lipschitz_estimate,
            "lipschitz_samples": self.lipschitz_samples,
            "seed": self.seed,
        }


def bundle_for_instance(
    spec: OperatorSpec,
    coeffs: Coefficients,
    u: GridFunction,
    eta: float = 1.1,
    samples: int = 128,
    seed: int = 0,
) -> ConstantBundle:
    """Assemble the constants the seminorm bound needs from a solved instance.

    The trace-inequality constant is eta times the squared sampled Lipschitz
    bound of sigma on the grid box.
    """
    box = list(zip(u.grid.lo, u.grid.hi))
    lip = lipschitz_sigma_estimate(spec.structure, box, samples=samples, seed=seed)
    return ConstantBundle(
        c0=coeffs.c0,
        cbar=coeffs.c0,
        Lambda=spec.bounds.Lam,
        C=eta * lip * lip,
        L_c=coeffs.L_c,
        beta=coeffs.beta,
        L_f=coeffs.L_f,
        beta_prime=coeffs.beta_prime,
        u_inf=float(np.abs(u.flat).max()),
    )


def verify_theorem(
    spec: OperatorSpec,
    coeffs: Coefficients,
    u: GridFunction,
    bundle: ConstantBundle,
    solve_report: SolveReport,
    seed: int = 0,
    growth_radii: list | None = None,
) -> HolderReport:
    """Hypothesis checks plus fitted Holder modulus for a converged solution.

    The growth condition uses the preset's analytic asymptotic margin when one
    exists; otherwise it samples expanding spheres inside the working box and
    the report is flagged box-local.
    """
    if not solve_report.converged:
        raise PreconditionError("verify_theorem requires a converged solve")
    s = spec.structure
    box = list(zip(u.grid.lo, u.grid.hi))
    lip_samples = 128
    lip = lipschitz_sigma_estimate(s, box, samples=lip_samples, seed=seed)

    asym = growth_margin_asymptotic(s, bundle.c0, bundle.Lambda)
    if asym is not None:
        growth_ok = asym <= GROWTH_TOL
        box_local = False
    else:
        if growth_radii is None:
            r_max = min((hi - lo) / 2.0 for lo, hi in box)
            growth_radii = list(np.geomspace(r_max / 8.0, r_max, 6))
        margins = growth_condition_margin(s, bundle.c0, bundle.Lambda, growth_radii, seed=seed)
        growth_ok = margins[-1] <= GROWTH_TOL
        box_local = True

    verdicts = {
        "c0_positive": bundle.c0 > 0.0,
        "lipschitz_sigma": bool(np.isfinite(lip)),
        "growth_condition": bool(growth_ok),
    }

    alpha_fit, l_fit = fit_alpha(u, seed)
    if math.isnan(alpha_fit):
        raise PreconditionError("constant solution: Holder exponent is undefined")
    violation = max_quotient_violation(u, alpha_fit, l_fit, seed)

    clam = bundle.C * bundle.Lambda
    admissible = alpha_fit < bundle.c0 / clam if clam > 0.0 else True
    if admissible:
        try:
            bound = holder_constant_bound(bundle, alpha_fit)
        except InadmissibleExponentError:
            bound = math.inf
            admissible = False
    else:
        bound = math.inf

    return HolderReport(
        alpha_fit=alpha_fit,
        L_fit=l_fit,
        pair_count=pair_count(u, seed),
        max_violation=violation,
        theorem_bound=bound,
        hypothesis_verdicts=verdicts,
        admissible_alpha=admissible,
        l_fit_within_bound=bool(l_fit <= bound),
        growth_box_local=box_local,
        lipschitz_estimate=float(lip),
        lipschitz_samples=lip_samples,
        seed=seed,
    )
