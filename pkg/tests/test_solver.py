"""Unit tests for the directional scheme and the damped iteration."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from carnotpde import (
    Coefficients,
    DiscreteOperator,
    Grid,
    SolveConfig,
    directional_second_difference,
    discrete_operator,
    from_callable,
    manufactured_rhs,
    polynomial_field,
    preset,
    pucci_operator,
    solve,
    trace_operator,
    two_box_sensitivity,
)
from carnotpde.errors import BoundaryStencilError, PreconditionError
from carnotpde.solver import default_h_eff_cells

HEIS = preset("heisenberg1")
EUC2 = preset("euclidean:2")


def heisenberg_instance(c_value=1.0, shape=(9, 9, 9)):
    spec = trace_operator(HEIS)
    ustar = polynomial_field([[1.0, 2, 0, 0], [1.0, 0, 1, 0]], 3)  # x1^2 + x2
    c = lambda x: c_value
    f = manufactured_rhs(spec, c, ustar)
    coeffs = Coefficients(
        c=c, f=f, L_c=0.0, beta=1.0, L_f=c_value * np.sqrt(5.0), beta_prime=1.0, c0=c_value
    )
    grid = Grid((-1, -1, -1), (1, 1, 1), shape)
    cfg = SolveConfig(boundary=ustar.value)
    return spec, coeffs, grid, cfg, ustar


class TestDirectionalDifference:
    def test_affine_annihilated(self):
        g = Grid((-1, -1), (1, 1), (9, 9))
        u = from_callable(g, lambda x: 3.0 + 2.0 * x[0] - x[1])
        v = np.array([1.0, 1.0]) / np.sqrt(2.0)
        got = directional_second_difference(u, [0.0, 0.0], v, g.h)
        assert got == pytest.approx(0.0, abs=1e-10)

    @pytest.mark.parametrize("cells", [1, 2, 3])
    def test_axis_quadratic_exact(self, cells):
        g = Grid((-1, -1, -1), (1, 1, 1), (9, 9, 9))
        u = from_callable(g, lambda x: x[0] ** 2)
        got = directional_second_difference(u, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], cells * g.h)
        assert got == pytest.approx(2.0, rel=1e-12)

    def test_mixed_quadratic_along_diagonal(self):
        # u = x1 x2 is multilinear, so interpolation is exact and the
        # second derivative along the diagonal is recovered sharply
        g = Grid((-1, -1, -1), (1, 1, 1), (9, 9, 9))
        u = from_callable(g, lambda x: x[0] * x[1])
        v = np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0)
        got = directional_second_difference(u, [0.0, 0.0, 0.0], v, g.h)
        assert got == pytest.approx(1.0, abs=1e-9)

    def test_stencil_leaving_box_raises(self):
        g = Grid((-1, -1), (1, 1), (9, 9))
        u = from_callable(g, lambda x: 0.0)
        with pytest.raises(BoundaryStencilError):
            directional_second_difference(u, [0.75, 0.0], [1.0, 0.0], 4.0 * g.h)

    def test_h_eff_range_validated(self):
        g = Grid((-1, -1), (1, 1), (9, 9))
        u = from_callable(g, lambda x: 0.0)
        with pytest.raises(ValueError):
            directional_second_difference(u, [0.0, 0.0], [1.0, 0.0], 5.0 * g.h)


class TestDiscreteOperator:
    def test_constant_solution_zero_residual(self):
        spec = trace_operator(HEIS)
        k = 2.0
        coeffs = Coefficients(
            c=lambda x: 1.0, f=lambda x: -k, L_c=0.0, beta=1.0, L_f=0.0, beta_prime=1.0, c0=1.0
        )
        grid = Grid((-1, -1, -1), (1, 1, 1), (9, 9, 9))
        u = from_callable(grid, lambda x: k)
        node = grid.interior_indices()[17]
        assert abs(discrete_operator(spec, coeffs, u, node, h_eff=grid.h)) <= 1e-12

    def test_manufactured_residual_small(self):
        spec, coeffs, grid, _, ustar = heisenberg_instance()
        u = from_callable(grid, ustar.value)
        interior = grid.interior_indices()
        worst = max(abs(discrete_operator(spec, coeffs, u, n)) for n in interior[:80])
        assert worst <= 2.5 * grid.h

    def test_engel_quadratic(self):
        engel = preset("engel1")
        spec = trace_operator(engel)
        ustar = polynomial_field([[1.0, 0, 2, 0, 0]], 4)  # x2^2
        coeffs = Coefficients(
            c=lambda x: 1.0,
            f=lambda x: 2.0 - ustar.value(x),
            L_c=0.0,
            beta=1.0,
            L_f=2.0,
            beta_prime=1.0,
            c0=1.0,
        )
        grid = Grid((-1,) * 4, (1,) * 4, (7, 7, 7, 7))
        u = from_callable(grid, ustar.value)
        interior = grid.interior_indices()
        worst = max(abs(discrete_operator(spec, coeffs, u, n)) for n in interior[:60])
        assert worst <= 2.5 * grid.h

    def test_boundary_node_rejected(self):
        spec, coeffs, grid, _, ustar = heisenberg_instance()
        u = from_callable(grid, ustar.value)
        with pytest.raises(PreconditionError):
            discrete_operator(spec, coeffs, u, 0)

    def test_consistency_on_quadratics(self):
        # interior nodes at least 2h from the boundary reproduce
        # F(D^2 q, x) - c q - f up to the multilinear interpolation error of
        # the stencil ends, which for a quadratic is bounded by
        # sum_k |d_kk q| h^2 / 4 per end; scaled by the frame weights this
        # gives Tr P * sum_k |d_kk q| * h^2 / (2 h_eff^2), an O(h) envelope
        # under the default stencil-width policy
        rng = np.random.default_rng(6)
        from carnotpde import f_eval, trace_p

        for struct, spec in ((HEIS, trace_operator(HEIS)), (EUC2, pucci_operator(EUC2, 1.0, 2.0))):
            n = struct.n
            terms = []
            for i in range(n):
                terms.append([float(rng.normal()), *(2 if k == i else 0 for k in range(n))])
                terms.append([float(rng.normal()), *(1 if k == i else 0 for k in range(n))])
            terms.append([float(rng.normal()), *([1] * 2 + [0] * (n - 2))])
            q = polynomial_field(terms, n)
            coeffs = Coefficients(
                c=lambda x: 1.0,
                f=lambda x: 0.0,
                L_c=0.0,
                beta=1.0,
                L_f=0.0,
                beta_prime=1.0,
                c0=1.0,
            )
            grid = Grid((-1,) * n, (1,) * n, (17,) * n)
            h_eff = default_h_eff_cells(grid.h) * grid.h
            u = from_callable(grid, q.value)
            coords = grid.coords()
            interior = grid.interior_indices()
            deep = [
                idx
                for idx in interior
                if all(
                    min(coords[idx][k] - grid.lo[k], grid.hi[k] - coords[idx][k]) >= 2 * grid.h
                    for k in range(n)
                )
            ]
            hess_diag_sum = sum(abs(q.hessian(np.zeros(n))[k, k]) for k in range(n))
            trp_max = max(trace_p(struct, coords[idx]) for idx in deep)
            envelope = trp_max * hess_diag_sum * grid.h**2 / h_eff**2
            worst = 0.0
            for idx in deep[:: max(1, len(deep) // 64)]:
                x = coords[idx]
                exact = f_eval(spec, q.hessian(x), x) - coeffs.c(x) * q.value(x) - coeffs.f(x)
                worst = max(worst, abs(discrete_operator(spec, coeffs, u, idx) - exact))
            assert worst <= envelope

    def test_single_node_matches_vectorized(self):
        spec, coeffs, grid, _, ustar = heisenberg_instance()
        op = DiscreteOperator(spec, coeffs, grid)
        rng = np.random.default_rng(7)
        u = from_callable(grid, lambda x: float(np.sin(x[0]) + x[1] * x[2]))
        res = op.residual(u.flat)
        for pick in rng.integers(0, op.interior.size, size=24):
            node = int(op.interior[pick])
            single = discrete_operator(spec, coeffs, u, node)
            assert single == pytest.approx(float(res[pick]), rel=1e-9, abs=1e-9)

    def test_default_stencil_width(self):
        assert default_h_eff_cells(0.25) == 2
        assert default_h_eff_cells(2.0 / 15.0) == 2
        assert default_h_eff_cells(2.0 / 31.0) == 3
        assert default_h_eff_cells(1.0) == 1


class TestSolve:
    def test_zero_data_gives_zero_solution(self):
        spec = trace_operator(HEIS)
        coeffs = Coefficients(
            c=lambda x: 1.0, f=lambda x: 0.0, L_c=0.0, beta=1.0, L_f=0.0, beta_prime=1.0, c0=1.0
        )
        grid = Grid((-1, -1, -1), (1, 1, 1), (9, 9, 9))
        u, rep = solve(spec, coeffs, grid, SolveConfig(boundary=lambda x: 0.0))
        assert rep.converged
        assert np.abs(u.values).max() == 0.0

    def test_manufactured_solution_recovered(self):
        spec, coeffs, grid, cfg, ustar = heisenberg_instance()
        u, rep = solve(spec, coeffs, grid, cfg)
        assert rep.converged
        assert rep.final_residual <= cfg.tol
        exact = from_callable(grid, ustar.value)
        assert np.abs(u.values - exact.values).max() <= 0.08

    def test_comparison_principle_exact(self):
        # ordered starts stay ordered at every damped step, bitwise
        spec, coeffs, grid, cfg, ustar = heisenberg_instance()
        op = DiscreteOperator(spec, coeffs, grid)
        dt = 0.995 * op.cfl_bound
        b = op.step_matrix(dt)
        boundary = grid.boundary_mask()
        coords = grid.coords()
        base = np.zeros(grid.num_nodes)
        for idx in np.nonzero(boundary)[0]:
            base[idx] = ustar.value(coords[idx])
        rng = np.random.default_rng(8)
        for _ in range(20):
            lower = base.copy()
            upper = base.copy()
            noise = rng.normal(size=op.interior.size)
            lower[op.interior] = noise
            upper[op.interior] = noise + np.abs(rng.normal(size=op.interior.size))
            assert np.all(upper[op.interior] >= lower[op.interior])
            for _ in range(40):
                lower[op.interior] = op.step(lower, dt, b=b)
                upper[op.interior] = op.step(upper, dt, b=b)
                assert np.all(upper[op.interior] >= lower[op.interior])

    def test_deterministic(self):
        spec, coeffs, grid, cfg, _ = heisenberg_instance()
        u1, r1 = solve(spec, coeffs, grid, cfg)
        u2, r2 = solve(spec, coeffs, grid, cfg)
        assert np.array_equal(u1.values, u2.values)
        assert r1.iterations == r2.iterations

    def test_cfl_validation(self):
        spec, coeffs, grid, _, ustar = heisenberg_instance()
        op = DiscreteOperator(spec, coeffs, grid)
        cfg = SolveConfig(boundary=ustar.value, dt=op.cfl_bound * 2.0)
        with pytest.raises(ValueError):
            solve(spec, coeffs, grid, cfg)

    def test_non_convergence_reported(self):
        spec, coeffs, grid, _, ustar = heisenberg_instance()
        cfg = SolveConfig(boundary=ustar.value, max_iters=3)
        _, rep = solve(spec, coeffs, grid, cfg)
        assert not rep.converged
        assert rep.iterations == 3

    def test_warm_start_shortens_iteration(self):
        spec, coeffs, grid, cfg, _ = heisenberg_instance()
        u_cold, rep_cold = solve(spec, coeffs, grid, cfg)
        warm_cfg = SolveConfig(boundary=cfg.boundary, initial=u_cold)
        _, rep_warm = solve(spec, coeffs, grid, warm_cfg)
        assert rep_warm.converged
        assert rep_warm.iterations < rep_cold.iterations

    def test_extremal_kind_solve(self):
        spec = pucci_operator(EUC2, 1.0, 2.0, plus=True)
        ustar = polynomial_field([[1.0, 2, 0], [1.0, 0, 2]], 2)
        c = lambda x: 1.0
        f = manufactured_rhs(spec, c, ustar)
        assert f(np.zeros(2)) == pytest.approx(8.0)  # Lambda * tr(2 I) - |0|^2
        coeffs = Coefficients(
            c=c, f=f, L_c=0.0, beta=1.0, L_f=2.0 * np.sqrt(2.0), beta_prime=1.0, c0=1.0
        )
        grid = Grid((-1, -1), (1, 1), (17, 17))
        u, rep = solve(spec, coeffs, grid, SolveConfig(boundary=ustar.value))
        assert rep.converged
        exact = from_callable(grid, ustar.value)
        assert np.abs(u.values - exact.values).max() <= 0.02

    def test_two_box_sensitivity_finite(self):
        spec, coeffs, grid, cfg, _ = heisenberg_instance(shape=(9, 9, 9))
        gap = two_box_sensitivity(spec, coeffs, grid, cfg, pad_cells=2)
        assert 0.0 <= gap < 1.0

    def test_report_fields(self):
        spec, coeffs, grid, cfg, _ = heisenberg_instance()
        _, rep = solve(spec, coeffs, grid, cfg)
        payload = rep.to_dict()
        for key in ("iterations", "final_residual", "converged", "dt", "wall_time_s"):
            assert key in payload
