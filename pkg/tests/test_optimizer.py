import math

import numpy as np
import pytest

from conftest import diag
from purity_vqa.ansatz import diagonal_qubit, diagonal_qubit_family, eigenbasis_sphere
from purity_vqa.cost import global_cost
from purity_vqa.errors import AllProbesFailed, DegenerateDenominator
from purity_vqa.optimizer import OptimizerConfig, descend, fd_gradient, multi_start
from purity_vqa.state import qubit_diagonal


def qubit_cost(rho):
    return lambda t: global_cost(rho, diagonal_qubit(t[0])).value


class TestFdGradient:
    def test_quadratic(self):
        g = fd_gradient(lambda t: t[0] ** 2, np.array([1.0]), 0.005)
        assert g[0] == pytest.approx(2.0, abs=1e-6)

    def test_constant(self):
        assert np.all(fd_gradient(lambda t: 3.0, np.zeros(4), 0.005) == 0.0)

    def test_matches_analytic_derivative(self):
        # C(t) = (l1^2 c^4 + l2^2 s^4) / (l1 c^2 + l2 s^2)^2 with c = cos^2(t/2), s = sin^2(t/2)
        l1, l2 = 0.75, 0.25

        def c_of(t):
            c, s = math.cos(t / 2) ** 2, math.sin(t / 2) ** 2
            return (l1**2 * c**4 + l2**2 * s**4) / (l1 * c**2 + l2 * s**2) ** 2

        h = 1e-6
        analytic = (c_of(math.pi / 2 + h) - c_of(math.pi / 2 - h)) / (2 * h)
        g = fd_gradient(qubit_cost(diag(l1, l2)), np.array([math.pi / 2]), 0.005)
        assert g[0] == pytest.approx(analytic, abs=1e-4)

    def test_failed_probe_flagged(self):
        def cost(t):
            if t[1] > 0:
                raise DegenerateDenominator("infeasible")
            return float(t[0] ** 2)

        g = fd_gradient(cost, np.array([1.0, 0.0]), 0.01, flag_errors=True)
        assert g[0] == pytest.approx(2.0) and math.isnan(g[1])
        with pytest.raises(DegenerateDenominator):
            fd_gradient(cost, np.array([1.0, 0.0]), 0.01)


class TestDescend:
    def test_starting_at_optimum(self):
        tr = descend(qubit_cost(diag(0.5, 0.5)), [math.pi / 2])
        assert tr.converged and tr.iterations == 0 and tr.cost_star == pytest.approx(0.5)

    def test_reaches_bound(self):
        tr = descend(qubit_cost(diag(0.75, 0.25)), [math.pi / 2])
        assert tr.converged and abs(tr.cost_star - 0.5) < 1e-3

    @pytest.mark.parametrize("phi", np.round(np.arange(0.1, 3.01, 0.1), 10))
    def test_fig2_setup(self, phi):
        tr = descend(qubit_cost(qubit_diagonal(phi)), [math.pi / 2])
        assert abs(tr.cost_star - 0.5) < 1e-3

    def test_convex_bowl_monotone(self):
        tr = descend(lambda t: float(np.sum((t - 0.3) ** 2)), np.array([1.0, -1.0]), OptimizerConfig(max_iters=200))
        assert all(b <= a for a, b in zip(tr.costs, tr.costs[1:]))

    def test_never_increases_beyond_tolerance(self):
        cfg = OptimizerConfig()
        tr = descend(qubit_cost(diag(0.9, 0.1)), [0.3], cfg)
        for a, b in zip(tr.costs, tr.costs[1:]):
            assert b <= a + 10 * cfg.cost_tol * abs(a)

    def test_domain_clamping(self):
        tr = descend(lambda t: float(-t[0]), [0.0], OptimizerConfig(learning_rate=1.0), domain=[(-1.0, 1.0)])
        assert tr.theta_star[0] == 1.0 and tr.clamped and tr.stop_reason == "boundary"

    def test_theta_star_is_argmin(self):
        tr = descend(qubit_cost(diag(0.6, 0.4)), [2.5], OptimizerConfig(max_iters=5))
        assert tr.cost_star == min(tr.costs)
        assert np.array_equal(tr.theta_star, tr.thetas[int(np.argmin(tr.costs))])

    def test_deterministic(self):
        a = descend(qubit_cost(diag(0.8, 0.2)), [1.0])
        b = descend(qubit_cost(diag(0.8, 0.2)), [1.0])
        assert a.costs == b.costs

    def test_all_probes_failed(self):
        def cost(t):
            if abs(t[0]) > 1e-12:
                raise DegenerateDenominator("x")
            return 0.0

        with pytest.raises(AllProbesFailed):
            descend(cost, [0.0])

    def test_trace_serialization(self):
        tr = descend(qubit_cost(diag(0.75, 0.25)), [math.pi / 2])
        d = tr.to_dict()
        assert len(d["iterates"]) == len(tr.costs) and d["converged"] is True

    @pytest.mark.parametrize("bad", [dict(fd_step=0), dict(learning_rate=-1), dict(max_iters=0)])
    def test_config_validation(self, bad):
        with pytest.raises(ValueError):
            OptimizerConfig(**bad)


class TestMultiStart:
    def test_single_start_is_descend(self):
        fam = diagonal_qubit_family()
        cost = qubit_cost(diag(0.75, 0.25))
        cfg = OptimizerConfig(seed=3)
        ms = multi_start(cost, fam, 1, cfg)
        start = fam.sample(np.random.default_rng(3))
        assert ms.costs == descend(cost, start, cfg, fam.domain).costs

    def test_more_starts_never_worse(self):
        fam = diagonal_qubit_family()
        cost = qubit_cost(diag(0.9, 0.1))
        cfg = OptimizerConfig(seed=5, max_iters=20)
        one = multi_start(cost, fam, 1, cfg)
        five = multi_start(cost, fam, 5, cfg)
        assert five.cost_star <= one.cost_star

    def test_sphere_rank_two(self):
        rho = diag(0.6, 0.4, 0.0, 0.0)
        fam = eigenbasis_sphere(rho)
        tr = multi_start(lambda t: global_cost(rho, fam(t)).value, fam, 5, OptimizerConfig(seed=1))
        assert abs(tr.cost_star - 0.5) < 1e-3 and tr.meta["starts"] == 5

    def test_workers_do_not_change_result(self):
        fam = diagonal_qubit_family()
        cost = qubit_cost(diag(0.7, 0.3))
        a = multi_start(cost, fam, 4, OptimizerConfig(seed=2))
        b = multi_start(cost, fam, 4, OptimizerConfig(seed=2), workers=4)
        assert a.costs == b.costs and a.meta == b.meta
