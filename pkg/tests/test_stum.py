import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import erf

from girm.oracle import FourierOracle, fdm_reference
from girm.problem import DiffusionProblem, constant, paper_gaussian, single_mode
from girm.quadrature import integrate_adaptive
from girm.kernels import heat_kernel
from girm.stum import (
    BoundaryHistory,
    IllConditionedStep,
    SpaceGrid,
    TimeGrid,
    initial_layer,
    march,
    march_dirichlet,
    march_neumann,
    march_robin,
    reconstruct,
    solve_field,
    source_layer,
)

NU, L = 0.05, 1.0


def rel_max(a, b):
    return np.max(np.abs(a - b)) / np.max(np.abs(b))


@pytest.fixture(scope="module")
def dirichlet_run():
    p = DiffusionProblem(NU, L, 1.0, paper_gaussian(L), "dirichlet")
    sg, tg = SpaceGrid(41, L), TimeGrid(0.0625, 16)
    return p, sg, tg, march_dirichlet(p, sg, tg)


@pytest.fixture(scope="module")
def neumann_run():
    p = DiffusionProblem(NU, L, 1.0, paper_gaussian(L), "neumann")
    sg, tg = SpaceGrid(161, L), TimeGrid(0.005, 200)
    return p, sg, tg, march_neumann(p, sg, tg)


def test_grids():
    sg = SpaceGrid(41, L)
    assert sg.dx == pytest.approx(0.04878, abs=1e-5)
    assert np.all(np.abs(sg.midpoints) < L)
    assert TimeGrid.covering(1.0, 0.0625).K == 16
    assert TimeGrid.covering(1.0, 0.3).t_end == pytest.approx(0.9)
    with pytest.raises(ValueError):
        SpaceGrid(1, L)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 3)
    with pytest.raises(ValueError):
        TimeGrid(0.1, 0)
    p = DiffusionProblem(NU, L, 0.5, constant(0.0))
    with pytest.raises(ValueError):
        march(p, SpaceGrid(11, L), TimeGrid(0.1, 6))


def test_history_type():
    h = BoundaryHistory("flux", 0.1)
    h.append(1, 2)
    h.append(3, 4)
    assert len(h) == 2
    np.testing.assert_array_equal(h.slabs, [[1, 2], [3, 4]])
    assert BoundaryHistory("trace", 0.1).slabs.shape == (0, 2)
    with pytest.raises(ValueError):
        BoundaryHistory("density", 0.1)


def test_initial_layer():
    sg = SpaceGrid(161, L)
    zero = DiffusionProblem(NU, L, 1.0, constant(0.0))
    assert initial_layer(zero, sg, 0.3, 0.5) == 0.0
    ones = DiffusionProblem(NU, L, 1.0, constant(1.0))
    assert initial_layer(ones, sg, 0.0, 1.0) == pytest.approx(erf(1 / math.sqrt(0.2)), abs=1e-4)
    g = DiffusionProblem(NU, L, 1.0, paper_gaussian(L))
    ref = integrate_adaptive(lambda xi: paper_gaussian(L)(xi) * heat_kernel(-xi, 0.0625, NU), -L, L, rel_tol=1e-12)
    assert initial_layer(g, sg, 0.0, 0.0625) == pytest.approx(ref, rel=1e-6)
    with pytest.raises(ValueError):
        initial_layer(g, sg, 0.0, 0.0)


def test_source_layer_zero_and_partial_slab():
    sg, tg = SpaceGrid(41, L), TimeGrid(0.1, 10)
    p0 = DiffusionProblem(NU, L, 1.0, constant(0.0))
    assert source_layer(p0, sg, tg, 0.2, 0.5) == 0.0
    p1 = DiffusionProblem(NU, L, 1.0, constant(0.0), sigma=lambda x, t: np.ones_like(x))
    t = 0.04
    # same spatial midpoint sum, integrated in time by adaptive quadrature over the partial slab
    xm = sg.midpoints
    ref = integrate_adaptive(lambda s: np.array([heat_kernel(0.2 - xm, si, NU).sum() for si in np.atleast_1d(s)]) * sg.dx,
                             1e-300, t, rel_tol=1e-10)
    assert source_layer(p1, sg, tg, 0.2, t) == pytest.approx(ref, rel=1e-4)


def test_source_matches_fdm():
    p = DiffusionProblem(NU, L, 0.5, constant(0.0), "dirichlet", sigma=lambda x, t: np.ones_like(x))
    sg, tg = SpaceGrid(41, L), TimeGrid(0.0625, 8)
    field, _ = solve_field(p, sg, tg, [0.5], np.linspace(-0.9, 0.9, 19))
    Mf = 400
    ref = fdm_reference(p, Mf, 0.4 * (2 / Mf) ** 2 / NU, [0.5])
    assert rel_max(field.values[:, 0], np.interp(field.x, ref.x, ref.values[:, 0])) <= 2e-2


def test_dirichlet_matches_oracle(dirichlet_run):
    p, sg, tg, hist = dirichlet_run
    assert hist.kind == "flux" and len(hist) == tg.K
    oracle = FourierOracle.build(p)
    for t in (0.25, 0.5, 1.0):
        assert rel_max(reconstruct(p, sg, tg, hist, sg.midpoints, t), oracle(sg.midpoints, t)) <= 5e-2
    assert reconstruct(p, sg, tg, hist, 0.0, 0.5) == pytest.approx(oracle(0.0, 0.5), rel=5e-2)


def test_dirichlet_boundary_values(dirichlet_run):
    p, sg, tg, hist = dirichlet_run
    for k in range(1, tg.K + 1):
        assert np.max(np.abs(reconstruct(p, sg, tg, hist, np.array([-L, L]), k * tg.dt))) <= 1e-8


def test_dirichlet_maximum_principle(dirichlet_run):
    p, sg, tg, hist = dirichlet_run
    top = np.max(p.initial(sg.midpoints))
    for k in range(1, tg.K + 1):
        C = reconstruct(p, sg, tg, hist, sg.midpoints, k * tg.dt)
        assert np.all(C >= -0.02 * top) and np.all(C <= 1.02 * top)


def test_single_mode_fluxes():
    p = DiffusionProblem(NU, L, 1.0, single_mode(L, "dirichlet"), "dirichlet")
    sg, tg = SpaceGrid(41, L), TimeGrid(0.0625, 4)
    hist = march_dirichlet(p, sg, tg)
    k = math.pi / (2 * L)
    assert hist.minus[0] * hist.plus[0] < 0
    t = 4 * tg.dt
    decay = math.exp(-NU * k * k * t)
    assert hist.minus[3] == pytest.approx(k * math.cos(0.0) * decay, rel=0.10)
    assert hist.plus[3] == pytest.approx(k * math.cos(math.pi) * decay, rel=0.10)


def test_neumann_matches_oracle(neumann_run):
    p, sg, tg, hist = neumann_run
    assert hist.kind == "trace"
    oracle = FourierOracle.build(p)
    for t in (0.25, 0.5, 1.0):
        assert rel_max(reconstruct(p, sg, tg, hist, sg.midpoints, t), oracle(sg.midpoints, t)) <= 5e-2


def test_neumann_reconstruct_equals_trace(neumann_run):
    p, sg, tg, hist = neumann_run
    for k in (1, 7, 50, 200):
        ends = reconstruct(p, sg, tg, hist, np.array([-L, L]), k * tg.dt)
        np.testing.assert_allclose(ends, [hist.minus[k - 1], hist.plus[k - 1]], rtol=0, atol=1e-10)


def test_neumann_mass_conserved(neumann_run):
    p, sg, tg, hist = neumann_run
    x = np.concatenate([[-L], sg.midpoints, [L]])
    masses = [np.trapezoid(reconstruct(p, sg, tg, hist, x, t), x) for t in (0.25, 0.5, 1.0)]
    np.testing.assert_allclose(masses, masses[0], rtol=1e-2)


def test_neumann_boundary_gradient(neumann_run):
    # b = 0 here, so the one-sided slope is judged against the interior gradient scale
    p, sg, tg, hist = neumann_run
    dx = sg.dx
    for t in (0.25, 0.5, 1.0):
        C = reconstruct(p, sg, tg, hist, np.array([-L, -L + dx, L - dx, L]), t)
        slope_m = (C[1] - C[0]) / dx
        slope_p = (C[3] - C[2]) / dx
        grad = np.max(np.abs(np.gradient(reconstruct(p, sg, tg, hist, sg.midpoints, t), dx)))
        assert abs(slope_m - p.robin_b(-1, t)) <= 0.1 * grad
        assert abs(slope_p - p.robin_b(+1, t)) <= 0.1 * grad


def test_neumann_constant_equilibrium():
    p = DiffusionProblem(NU, L, 1.0, constant(0.8), "neumann")
    sg, tg = SpaceGrid(161, L), TimeGrid(0.005, 40)
    hist = march_neumann(p, sg, tg)
    np.testing.assert_allclose(hist.slabs, 0.8, atol=1e-6)


def test_neumann_dt_sensitivity():
    errs = []
    for dt in (0.005, 0.0625):
        p = DiffusionProblem(NU, L, 1.0, paper_gaussian(L), "neumann")
        sg, tg = SpaceGrid(161, L), TimeGrid.covering(1.0, dt)
        hist = march_neumann(p, sg, tg)
        errs.append(rel_max(reconstruct(p, sg, tg, hist, sg.midpoints, 1.0), FourierOracle.build(p)(sg.midpoints, 1.0)))
    assert errs[1] > errs[0]


def test_neumann_nonzero_flux_matches_oracle():
    p = DiffusionProblem(NU, L, 1.0, paper_gaussian(L), "neumann", f_minus=lambda t: 0.3, f_plus=lambda t: -0.2)
    sg, tg = SpaceGrid(161, L), TimeGrid(0.005, 200)
    hist = march_neumann(p, sg, tg)
    oracle = FourierOracle.build(p)
    for t in (0.25, 1.0):
        assert rel_max(reconstruct(p, sg, tg, hist, sg.midpoints, t), oracle(sg.midpoints, t)) <= 5e-2


def test_robin_manufactured_converges():
    k, phi = 1.3, 0.4
    exact = lambda x, t: np.exp(-NU * k * k * t) * np.cos(k * x + phi)
    dexact = lambda x, t: -k * np.exp(-NU * k * k * t) * np.sin(k * x + phi)
    a = {-L: 0.7, L: -0.3}
    p = DiffusionProblem(
        NU, L, 1.0, lambda x: exact(x, 0.0), "robin",
        a=lambda x, t: a[x], b=lambda x, t: dexact(x, t) + a[x] * exact(x, t),
    )
    sg = SpaceGrid(161, L)
    errs = []
    for dt in (0.02, 0.01):
        tg = TimeGrid.covering(1.0, dt)
        hist = march_robin(p, sg, tg)
        errs.append(rel_max(reconstruct(p, sg, tg, hist, sg.midpoints, 1.0), exact(sg.midpoints, 1.0)))
    assert errs[0] <= 5e-2
    assert errs[0] / errs[1] >= 1.5


def test_zero_problem_is_zero():
    for kind in ("dirichlet", "neumann"):
        p = DiffusionProblem(NU, L, 1.0, constant(0.0), kind)
        sg, tg = SpaceGrid(11, L), TimeGrid(0.1, 5)
        hist = march(p, sg, tg)
        assert np.all(hist.slabs == 0)
        assert np.all(reconstruct(p, sg, tg, hist, np.linspace(-L, L, 7), 0.33) == 0)


def test_reconstruct_domain_errors(dirichlet_run):
    p, sg, tg, hist = dirichlet_run
    with pytest.raises(ValueError):
        reconstruct(p, sg, tg, hist, 0.0, 1.5)
    with pytest.raises(ValueError):
        reconstruct(p, sg, tg, hist, 1.2, 0.5)
    with pytest.raises(ValueError):
        reconstruct(p, sg, tg, hist, 0.0, 0.0)
    short = BoundaryHistory("flux", tg.dt, hist.minus[:3], hist.plus[:3])
    with pytest.raises(ValueError):
        reconstruct(p, sg, tg, short, 0.0, 0.5)


def test_marcher_kind_checks():
    pd = DiffusionProblem(NU, L, 1.0, constant(0.0), "dirichlet")
    pn = DiffusionProblem(NU, L, 1.0, constant(0.0), "neumann")
    sg, tg = SpaceGrid(11, L), TimeGrid(0.1, 2)
    with pytest.raises(ValueError):
        march_dirichlet(pn, sg, tg)
    with pytest.raises(ValueError):
        march_neumann(pd, sg, tg)
    with pytest.raises(ValueError):
        march_robin(pd, sg, tg)


def test_ill_conditioned_step_reported():
    # a- chosen so that 1/2 - nu a- S0 vanishes at the first step
    from girm.kernels import slab_single_layer

    s0 = slab_single_layer(0.0, 0.0, 0.1, NU)
    am = 0.5 / (NU * s0)
    p = DiffusionProblem(NU, 1e3, 1.0, constant(1.0), "robin", a=lambda x, t: am if x < 0 else -am)
    with pytest.raises(IllConditionedStep) as exc:
        march_robin(p, SpaceGrid(11, 1e3), TimeGrid(0.1, 3))
    assert exc.value.k == 1


profiles = st.lists(st.floats(-2, 2), min_size=3, max_size=3)


def _problem(kind, coeffs, **kw):
    c = np.array(coeffs)
    return DiffusionProblem(0.1, L, 1.0, lambda x: c[0] + c[1] * x + c[2] * np.cos(3 * x), kind, **kw)


@settings(max_examples=15)
@given(kind=st.sampled_from(["dirichlet", "neumann"]), coeffs=profiles, factor=st.floats(-3, 3))
def test_linearity(kind, coeffs, factor):
    p = _problem(kind, coeffs)
    sg, tg = SpaceGrid(11, L), TimeGrid(0.1, 8)
    h1 = march(p, sg, tg).slabs
    h2 = march(p.scaled(factor), sg, tg).slabs
    assert np.max(np.abs(h2 - factor * h1)) <= 1e-12 * max(1.0, np.max(np.abs(h1)))


@settings(max_examples=15)
@given(kind=st.sampled_from(["dirichlet", "neumann"]), coeffs=profiles, k_old=st.integers(1, 7))
def test_causality(kind, coeffs, k_old):
    p = _problem(kind, coeffs)
    sg = SpaceGrid(11, L)
    short = march(p, sg, TimeGrid(0.1, k_old)).slabs
    full = march(p, sg, TimeGrid(0.1, 8)).slabs
    assert np.max(np.abs(full[:k_old] - short)) <= 1e-12 * max(1.0, np.max(np.abs(short)))


def test_solve_field_shape():
    p = DiffusionProblem(NU, L, 1.0, paper_gaussian(L), "dirichlet")
    field, hist = solve_field(p, SpaceGrid(41, L), TimeGrid(0.0625, 16), [0.25, 1.0])
    assert field.values.shape == (41, 2)
    assert len(hist) == 16
