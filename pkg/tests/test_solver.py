import numpy as np
import pytest

from symgrad.errors import ConvergenceError, DomainError
from symgrad.orlicz import NonlinearityLaw
from symgrad.probe import SMOOTH_FIELD
from symgrad.solver import (DirichletProblem, Discretization, FEModel, SolverConfig,
                            StructuredGrid, continuation_solve, convergence_rates, energy,
                            initial_guess, interpolate, l2_error, manufactured_rhs,
                            newton_solve, nodal_max_error, polynomial_boundary, residual)
from symgrad.tensorfields import PolyVectorField, affine_field, singular_field

REG = NonlinearityLaw.regularized


def _random_interior(problem, rng, scale=0.3):
    u = initial_guess(problem)
    m = ~problem.grid.boundary_mask()
    u.values[m] += scale * rng.normal(size=u.values[m].shape)
    return u


def test_grid_basics():
    g = StructuredGrid.box(2, 0.0, 1.0, 4)
    assert g.num_nodes == 25 and g.num_cells == 16
    assert g.boundary_mask().sum() == 16
    assert g.cell_volume == pytest.approx(1 / 16)
    with pytest.raises(DomainError):
        StructuredGrid.box(4, 0.0, 1.0, 2)


def test_quadrature_weights_sum_to_volume():
    for n in (2, 3):
        d = Discretization(StructuredGrid.box(n, -1.0, 1.0, 3), 3)
        assert d.w.sum() * d.grid.num_cells == pytest.approx(2.0 ** n)


def test_energy_zero_and_quadratic():
    g = StructuredGrid.box(2, 0.0, 1.0, 4)
    prob = DirichletProblem(REG(1.7, 0.1), g)
    assert energy(prob, initial_guess(prob)) == 0.0
    # p = 2: energy equals half the strain energy minus the load
    rng = np.random.default_rng(0)
    prob2 = DirichletProblem(REG(2.0, 0.3), g, rhs=lambda X: np.ones_like(X))
    u = _random_interior(prob2, rng)
    d = Discretization(g, 3)
    e = d.strain_at_quad(u.values)
    quad = 0.5 * np.einsum("q,cqij,cqij->", d.w, e, e)
    model = FEModel(prob2)
    assert energy(prob2, u) == pytest.approx(quad - model.load @ u.flat, rel=1e-12)


def test_singular_interpolant_energy():
    # B ~ t^3/3 for a tiny eps; interpolant strain differs from the exact one by O(h)
    g = StructuredGrid.box(2, -1.0, 1.0, 64)
    prob = DirichletProblem(REG(3.0, 1e-8), g, polynomial_boundary(singular_field(2)))
    assert energy(prob, initial_guess(prob)) == pytest.approx(8 / 3, rel=2e-2)


@pytest.mark.parametrize("law", [REG(1.7, 0.05), REG(3.0, 0.01), NonlinearityLaw.carreau(1.6, 0.2)])
def test_residual_is_energy_gradient(law, rng):
    g = StructuredGrid.box(2, 0.0, 1.0, 5)
    prob = DirichletProblem(law, g, polynomial_boundary(SMOOTH_FIELD), manufactured_rhs(law, SMOOTH_FIELD))
    model = FEModel(prob)
    u = _random_interior(prob, rng)
    x = u.flat[model.disc.free]
    for _ in range(3):
        v = rng.normal(size=x.shape)
        h = 1e-5
        fd = (model.energy(model.with_interior(u, x + h * v))
              - model.energy(model.with_interior(u, x - h * v))) / (2 * h)
        ex = float(model.residual(u) @ v)
        assert abs(fd - ex) <= 1e-6 * abs(ex)


def test_jacobian_symmetric_and_fd(rng):
    law = REG(2.6, 0.05)
    g = StructuredGrid.box(2, 0.0, 1.0, 4)
    prob = DirichletProblem(law, g, polynomial_boundary(SMOOTH_FIELD))
    model = FEModel(prob)
    u = _random_interior(prob, rng)
    K = model.jacobian(u).toarray()
    assert np.allclose(K, K.T, atol=1e-13 * np.abs(K).max())
    x = u.flat[model.disc.free]
    v = rng.normal(size=x.shape)
    h = 1e-6
    fd = (model.residual(model.with_interior(u, x + h * v))
          - model.residual(model.with_interior(u, x - h * v))) / (2 * h)
    assert np.linalg.norm(fd - K @ v) <= 1e-6 * np.linalg.norm(K @ v)


def test_zero_strain_jacobian_branch():
    law = REG(1.6, 0.1)
    prob = DirichletProblem(law, StructuredGrid.box(2, 0.0, 1.0, 3))
    model = FEModel(prob)
    K = model.jacobian(initial_guess(prob)).toarray()
    assert np.all(np.isfinite(K)) and np.all(np.linalg.eigvalsh(K) > 0)


def test_p2_linear_residual_and_one_step(rng):
    g = StructuredGrid.box(2, 0.0, 1.0, 6)
    law = REG(2.0, 0.2)
    prob = DirichletProblem(law, g, polynomial_boundary(SMOOTH_FIELD), manufactured_rhs(law, SMOOTH_FIELD))
    model = FEModel(prob)
    u, w = _random_interior(prob, rng), _random_interior(prob, rng)
    v = rng.normal(size=model.disc.free.shape)
    xu, xw = u.flat[model.disc.free], w.flat[model.disc.free]
    du = model.residual(model.with_interior(u, xu + v)) - model.residual(u)
    dw = model.residual(model.with_interior(w, xw + v)) - model.residual(w)
    assert np.allclose(du, dw, atol=1e-12)
    sol, rep = newton_solve(prob, SolverConfig(), _random_interior(prob, rng, 2.0))
    assert rep.iterations == 1
    # the discrete solution solves the assembled linear system K x = -R(lift)
    from scipy.sparse.linalg import spsolve
    lift = model.with_interior(sol, np.zeros(model.disc.free.shape))
    x = spsolve(model.jacobian(lift).tocsc(), -model.residual(lift))
    assert np.allclose(sol.flat[model.disc.free], x, atol=1e-10)


def test_affine_data_gives_affine_minimizer(rng):
    aff = affine_field(rng.normal(size=(2, 2)), rng.normal(size=2))
    g = StructuredGrid.box(2, 0.0, 1.0, 6)
    prob = DirichletProblem(REG(1.7, 0.05), g, polynomial_boundary(aff))
    u, rep = newton_solve(prob, SolverConfig(), initial_guess(prob, "zero"))
    assert nodal_max_error(u, polynomial_boundary(aff)) < 1e-9
    assert np.all(np.diff(rep.energy_history) <= 1e-12 * max(1.0, abs(rep.energy_history[0])))


def test_energy_decreases_and_convergence_error(rng):
    g = StructuredGrid.box(2, 0.0, 1.0, 8)
    law = REG(3.0, 0.01)
    prob = DirichletProblem(law, g, polynomial_boundary(SMOOTH_FIELD), manufactured_rhs(law, SMOOTH_FIELD))
    u, rep = newton_solve(prob, SolverConfig(), initial_guess(prob, "zero"))
    E = np.array(rep.energy_history)
    assert np.all(np.diff(E) <= 1e-12 * np.abs(E[:-1]).max())
    K = FEModel(prob).jacobian(u)
    assert np.linalg.eigvalsh(K.toarray()).min() > 0
    with pytest.raises(ConvergenceError) as exc:
        newton_solve(prob, SolverConfig(max_steps=1), initial_guess(prob, "zero"))
    assert exc.value.iterate is not None


def test_manufactured_rhs_examples(rng):
    X = rng.uniform(-1, 1, (7, 2))
    for p in (1.6, 2.0, 3.0):
        assert np.allclose(manufactured_rhs(REG(p, 0.01), singular_field(2))(X), 0.0, atol=1e-13)
    assert np.allclose(manufactured_rhs(REG(1.7, 0.1), affine_field(np.eye(2), [0, 0]))(X), 0.0)
    # u = (x1^2, 0), p = 2: eps u = diag(2 x1, 0), div(eps u) = (2, 0)
    f = manufactured_rhs(REG(2.0, 0.1), PolyVectorField([{(2, 0): 1.0}, {}]))
    assert np.allclose(f(X), [[-2.0, 0.0]] * 7)


def test_singular_law_rejected():
    with pytest.raises(DomainError):
        DirichletProblem(NonlinearityLaw.power(1.5), StructuredGrid.box(2, 0.0, 1.0, 2))


def test_p2_rates():
    law = REG(2.0, 0.1)
    hs, errs = [], []
    for cells in (8, 16, 32):
        g = StructuredGrid.box(2, 0.0, 1.0, cells)
        prob = DirichletProblem(law, g, polynomial_boundary(SMOOTH_FIELD), manufactured_rhs(law, SMOOTH_FIELD))
        u, _ = newton_solve(prob, SolverConfig(), initial_guess(prob, "zero"))
        hs.append(1 / cells)
        errs.append(l2_error(u, polynomial_boundary(SMOOTH_FIELD)))
    assert np.all(convergence_rates(hs, errs) >= 1.8)


def test_nonlinear_nodal_error_shrinks():
    law = REG(1.8, 1e-3)
    errs = []
    for cells in (4, 8, 16):
        g = StructuredGrid.box(2, 0.0, 1.0, cells)
        prob = DirichletProblem(law, g, polynomial_boundary(SMOOTH_FIELD), manufactured_rhs(law, SMOOTH_FIELD))
        u, _ = newton_solve(prob, SolverConfig(), initial_guess(prob, "zero"))
        errs.append(nodal_max_error(u, polynomial_boundary(SMOOTH_FIELD)))
    assert errs[2] < errs[1] < errs[0]


def test_continuation_p2_stages_identical():
    g = StructuredGrid.box(2, 0.0, 1.0, 6)
    law = REG(2.0, 0.1)
    prob = DirichletProblem(law, g, polynomial_boundary(SMOOTH_FIELD), manufactured_rhs(law, SMOOTH_FIELD))
    cfg = SolverConfig(eps_floor=1e-3)
    u, rep = continuation_solve(prob, cfg, initial_guess(prob, "zero"),
                                monitor=lambda v, law: float(np.abs(v.values).sum()))
    vals = [m for _, m in rep.monitor]
    assert np.allclose(vals, vals[0], rtol=1e-12)
    assert [e for e, _ in rep.stages] == cfg.eps_schedule()


def test_eps_schedule_and_config_validation():
    assert SolverConfig().eps_schedule()[0] == 0.1 and SolverConfig().eps_schedule()[-1] == 1e-5
    with pytest.raises(DomainError):
        SolverConfig(eps_factor=1.5)


def test_interpolate_and_zero_initial():
    g = StructuredGrid.box(3, 0.0, 1.0, 2)
    u = interpolate(g, lambda X: X, lambda X: np.zeros_like(X))
    m = g.boundary_mask()
    assert np.allclose(u.values[m], g.node_coords()[m]) and np.allclose(u.values[~m], 0)


def test_residual_function_matches_model(rng):
    g = StructuredGrid.box(2, 0.0, 1.0, 3)
    prob = DirichletProblem(REG(1.7, 0.1), g, polynomial_boundary(SMOOTH_FIELD))
    u = _random_interior(prob, rng)
    assert np.allclose(residual(prob, u), FEModel(prob).residual(u))
