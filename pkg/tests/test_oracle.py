import numpy as np
import pytest

from indefla import (AngularSpectrum, RadialGrid, SingularDiscreteSystemError, SourceSpec, fd_residual,
                     fd_transmission_solve, interior_poisson_mode, solve_critical_mode, solve_regularized_mode)
from indefla.core import Contrast
from indefla.oracle import SampledField, convergence_study, max_error, sample
from indefla.poisson import TraceModeVector


def test_grid_layout(canonical, in_range_source):
    grid = RadialGrid.for_problem(canonical, in_range_source, 65)
    assert grid.breakpoints == (0.0, 1.0, 2.0, 5.0, 6.0, 8.0)
    assert grid.spacing()[0] == pytest.approx(1 / 64)
    fine = grid.refined()
    assert fine.n_points == 129
    assert np.all(np.isin(grid.nodes()[2], fine.nodes()[2]))
    with pytest.raises(ValueError):
        RadialGrid((0.0, 1.0), 32)
    with pytest.raises(ValueError):
        RadialGrid((0.0, 2.0, 1.0), 64)


def test_zero_source_gives_zero_field(canonical):
    src = SourceSpec(5.0, 6.0, AngularSpectrum.single(4))
    grid = RadialGrid.for_problem(canonical, src, 64)
    field = fd_transmission_solve(canonical, Contrast(2.0, 0.1), 2, src, grid)
    assert np.all(field.u == 0)
    assert field.r.shape == field.u.shape


def test_corrupted_node_is_detected(canonical):
    piece = interior_poisson_mode(canonical, TraceModeVector(2, 1.0, -0.5))
    grid = RadialGrid((canonical.r_i, canonical.r_e), 101)
    values = sample(piece, grid)
    clean = fd_residual(SampledField(grid, values), 2, (1.0, 1.0, 1.0), None, grid, canonical)
    values = [v.copy() for v in values]
    values[0][50] += 1.0
    dirty = fd_residual(SampledField(grid, values), 2, (1.0, 1.0, 1.0), None, grid, canonical)
    h = grid.spacing()[0]
    assert clean < 1e-3
    assert dirty >= 0.1 / h ** 2


def test_poisson_piece_residual_is_second_order(canonical):
    piece = interior_poisson_mode(canonical, TraceModeVector(5, 1.0, 2.0))
    res = [fd_residual(piece, 5, (1.0, 1.0, 1.0), None, RadialGrid((canonical.r_i, canonical.r_e), n), canonical)
           for n in (65, 129, 257)]
    for coarse, fine in zip(res, res[1:]):
        assert 3.6 <= coarse / fine <= 4.4


@pytest.mark.parametrize("mu,delta,m", [(2.0, 0.05, 2), (1.0, 0.0, 3), (1.0, 0.01, 1)])
def test_refinement_against_closed_form(canonical, mu, delta, m):
    src = SourceSpec(5.0, 6.0, AngularSpectrum.single(m))
    if delta == 0:
        exact = solve_critical_mode(canonical, m, src)
    else:
        exact = solve_regularized_mode(canonical, mu, delta, m, src)
    study = convergence_study(canonical, Contrast(mu, delta), m, src, n_points=65, doublings=3, exact=exact)
    ratios = [e0 / e1 for e0, e1 in zip(study["errors"], study["errors"][1:])]
    assert all(3.6 <= r <= 4.4 for r in ratios)
    assert study["n_points"] == [65, 129, 257, 513]


@pytest.mark.parametrize("mu,delta,m", [(2.0, 0.05, 2), (1.0, 0.01, 5)])
def test_self_convergence_order(canonical, mu, delta, m):
    src = SourceSpec(5.0, 6.0, AngularSpectrum.single(m))
    study = convergence_study(canonical, Contrast(mu, delta), m, src, n_points=65, doublings=3)
    assert len(study["orders"]) == 2
    assert all(1.9 <= p <= 2.1 for p in study["orders"])


def test_sample_rejects_other_grid(canonical, mode3_source):
    g1 = RadialGrid.for_problem(canonical, mode3_source, 64)
    field = fd_transmission_solve(canonical, Contrast(2.0, 0.1), 3, mode3_source, g1)
    with pytest.raises(ValueError):
        sample(field, g1.refined())
    assert max_error(field, field, g1) == 0.0


def test_singular_system_is_reported(canonical, mode3_source, monkeypatch):
    import indefla.oracle as oracle

    def boom(*args, **kwargs):
        raise RuntimeError("Factor is exactly singular")

    monkeypatch.setattr(oracle.spla, "splu", boom)
    grid = RadialGrid.for_problem(canonical, mode3_source, 64)
    with pytest.raises(SingularDiscreteSystemError) as info:
        fd_transmission_solve(canonical, Contrast(1.0, 0.0), 3, mode3_source, grid)
    assert info.value.code == "singular_discrete_system"
