import math

import numpy as np
import pytest

from shapeinv import shape1d
from shapeinv.errors import DomainError
from shapeinv.models import make_prepotential_1d
from shapeinv.shape1d import Grid1D


def test_spectrum_closed_form():
    prep = make_prepotential_1d("rosen_morse_trig", (2.0, 1.0))
    chain = shape1d.algebraic_spectrum(prep, 3)
    assert chain.energies == (0.0, 5.0, 12.0, 21.0)


def test_spectrum_box_limit():
    prep = make_prepotential_1d("rosen_morse_trig", (1.0, 1.0))
    chain = shape1d.algebraic_spectrum(prep, 3)
    assert chain.energies == (0.0, 3.0, 8.0, 15.0)


def test_spectrum_trivial():
    prep = make_prepotential_1d("rosen_morse_trig", (2.0, 1.0))
    assert shape1d.algebraic_spectrum(prep, 0).energies == (0.0,)


@pytest.mark.parametrize("b,a", [(2.0, 1.0), (1.0, 1.0), (2.5, 0.7), (3.0, 2.0)])
def test_spectrum_matches_closed_form_generic(b, a):
    prep = make_prepotential_1d("rosen_morse_trig", (b, a))
    chain = shape1d.algebraic_spectrum(prep, 10)
    for k, e in enumerate(chain.energies):
        assert abs(e - ((b + k * a) ** 2 - b ** 2)) <= 1e-12 * max(1.0, abs(e))
    assert np.all(np.diff(chain.energies) > 0)


def test_ground_state_closed_form():
    prep = make_prepotential_1d("rosen_morse_trig", (2.0, 1.0))
    grid = Grid1D(0.0, math.pi, 1024)
    gf = shape1d.ground_state_1d(prep, grid)
    ref = np.sin(grid.points()) ** 2
    ref /= np.sqrt(np.trapezoid(ref ** 2, dx=grid.h))
    assert np.max(np.abs(gf.values - ref)) < 1e-12


def test_ground_state_box():
    prep = make_prepotential_1d("rosen_morse_trig", (1.0, 1.0))
    grid = Grid1D(0.0, math.pi, 1024)
    gf = shape1d.ground_state_1d(prep, grid)
    ref = np.sin(grid.points())
    ref /= np.sqrt(np.trapezoid(ref ** 2, dx=grid.h))
    assert np.max(np.abs(gf.values - ref)) < 1e-12


def test_ground_state_symmetry():
    prep = make_prepotential_1d("rosen_morse_trig", (2.0, 1.0))
    grid = Grid1D(0.0, math.pi, 1001)
    vals = shape1d.ground_state_1d(prep, grid).values
    assert np.max(np.abs(vals - vals[::-1])) < 1e-12


def test_ground_state_non_normalizable_flagged():
    prep = make_prepotential_1d("rosen_morse_trig", (0.4, 1.0))
    grid = Grid1D(0.0, math.pi, 600)
    with pytest.warns(UserWarning):
        gf = shape1d.ground_state_1d(prep, grid)
    assert gf.meta["normalizable"] is False
    assert np.all(np.isfinite(gf.values))


def test_chain_level_zero_is_ground_state():
    prep = make_prepotential_1d("rosen_morse_trig", (2.0, 1.0))
    grid = Grid1D(0.0, math.pi, 700)
    g0 = shape1d.ground_state_1d(prep, grid)
    c0 = shape1d.wavefunction_chain(prep, 0, grid)
    assert np.max(np.abs(np.abs(c0.values) - np.abs(g0.values))) < 1e-12


def test_chain_rayleigh_quotients():
    prep = make_prepotential_1d("rosen_morse_trig", (2.0, 1.0))
    grid = Grid1D(0.0, math.pi, 2048)
    chain = shape1d.algebraic_spectrum(prep, 3)
    for n in range(4):
        gf = shape1d.wavefunction_chain(prep, n, grid)
        rq = shape1d.rayleigh_quotient(prep, gf)
        assert rq == pytest.approx(chain.energies[n], abs=1e-3)
        assert gf.sign_changes() == n  # node count


def test_chain_orthogonality():
    prep = make_prepotential_1d("rosen_morse_trig", (2.0, 1.0))
    grid = Grid1D(0.0, math.pi, 2048)
    g0 = shape1d.wavefunction_chain(prep, 0, grid)
    g1 = shape1d.wavefunction_chain(prep, 1, grid)
    assert abs(g0.inner(g1)) < 1e-6


def test_chain_convergence_order():
    # Rayleigh quotient error must shrink at measured order >= 1.9
    prep = make_prepotential_1d("rosen_morse_trig", (2.0, 1.0))
    errs = []
    for m in (512, 1024, 2048):
        gf = shape1d.wavefunction_chain(prep, 2, Grid1D(0.0, math.pi, m))
        errs.append(abs(shape1d.rayleigh_quotient(prep, gf) - 12.0))
    order1 = math.log(errs[0] / errs[1]) / math.log(2.0)
    order2 = math.log(errs[1] / errs[2]) / math.log(2.0)
    assert order1 > 1.9 or order2 > 1.9


def test_chain_preconditions():
    prep = make_prepotential_1d("rosen_morse_trig", (2.0, 1.0))
    with pytest.raises(DomainError):
        shape1d.wavefunction_chain(prep, 7, Grid1D(0.0, math.pi, 1024))
    with pytest.raises(DomainError):
        shape1d.wavefunction_chain(prep, 1, Grid1D(0.0, math.pi, 128))


def test_chain_boundary_margin_recorded():
    prep = make_prepotential_1d("rosen_morse_trig", (2.0, 1.0))
    gf = shape1d.wavefunction_chain(prep, 2, Grid1D(0.0, math.pi, 600))
    assert gf.meta["boundary_margin_cells"] == 4
    assert len(gf.meta["params_chain"]) == 3


def test_hierarchy_energies():
    prep = make_prepotential_1d("rosen_morse_trig", (2.0, 1.0))
    tower = shape1d.hierarchy(prep, 2)
    assert tower[0][1] == 0.0
    assert tower[2][1] == pytest.approx(12.0)


def test_hierarchy_potential_difference():
    # at the domain midpoint the 1/sin^2 coefficient difference is
    # b1(b1 - a) - b(b - a) = 4 for (b, a) = (2, 1)
    prep = make_prepotential_1d("rosen_morse_trig", (2.0, 1.0))
    tower = shape1d.hierarchy(prep, 1)
    v0, v1 = tower[0][0], tower[1][0]
    assert v1(math.pi / 2) - v0(math.pi / 2) == pytest.approx(4.0)


def test_grid_function_export():
    prep = make_prepotential_1d("rosen_morse_trig", (2.0, 1.0))
    gf = shape1d.ground_state_1d(prep, Grid1D(0.0, math.pi, 32))
    rows = list(gf.to_text_rows())
    assert len(rows) == 32
    x0, v0 = rows[0].split()
    assert float(x0) == 0.0 and float(v0) == 0.0
