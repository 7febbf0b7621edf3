"""1-D shape-invariance engine: algebraic spectra from remainder chains,
ground states from the prepotential, creation-operator wavefunction chains
on grids, and the tower of higher Hamiltonians.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .models import Prepotential1D, make_prepotential_1d

MAX_CHAIN = 6
MIN_CHAIN_SAMPLES = 512


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1-D grid including both endpoints."""
    x_min: float
    x_max: float
    m: int
    bc: str = "dirichlet"

    def __post_init__(self):
        if self.m < 8:
            raise DomainError("need at least 8 samples")
        if self.x_max <= self.x_min:
            raise DomainError("empty domain")
        if self.bc not in ("dirichlet", "periodic"):
            raise DomainError(f"unknown boundary condition {self.bc!r}")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.m - 1)

    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.m)


@dataclass
class GridFunction1D:
    grid: Grid1D
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def x(self) -> np.ndarray:
        return self.grid.points()

    def norm(self) -> float:
        return float(np.sqrt(np.trapezoid(self.values ** 2, dx=self.grid.h)))

    def normalized(self) -> "GridFunction1D":
        nrm = self.norm()
        if nrm == 0.0:
            raise DomainError("cannot normalize the zero function")
        return GridFunction1D(self.grid, self.values / nrm, dict(self.meta))

    def inner(self, other: "GridFunction1D") -> float:
        if other.grid != self.grid:
            raise DomainError("grid mismatch")
        return float(np.trapezoid(self.values * other.values, dx=self.grid.h))

    def sign_changes(self) -> int:
        """Strict sign changes in the grid interior (node count)."""
        v = self.values[1:-1]
        v = v[np.abs(v) > 1e-9 * np.max(np.abs(v))]
        return int(np.sum(np.sign(v[1:]) != np.sign(v[:-1])))

    def to_text_rows(self):
        for xi, vi in zip(self.x, self.values):
            yield f"{float(xi)!r} {float(vi)!r}"


@dataclass(frozen=True)
class SpectrumChain:
    """Parameter chain alpha_0 -> alpha_1 -> ... with cumulative remainders."""
    family: str
    params_chain: tuple
    remainders: tuple   # R(alpha_1) ... R(alpha_n)
    energies: tuple     # E_0 = 0, E_k = sum_{j<=k} R(alpha_j)


def algebraic_spectrum(prep: Prepotential1D, n_max: int) -> SpectrumChain:
    """Exact energies E_k = sum_{j<=k} R(alpha_j), E_0 = 0."""
    if n_max < 0:
        raise DomainError("n_max must be >= 0")
    params = [prep.params]
    remainders = []
    energies = [0.0]
    current = prep
    for _ in range(n_max):
        remainders.append(current.remainder_next())
        current = current.step()
        params.append(current.params)
        energies.append(energies[-1] + remainders[-1])
    return SpectrumChain(prep.family, tuple(params), tuple(remainders), tuple(energies))


def ground_state_1d(prep: Prepotential1D, grid: Grid1D) -> GridFunction1D:
    """psi0 ~ exp(-int W) on the grid, unit discrete L2 norm.

    Non-normalizable parameter ranges are flagged (meta['normalizable'])
    and warned about, but the state is still returned.
    """
    x = grid.points()
    vals = np.zeros_like(x)
    interior = slice(1, -1) if grid.bc == "dirichlet" else slice(None)
    with np.errstate(divide="ignore"):
        logpsi = prep.log_ground_state(x[interior])
    vals[interior] = np.where(np.isfinite(logpsi), np.exp(logpsi), 0.0)
    gf = GridFunction1D(grid, vals, {"normalizable": prep.ground_state_normalizable(),
                                     "family": prep.family, "params": prep.params})
    if not gf.meta["normalizable"]:
        warnings.warn(f"ground state of {prep.family}{prep.params} is not "
                      "normalizable; returning the formal solution", stacklevel=2)
    return gf.normalized()


def _d1_order4(v: np.ndarray, h: float) -> np.ndarray:
    """4th-order first derivative: central stencil inside, one-sided at the
    two cells adjacent to each boundary."""
    d = np.empty_like(v)
    d[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)
    d[0] = (-25 * v[0] + 48 * v[1] - 36 * v[2] + 16 * v[3] - 3 * v[4]) / (12 * h)
    d[1] = (-3 * v[0] - 10 * v[1] + 18 * v[2] - 6 * v[3] + v[4]) / (12 * h)
    d[-1] = (25 * v[-1] - 48 * v[-2] + 36 * v[-3] - 16 * v[-4] + 3 * v[-5]) / (12 * h)
    d[-2] = (3 * v[-1] + 10 * v[-2] - 18 * v[-3] + 6 * v[-4] - v[-5]) / (12 * h)
    return d


def wavefunction_chain(prep: Prepotential1D, n: int, grid: Grid1D,
                       n_max_chain: int = MAX_CHAIN) -> GridFunction1D:
    """psi_n = A+(alpha_0) ... A+(alpha_{n-1}) psi_0(alpha_n) on the grid.

    Each creation step applies -d/dx + W(alpha_j) with 4th-order stencils
    and renormalizes; meta['boundary_margin_cells'] records the interior
    margin trusted after repeated one-sided differentiation.
    """
    if n < 0 or n > n_max_chain:
        raise DomainError(f"chain length {n} outside [0, {n_max_chain}]")
    if grid.m < MIN_CHAIN_SAMPLES:
        raise DomainError(f"chain grids need at least {MIN_CHAIN_SAMPLES} samples")
    chain = [prep]
    for _ in range(n):
        chain.append(chain[-1].step())
    psi = ground_state_1d(chain[-1], grid)
    x, h = grid.points(), grid.h
    values = psi.values.copy()
    for j in range(n - 1, -1, -1):
        w = np.zeros_like(x)
        w[1:-1] = chain[j].w(x[1:-1])  # endpoints may sit on poles of W
        values = -_d1_order4(values, h) + w * values
        if grid.bc == "dirichlet":
            values[0] = values[-1] = 0.0
        values /= np.sqrt(np.trapezoid(values ** 2, dx=h))
    meta = {"levels": n, "boundary_margin_cells": 2 * n,
            "params_chain": tuple(p.params for p in chain)}
    return GridFunction1D(grid, values, meta)


def rayleigh_quotient(prep: Prepotential1D, gf: GridFunction1D) -> float:
    """<psi, H psi> / <psi, psi> with H = -d2/dx2 + (W^2 - W').

    Evaluated on the central interior (two cells trimmed at each end), which
    is where chain states are trusted; the trimmed tails vanish at the walls.
    """
    x, h, v = gf.x, gf.grid.h, gf.values
    d2 = (-v[:-4] + 16 * v[1:-3] - 30 * v[2:-2] + 16 * v[3:-1] - v[4:]) / (12 * h * h)
    inner = slice(2, -2)
    hv = -d2 + prep.potential(x[inner]) * v[inner]
    return float(np.sum(v[inner] * hv) / np.sum(v[inner] ** 2))


def hierarchy(prep: Prepotential1D, n: int):
    """The tower H(k) = H(0) at alpha_k plus accumulated remainders.

    Returns a list of (potential_k, E0_k): potential_k is a callable
    evaluating W^2 - W' at alpha_k shifted by E0_k = sum_{j<=k} R(alpha_j),
    which is the ground energy of the k-th member in the original reference.
    """
    if n < 0:
        raise DomainError("n must be >= 0")
    chain = algebraic_spectrum(prep, n)
    out = []
    for k, params in enumerate(chain.params_chain):
        pk = make_prepotential_1d(prep.family, params)
        e0 = chain.energies[k]

        def potential_k(x, _p=pk, _e=e0):
            return _p.potential(x) + _e

        out.append((potential_k, e0))
    return out
