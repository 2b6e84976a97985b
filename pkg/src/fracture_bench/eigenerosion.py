"""Eigenerosion energy model for the mesh-aligned slit crack.

The inelastic (fracture) energy follows from the closed-form area of the
epsilon-neighborhood of the eroded element row; the elastic part comes from
an equilibrium solve with those elements' stiffness removed. The optimal
length parameter, its asymptote and the Richardson-extrapolated energy are
all closed-form in the element count ceil(2a/h).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import stress_components
from .config import ConfigError, ProblemParams
from .fem import (
    QUADRATURE_MODES,
    EnergyBreakdown,
    EquilibriumSolver,
    assemble,
    energies,
    traction_loads,
)
from .grid import Grid, crack_element_count, register_crack_ee

#: Richardson weight cancelling the sqrt(h) term between levels h and 2h.
RICHARDSON_WEIGHT = math.sqrt(2.0) / (math.sqrt(2.0) - 1.0)


@dataclass(frozen=True)
class EEParams:
    """Derived erosion quantities for a crack of half-length a on mesh h."""

    a: float
    h: float
    Gc: float
    epsilon: float          # length parameter actually used
    n_eroded: int           # ceil(2a/h)
    delta: float            # ceiling remainder, (n_eroded - 2a/h)/2

    @classmethod
    def create(cls, a: float, h: float, Gc: float,
               epsilon: float | None = None) -> "EEParams":
        if a <= 0 or h <= 0 or Gc <= 0:
            raise ConfigError("a, h and Gc must be positive")
        n = crack_element_count(a, h)
        eps = optimal_epsilon(a, h)[0] if epsilon is None else float(epsilon)
        if eps <= 0:
            raise ConfigError(f"epsilon must be positive, got {eps}")
        return cls(a=a, h=h, Gc=Gc, epsilon=eps, n_eroded=n,
                   delta=0.5 * (n - 2.0 * a / h))


@dataclass(frozen=True)
class EEResult:
    energy: EnergyBreakdown
    epsilon: float
    n_eroded: int
    variant: str            # "plain" | "richardson"


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

def neighborhood_area(a: float, h: float, epsilon: float) -> float:
    """Area of the epsilon-neighborhood of the eroded element row.

    A = N h^2 + 2 (N+1) h eps + pi eps^2 with N = ceil(2a/h): the rectangle
    of eroded elements, its dilated flanks and the rounded caps.
    """
    if a <= 0 or h <= 0 or epsilon <= 0:
        raise ValueError("a, h and epsilon must be positive")
    n = crack_element_count(a, h)
    return n * h * h + 2.0 * (n + 1) * h * epsilon + math.pi * epsilon * epsilon


def inelastic_energy(a: float, h: float, epsilon: float, Gc: float) -> float:
    """Fracture energy Gc/(2 eps) * A of the eroded-row neighborhood."""
    return Gc / (2.0 * epsilon) * neighborhood_area(a, h, epsilon)


def optimal_epsilon(a: float, h: float) -> tuple[float, float]:
    """Energy-minimizing length parameter and its fine-mesh asymptote.

    Returns (eps_h, eps_asymptotic) with eps_h = h sqrt(N/pi) and the
    asymptote sqrt(2 a h / pi), the geometric mean of crack length and mesh
    size over pi.
    """
    if a <= 0 or h <= 0:
        raise ValueError("a and h must be positive")
    n = crack_element_count(a, h)
    return h * math.sqrt(n / math.pi), math.sqrt(2.0 * a * h / math.pi)


def optimal_inelastic_energy(a: float, h: float, Gc: float) -> float:
    """Minimum attainable fracture energy at mesh size h.

    Equals Gc h (1 + N + sqrt(pi N)); decreases monotonically to Gc 2a.
    """
    if Gc <= 0:
        raise ValueError("Gc must be positive")
    n = crack_element_count(a, h)
    return Gc * h * (1.0 + n + math.sqrt(math.pi * n))


def richardson_inelastic_energy(a: float, h: float, Gc: float) -> float:
    """Two-level extrapolation cancelling the sqrt(h) fracture-energy error.

    lam * E_h + (1 - lam) * E_2h with lam = sqrt(2)/(sqrt(2)-1); requires the
    coarse level 2h to still resolve the crack.
    """
    if crack_element_count(a, 2.0 * h) < 1:
        raise ValueError(f"coarse level 2h={2 * h} does not resolve the crack")
    lam = RICHARDSON_WEIGHT
    return (lam * optimal_inelastic_energy(a, h, Gc)
            + (1.0 - lam) * optimal_inelastic_energy(a, 2.0 * h, Gc))


# ---------------------------------------------------------------------------
# Benchmark solve
# ---------------------------------------------------------------------------

def erosion_multipliers(grid: Grid, eroded_elements: np.ndarray,
                        residual: float = 0.0) -> np.ndarray:
    """Per-element stiffness multipliers: ``residual`` on eroded, 1 elsewhere."""
    m = np.ones(grid.n_elements)
    m[eroded_elements] = residual
    return m


def solve_ee(grid: Grid, params: ProblemParams,
             epsilon: float | None = None,
             variant: str = "plain",
             quadrature: str = "reference",
             residual: float = 0.0,
             solver: EquilibriumSolver | None = None) -> EEResult:
    """Full eigenerosion benchmark solve on one mesh.

    Erodes the registered crack row, solves equilibrium under the analytic
    boundary tractions and combines the elastic energy with the closed-form
    inelastic energy (plain or Richardson-extrapolated). ``epsilon=None``
    uses the optimal closed form.
    """
    if variant not in ("plain", "richardson"):
        raise ValueError(f"unknown EE variant {variant!r}")
    elem_order, edge_order = QUADRATURE_MODES[quadrature]
    a, sigma0 = params.a, params.sigma0

    if a > 0:
        reg = register_crack_ee(grid, a)
        if reg.eroded_elements.size == 0:
            raise ConfigError("registration/crack mismatch: no eroded elements")
        ee = EEParams.create(a, grid.h, params.material.Gc, epsilon)
        multipliers = erosion_multipliers(grid, reg.eroded_elements, residual)
        xc, yc = reg.crack_x_center, reg.crack_y
        if variant == "richardson":
            inelastic = richardson_inelastic_energy(a, grid.h, params.material.Gc)
        else:
            inelastic = inelastic_energy(a, grid.h, ee.epsilon, params.material.Gc)
        eps_used = ee.epsilon
        n_eroded = ee.n_eroded
    else:
        multipliers = np.ones(grid.n_elements)
        xc = yc = 0.0
        inelastic = 0.0
        eps_used = 0.0
        n_eroded = 0

    def stress_fn(X, Y):
        return stress_components(X - xc, Y - yc, a, sigma0)

    K = assemble(grid, params.material, multipliers, order=elem_order)
    loads = traction_loads(grid, stress_fn, order=edge_order)
    if solver is None:
        solver = EquilibriumSolver(grid)
    u = solver.solve(K, loads)
    breakdown = energies(grid, params.material, u, multipliers, loads,
                         order=elem_order, K=K)
    return EEResult(energy=breakdown.with_inelastic(inelastic),
                    epsilon=eps_used, n_eroded=n_eroded, variant=variant)
