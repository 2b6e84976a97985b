"""Closed-form reference solution for the slit crack under biaxial tension.

Stresses come from the classical complex-potential solution of the mode-I
center crack, written in the two-tip polar form. Angles are taken from a
two-argument arctangent with range (-pi, pi], which makes the field
single-valued everywhere off the slit and discontinuous exactly across it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import MaterialParams, ProblemParams


class EvaluationDomainError(ValueError):
    """Raised when a stress evaluation point coincides with a crack tip."""


@dataclass(frozen=True)
class StressState:
    s11: float
    s22: float
    s12: float


@dataclass(frozen=True)
class StrainState:
    e11: float
    e22: float
    g12: float      # engineering shear strain, 2*eps12


@dataclass(frozen=True)
class ReferenceEnergies:
    W0: float                  # far-field strain-energy density
    Pi_elastic_exact: float    # exact elastic potential over the domain
    E_fracture_exact: float    # Gc * 2a
    Pi_total_exact: float
    K_I: float


#: Crack-tip exclusion radius, relative to the crack half-length.
TIP_EXCLUSION = 1e-12


def stress_components(x1, x2, a: float, sigma0: float):
    """Vectorized stress field in crack-aligned coordinates.

    Parameters
    ----------
    x1, x2 : array_like
        Evaluation points; the crack occupies {|x1| <= a, x2 = 0}.
    a : float
        Crack half-length. ``a = 0`` returns the uniform far field.
    sigma0 : float
        Remote equibiaxial stress.

    Returns
    -------
    (s11, s22, s12) : ndarrays broadcast to the input shape.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    shape = np.broadcast_shapes(x1.shape, x2.shape)
    if a == 0.0:
        s0 = np.full(shape, sigma0)
        return s0, s0.copy(), np.zeros(shape)
    if a < 0:
        raise EvaluationDomainError(f"crack half-length must be >= 0, got {a}")

    r1 = np.hypot(x1 - a, x2)     # from tip +a
    r2 = np.hypot(x1 + a, x2)     # from tip -a
    if np.any(r1 <= TIP_EXCLUSION * a) or np.any(r2 <= TIP_EXCLUSION * a):
        raise EvaluationDomainError("stress evaluation at a crack tip")

    r = np.hypot(x1, x2)
    theta = np.arctan2(x2, x1)
    theta1 = np.arctan2(x2, x1 - a)
    theta2 = np.arctan2(x2, x1 + a)

    amp = sigma0 * r / np.sqrt(r1 * r2)
    half_sum = theta - 0.5 * (theta1 + theta2)
    tip_factor = a * a / (r1 * r2)
    s3 = np.sin(theta) * np.sin(1.5 * (theta1 + theta2))
    c3 = np.sin(theta) * np.cos(1.5 * (theta1 + theta2))

    s11 = amp * (np.cos(half_sum) - tip_factor * s3)
    s22 = amp * (np.cos(half_sum) + tip_factor * s3)
    s12 = amp * tip_factor * c3
    return s11, s22, s12


def stress_at(point, a: float, sigma0: float) -> StressState:
    """Stress state at a single point in crack-aligned coordinates."""
    s11, s22, s12 = stress_components(point[0], point[1], a, sigma0)
    return StressState(float(s11), float(s22), float(s12))


def strain_from_stress(s: StressState, material: MaterialParams) -> StrainState:
    """Plane-strain Hooke inversion."""
    E, nu = material.E, material.nu
    c1 = (1.0 - nu * nu) / E
    c2 = nu * (1.0 + nu) / E
    return StrainState(
        e11=c1 * s.s11 - c2 * s.s22,
        e22=c1 * s.s22 - c2 * s.s11,
        g12=2.0 * (1.0 + nu) / E * s.s12,
    )


def strain_energy_density(e: StrainState, material: MaterialParams) -> float:
    """Full isotropic plane-strain energy density.

    W = lam/2 (e11+e22)^2 + mu (e11^2 + e22^2 + g12^2/2), which for the
    far-field strain state reduces to (1-2nu)(1+nu)/E * sigma0^2.
    """
    lam, mu = material.lam, material.mu
    tr = e.e11 + e.e22
    return 0.5 * lam * tr * tr + mu * (e.e11 ** 2 + e.e22 ** 2 + 0.5 * e.g12 ** 2)


def far_field_strain(sigma0: float, material: MaterialParams) -> StrainState:
    """Uniform strain of the crack-free panel."""
    e0 = (1.0 - 2.0 * material.nu) * (1.0 + material.nu) / material.E * sigma0
    return StrainState(e11=e0, e22=e0, g12=0.0)


def reference_energies(params: ProblemParams) -> ReferenceEnergies:
    """Exact limiting energies of the Griffith solution on the panel."""
    m = params.material
    sigma0, a, D = params.sigma0, params.a, params.D
    W0 = (1.0 - 2.0 * m.nu) * (1.0 + m.nu) / m.E * sigma0 ** 2
    K_I = sigma0 * math.sqrt(math.pi * a)
    Pi_elastic = -W0 * D * D - (1.0 - m.nu ** 2) / m.E * math.pi * a * a * sigma0 ** 2
    E_fracture = m.Gc * 2.0 * a
    return ReferenceEnergies(
        W0=W0,
        Pi_elastic_exact=Pi_elastic,
        E_fracture_exact=E_fracture,
        Pi_total_exact=Pi_elastic + E_fracture,
        K_I=K_I,
    )
