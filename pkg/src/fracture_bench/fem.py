"""Bilinear-quadrilateral plane-strain machinery on regular square meshes.

Stiffness assembly accepts a per-element or per-quadrature-point stiffness
multiplier so the same code path serves the intact panel, the eroded-element
model and the degraded phase-field model. Loads are consistent nodal forces
of the analytic boundary tractions. The pure-traction problem is closed by
constraining the three rigid modes (zero mean displacement in each direction
and zero mean linearized rotation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .config import MaterialParams
from .grid import Grid

#: Element / boundary-edge Gauss orders per quadrature mode. The reference
#: element rule integrates every polynomial integrand of the energy models
#: exactly; the fast rule matches common engineering practice.
QUADRATURE_MODES = {
    "reference": (3, 8),
    "fast": (2, 2),
}

DIRECT_SOLVE_LIMIT = 70_000     # dofs; above this the AMG path is used


class SolverError(RuntimeError):
    """Linear solver failed to meet the residual contract."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


# ---------------------------------------------------------------------------
# Energies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyBreakdown:
    """Elastic/inelastic/load-work split; the potential is derived exactly."""

    elastic: float
    inelastic: float
    load_work: float

    @property
    def potential(self) -> float:
        return self.elastic + self.inelastic - self.load_work

    def with_inelastic(self, inelastic: float) -> "EnergyBreakdown":
        return EnergyBreakdown(self.elastic, inelastic, self.load_work)


# ---------------------------------------------------------------------------
# Quadrature and shape functions
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def gauss_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    pts, wts = np.polynomial.legendre.leggauss(order)
    return pts, wts


def shape_functions(xi, eta) -> np.ndarray:
    """Q1 shape functions, counterclockwise from the lower-left corner."""
    return 0.25 * np.array([
        (1 - xi) * (1 - eta),
        (1 + xi) * (1 - eta),
        (1 + xi) * (1 + eta),
        (1 - xi) * (1 + eta),
    ])


def shape_gradients(xi, eta) -> np.ndarray:
    """Reference-coordinate gradients, shape (2, 4)."""
    return 0.25 * np.array([
        [-(1 - eta), (1 - eta), (1 + eta), -(1 + eta)],
        [-(1 - xi), -(1 + xi), (1 + xi), (1 - xi)],
    ])


@dataclass(frozen=True)
class ElementQuadrature:
    """Tabulated shape data for a square element of side h."""

    h: float
    order: int
    weights: np.ndarray    # (g,) Gauss weights including the h^2/4 Jacobian
    N: np.ndarray          # (g, 4) shape functions
    dN: np.ndarray         # (g, 2, 4) physical gradients
    B: np.ndarray          # (g, 3, 8) strain-displacement matrices

    @property
    def n_points(self) -> int:
        return self.weights.shape[0]


@lru_cache(maxsize=64)
def element_quadrature(h: float, order: int) -> ElementQuadrature:
    pts, wts = gauss_rule(order)
    XI, ETA = np.meshgrid(pts, pts, indexing="ij")
    W = np.outer(wts, wts).ravel()
    xi = XI.ravel()
    eta = ETA.ravel()
    g = xi.size
    N = np.empty((g, 4))
    dN = np.empty((g, 2, 4))
    B = np.zeros((g, 3, 8))
    for k in range(g):
        N[k] = shape_functions(xi[k], eta[k])
        dN[k] = shape_gradients(xi[k], eta[k]) * (2.0 / h)
        B[k, 0, 0::2] = dN[k, 0]
        B[k, 1, 1::2] = dN[k, 1]
        B[k, 2, 0::2] = dN[k, 1]
        B[k, 2, 1::2] = dN[k, 0]
    jac = 0.25 * h * h
    return ElementQuadrature(h=h, order=order, weights=W * jac, N=N, dN=dN, B=B)


def constitutive_matrix(material: MaterialParams) -> np.ndarray:
    """Plane-strain stiffness in Voigt form (engineering shear)."""
    lam, mu = material.lam, material.mu
    return np.array([
        [lam + 2 * mu, lam, 0.0],
        [lam, lam + 2 * mu, 0.0],
        [0.0, 0.0, mu],
    ])


def _gauss_point_matrices(h: float, material: MaterialParams,
                          order: int) -> np.ndarray:
    """Per-Gauss-point stiffness contributions S[g] = w_g B_g^T C B_g."""
    quad = element_quadrature(h, order)
    C = constitutive_matrix(material)
    S = np.einsum("g,gia,ij,gjb->gab", quad.weights, quad.B, C, quad.B)
    # enforce bitwise symmetry (einsum sums (a,b) and (b,a) in different
    # orders, leaving roundoff asymmetry that would propagate to the operator)
    return 0.5 * (S + S.transpose(0, 2, 1))


def element_stiffness(h: float, material: MaterialParams,
                      multiplier=1.0, order: int = 3) -> np.ndarray:
    """8x8 stiffness of one square element.

    ``multiplier`` is either a scalar or one value per quadrature point;
    for a unit multiplier the result is independent of h.
    """
    S = _gauss_point_matrices(h, material, order)
    m = np.asarray(multiplier, dtype=float)
    if np.any(m < 0):
        raise ValueError("stiffness multipliers must be non-negative")
    if m.ndim == 0:
        return float(m) * S.sum(axis=0)
    if m.shape != (S.shape[0],):
        raise ValueError(
            f"expected {S.shape[0]} multiplier samples, got shape {m.shape}")
    return np.einsum("g,gab->ab", m, S)


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------

def element_dofs(grid: Grid) -> np.ndarray:
    """(n_elements, 8) global dof indices, (u1, u2) interleaved per node."""
    dofs = np.empty((grid.n_elements, 8), dtype=np.int64)
    dofs[:, 0::2] = 2 * grid.conn
    dofs[:, 1::2] = 2 * grid.conn + 1
    return dofs


@dataclass(frozen=True)
class _ScatterPattern:
    """Precomputed element-to-CSR scatter for repeated assemblies.

    The element entry stream is sorted once; afterwards each assembly is a
    gather plus an ordered segmented reduction, which is deterministic and
    an order of magnitude cheaper than rebuilding a COO matrix.
    """

    order: np.ndarray
    starts: np.ndarray
    indices: np.ndarray
    indptr: np.ndarray
    n: int

    def assemble(self, element_data: np.ndarray) -> sp.csr_matrix:
        vals = element_data.reshape(-1)[self.order]
        data = np.add.reduceat(vals, self.starts)
        return sp.csr_matrix((data, self.indices, self.indptr),
                             shape=(self.n, self.n))


def _build_scatter(dof_array: np.ndarray, n: int) -> _ScatterPattern:
    k = dof_array.shape[1]
    rows = np.repeat(dof_array, k, axis=1).reshape(-1)
    cols = np.tile(dof_array, (1, k)).reshape(-1)
    order = np.lexsort((cols, rows))
    rs = rows[order]
    cs = cols[order]
    boundary = np.empty(rs.size, dtype=bool)
    boundary[0] = True
    boundary[1:] = (rs[1:] != rs[:-1]) | (cs[1:] != cs[:-1])
    starts = np.flatnonzero(boundary)
    urows = rs[starts]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(urows, minlength=n), out=indptr[1:])
    return _ScatterPattern(order=order, starts=starts,
                           indices=cs[starts].astype(np.int32),
                           indptr=indptr, n=n)


_SCATTER_CACHE: dict[tuple, _ScatterPattern] = {}


def _scatter_pattern(grid: Grid, kind: str) -> _ScatterPattern:
    key = (grid.nx, grid.ny, kind)
    pattern = _SCATTER_CACHE.get(key)
    if pattern is None:
        if kind == "vector":
            pattern = _build_scatter(element_dofs(grid), 2 * grid.n_nodes)
        else:
            pattern = _build_scatter(grid.conn, grid.n_nodes)
        if len(_SCATTER_CACHE) > 8:
            _SCATTER_CACHE.clear()
        _SCATTER_CACHE[key] = pattern
    return pattern


def scalar_scatter(grid: Grid) -> _ScatterPattern:
    """Scatter pattern for nodal scalar fields (one dof per node)."""
    return _scatter_pattern(grid, "scalar")


def assemble(grid: Grid, material: MaterialParams, multipliers,
             order: int = 3) -> sp.csr_matrix:
    """Assemble the global stiffness operator.

    ``multipliers`` has shape (n_elements,) for element-constant stiffness
    scaling, or (n_elements, n_gauss) when the scaling varies over the
    quadrature points (degraded phase-field stiffness).
    """
    m = np.asarray(multipliers, dtype=float)
    if np.any(m < 0):
        raise ValueError("stiffness multipliers must be non-negative")
    S = _gauss_point_matrices(grid.h, material, order)
    g = S.shape[0]
    if m.shape == (grid.n_elements,):
        K0 = S.sum(axis=0)
        data = np.multiply.outer(m, K0)
    elif m.shape == (grid.n_elements, g):
        data = np.tensordot(m, S, axes=(1, 0))
    else:
        raise ValueError(
            f"multiplier shape {m.shape} does not match "
            f"({grid.n_elements},) or ({grid.n_elements}, {g})")
    return _scatter_pattern(grid, "vector").assemble(data)


def traction_loads(grid: Grid, stress_fn, order: int = 8) -> np.ndarray:
    """Consistent nodal forces of the boundary tractions sigma(x).n.

    ``stress_fn(x1, x2)`` must return the stress components (s11, s22, s12)
    for arrays of evaluation points. The integral over each boundary edge
    uses a Gauss rule of the given order.
    """
    if order < 2:
        raise ValueError(f"boundary quadrature order must be >= 2, got {order}")
    pts, wts = gauss_rule(order)
    coords = grid.node_coords()
    na = grid.boundary_nodes[:, 0]
    nb = grid.boundary_nodes[:, 1]
    xa = coords[na]
    xb = coords[nb]
    mid = 0.5 * (xa + xb)
    half = 0.5 * (xb - xa)
    jac = np.hypot(half[:, 0], half[:, 1])          # edge length / 2

    # (edges, gauss) evaluation points
    X = mid[:, None, 0] + pts[None, :] * half[:, None, 0]
    Y = mid[:, None, 1] + pts[None, :] * half[:, None, 1]
    s11, s22, s12 = stress_fn(X, Y)
    n1 = grid.boundary_normals[:, 0][:, None]
    n2 = grid.boundary_normals[:, 1][:, None]
    t1 = s11 * n1 + s12 * n2
    t2 = s12 * n1 + s22 * n2

    Na = 0.5 * (1.0 - pts)
    Nb = 0.5 * (1.0 + pts)
    w = wts[None, :] * jac[:, None]
    f = np.zeros(2 * grid.n_nodes)
    np.add.at(f, 2 * na, np.sum(w * Na * t1, axis=1))
    np.add.at(f, 2 * na + 1, np.sum(w * Na * t2, axis=1))
    np.add.at(f, 2 * nb, np.sum(w * Nb * t1, axis=1))
    np.add.at(f, 2 * nb + 1, np.sum(w * Nb * t2, axis=1))
    return f


def rigid_modes(grid: Grid) -> np.ndarray:
    """Orthonormal basis of the rigid modes, shape (2 n_nodes, 3)."""
    coords = grid.node_coords()
    n = 2 * grid.n_nodes
    R = np.zeros((n, 3))
    R[0::2, 0] = 1.0
    R[1::2, 1] = 1.0
    R[0::2, 2] = -coords[:, 1]
    R[1::2, 2] = coords[:, 0]
    Q, _ = np.linalg.qr(R)
    return Q


# ---------------------------------------------------------------------------
# Equilibrium solves
# ---------------------------------------------------------------------------

class EquilibriumSolver:
    """Minimizes 0.5 u'Ku - f'u over the rigid-constrained subspace.

    Small systems go through a sparse direct factorization of the
    constrained saddle system; large ones through conjugate gradients
    preconditioned by a smoothed-aggregation multigrid hierarchy. The
    hierarchy is reused across calls with slowly varying operators and
    rebuilt automatically when its effectiveness degrades, so repeated
    solves inside an alternating minimization stay cheap. Results carry a
    verified residual of at most ``rtol * ||f||`` measured in the
    constrained subspace.
    """

    def __init__(self, grid: Grid, rtol: float = 1e-12, method: str = "auto"):
        self.grid = grid
        self.rtol = rtol
        self.n = 2 * grid.n_nodes
        if method == "auto":
            method = "direct" if self.n <= DIRECT_SOLVE_LIMIT else "amg"
        if method not in ("direct", "amg"):
            raise ValueError(f"unknown solver method {method!r}")
        self.method = method
        self.modes = rigid_modes(grid)
        self._raw_modes = self._unnormalized_modes(grid)
        self._ml = None
        self._constraint = self._point_constraints(grid)
        self.maxiter = int(20 * math.sqrt(self.n)) + 1000

    @staticmethod
    def _unnormalized_modes(grid: Grid) -> np.ndarray:
        coords = grid.node_coords()
        B = np.zeros((2 * grid.n_nodes, 3))
        B[0::2, 0] = 1.0
        B[1::2, 1] = 1.0
        B[0::2, 2] = -coords[:, 1]
        B[1::2, 2] = coords[:, 0]
        return B

    @staticmethod
    def _point_constraints(grid: Grid) -> sp.csr_matrix:
        # Three single-dof rows controlling the rigid modes: both components
        # of the lower-left corner node plus the vertical component of the
        # lower-right corner. With self-equilibrated loads their reactions
        # vanish, and the solution is shifted afterwards onto the
        # zero-mean-displacement / zero-mean-rotation representative, which
        # is the same minimizer the mean-constraint saddle system selects.
        pinned = np.array([0, 1, 2 * grid.nx + 1])
        n = 2 * grid.n_nodes
        return sp.coo_matrix(
            (np.ones(3), (np.arange(3), pinned)), shape=(3, n)).tocsr()

    # -- helpers ---------------------------------------------------------

    def project(self, vec: np.ndarray) -> np.ndarray:
        """Remove the rigid-mode components."""
        return vec - self.modes @ (self.modes.T @ vec)

    def _check_residual(self, K, u, f, norm_f) -> float:
        r = self.project(K @ u - f)
        return float(np.linalg.norm(r) / norm_f)

    # -- solve paths -----------------------------------------------------

    def solve(self, K: sp.csr_matrix, f: np.ndarray,
              x0: np.ndarray | None = None) -> np.ndarray:
        """Solve K u = f with rigid modes constrained to zero mean."""
        norm_f = float(np.linalg.norm(f))
        if norm_f == 0.0:
            return np.zeros(self.n)
        rigid_load = float(np.linalg.norm(self.modes.T @ f))
        if rigid_load > 1e-8 * norm_f:
            raise SolverError(
                f"loads are not self-equilibrated: rigid component "
                f"{rigid_load / norm_f:.3e} of ||f||")
        f_proj = self.project(f)
        if self.method == "direct":
            u = self._solve_direct(K, f_proj)
        else:
            u = self._solve_amg(K, f_proj, x0=x0)
        u = self.project(u)
        res = self._check_residual(K, u, f_proj, norm_f)
        if res > max(10.0 * self.rtol, 1e-10):
            raise SolverError(
                f"equilibrium residual {res:.3e} exceeds contract", residual=res)
        return u

    def _solve_direct(self, K, f) -> np.ndarray:
        C = self._constraint
        saddle = sp.bmat([[K, C.T], [C, None]], format="csc")
        lu = spla.splu(saddle)
        rhs = np.concatenate([f, np.zeros(3)])
        return lu.solve(rhs)[: self.n]

    def _build_hierarchy(self, K):
        import pyamg

        self._ml = pyamg.smoothed_aggregation_solver(
            K, B=self._raw_modes.copy(),
            smooth=("energy", {"degree": 2}), max_coarse=300)

    def _solve_amg(self, K, f, x0=None) -> np.ndarray:
        # A hierarchy left over from a nearby operator (previous alternation
        # step, previous epsilon) usually still preconditions well, so try it
        # with a short iteration budget before paying for a rebuild.
        rebuilt = False
        if self._ml is None:
            self._build_hierarchy(K)
            rebuilt = True
        while True:
            M = self._ml.aspreconditioner(cycle="V")
            budget = self.maxiter if rebuilt else min(400, self.maxiter)
            u, info = spla.cg(K, f, x0=x0, M=M, rtol=self.rtol,
                              atol=0.0, maxiter=budget)
            if info == 0:
                return u
            if not rebuilt:
                self._build_hierarchy(K)
                rebuilt = True
                x0 = u
                continue
            raise SolverError(
                f"preconditioned CG did not reach rtol={self.rtol} within "
                f"{self.maxiter} iterations")


def solve_equilibrium(grid: Grid, K: sp.csr_matrix, loads: np.ndarray,
                      rtol: float = 1e-11) -> np.ndarray:
    """One-shot equilibrium solve; see EquilibriumSolver for the contract."""
    return EquilibriumSolver(grid, rtol=rtol).solve(K, loads)


# ---------------------------------------------------------------------------
# Post-processing
# ---------------------------------------------------------------------------

def energies(grid: Grid, material: MaterialParams, u: np.ndarray,
             multipliers, loads: np.ndarray, order: int = 3,
             K: sp.csr_matrix | None = None) -> EnergyBreakdown:
    """Elastic energy and load work of a displacement field.

    The elastic term is the element-level quadrature of multiplier * W(eps),
    evaluated as 0.5 u'Ku with the matching operator; the inelastic slot is
    left zero for the caller to fill.
    """
    if K is None:
        K = assemble(grid, material, multipliers, order=order)
    elastic = 0.5 * float(u @ (K @ u))
    load_work = float(loads @ u)
    return EnergyBreakdown(elastic=elastic, inelastic=0.0, load_work=load_work)


def strains_at_quadrature(grid: Grid, u: np.ndarray, order: int = 3) -> np.ndarray:
    """Strains (e11, e22, g12) at every quadrature point, (n_el, g, 3)."""
    quad = element_quadrature(grid.h, order)
    ue = u[element_dofs(grid)]
    return np.einsum("gcd,ed->egc", quad.B, ue)


def strain_energy_at_quadrature(grid: Grid, material: MaterialParams,
                                u: np.ndarray, order: int = 3) -> np.ndarray:
    """Undegraded strain-energy density W at quadrature points, (n_el, g)."""
    eps = strains_at_quadrature(grid, u, order=order)
    lam, mu = material.lam, material.mu
    tr = eps[:, :, 0] + eps[:, :, 1]
    return (0.5 * lam * tr * tr
            + mu * (eps[:, :, 0] ** 2 + eps[:, :, 1] ** 2
                    + 0.5 * eps[:, :, 2] ** 2))
