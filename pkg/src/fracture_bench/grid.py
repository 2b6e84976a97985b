"""Regular square meshes of bilinear elements with crack registration.

Node numbering is lexicographic, ``node = i + j*(nx+1)``; element
connectivity is counterclockwise starting at the lower-left corner. The
convention is fixed so that output files are reproducible bit for bit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ConfigError


@dataclass(frozen=True)
class Grid:
    """Uniform nx-by-ny mesh of square elements covering [-D/2, D/2]^2."""

    D: float
    h: float
    nx: int
    ny: int
    origin: tuple[float, float]
    xs: np.ndarray          # node x coordinates per column, len nx+1
    ys: np.ndarray          # node y coordinates per row, len ny+1
    conn: np.ndarray        # (n_elements, 4) node ids, CCW from lower-left
    boundary_nodes: np.ndarray    # (n_edges, 2) node pairs
    boundary_elements: np.ndarray  # (n_edges,) adjacent element ids
    boundary_normals: np.ndarray  # (n_edges, 2) outward unit normals

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_elements(self) -> int:
        return self.nx * self.ny

    @property
    def n_boundary_edges(self) -> int:
        return self.boundary_nodes.shape[0]

    def node_id(self, i: int, j: int) -> int:
        return i + j * (self.nx + 1)

    def element_id(self, i: int, j: int) -> int:
        return i + j * self.nx

    def node_coords(self) -> np.ndarray:
        """All node coordinates as an (n_nodes, 2) array."""
        X, Y = np.meshgrid(self.xs, self.ys)
        return np.column_stack([X.ravel(), Y.ravel()])

    def element_centers(self) -> np.ndarray:
        cx = 0.5 * (self.xs[:-1] + self.xs[1:])
        cy = 0.5 * (self.ys[:-1] + self.ys[1:])
        CX, CY = np.meshgrid(cx, cy)
        return np.column_stack([CX.ravel(), CY.ravel()])


def build_grid(D: float, h_over_D: float) -> Grid:
    """Mesh the square domain with nx = ny = 1/h_over_D elements per side."""
    if not D > 0:
        raise ConfigError(f"domain size must be positive, got {D}")
    if not h_over_D > 0:
        raise ConfigError(f"h_over_D must be positive, got {h_over_D}")
    n_float = 1.0 / h_over_D
    n = round(n_float)
    if n < 1 or abs(n_float - n) > 1e-9 * n:
        raise ConfigError(
            f"h_over_D={h_over_D} does not give an integer element count "
            f"(1/h_over_D = {n_float})"
        )
    nx = ny = n
    h = D / n
    xs = np.linspace(-0.5 * D, 0.5 * D, nx + 1)
    ys = np.linspace(-0.5 * D, 0.5 * D, ny + 1)

    I, J = np.meshgrid(np.arange(nx), np.arange(ny))
    n0 = I + J * (nx + 1)
    conn = np.column_stack([
        n0.ravel(), (n0 + 1).ravel(),
        (n0 + nx + 2).ravel(), (n0 + nx + 1).ravel(),
    ]).astype(np.int64)

    edges = []
    elems = []
    normals = []
    nid = lambda i, j: i + j * (nx + 1)
    eid = lambda i, j: i + j * nx
    for i in range(nx):                      # bottom, outward normal -y
        edges.append((nid(i, 0), nid(i + 1, 0)))
        elems.append(eid(i, 0))
        normals.append((0.0, -1.0))
    for j in range(ny):                      # right, +x
        edges.append((nid(nx, j), nid(nx, j + 1)))
        elems.append(eid(nx - 1, j))
        normals.append((1.0, 0.0))
    for i in range(nx):                      # top, +y
        edges.append((nid(i + 1, ny), nid(i, ny)))
        elems.append(eid(i, ny - 1))
        normals.append((0.0, 1.0))
    for j in range(ny):                      # left, -x
        edges.append((nid(0, j + 1), nid(0, j)))
        elems.append(eid(0, j))
        normals.append((-1.0, 0.0))

    return Grid(
        D=D, h=h, nx=nx, ny=ny, origin=(-0.5 * D, -0.5 * D),
        xs=xs, ys=ys, conn=conn,
        boundary_nodes=np.asarray(edges, dtype=np.int64),
        boundary_elements=np.asarray(elems, dtype=np.int64),
        boundary_normals=np.asarray(normals, dtype=float),
    )


# ---------------------------------------------------------------------------
# Crack registration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CrackRegistration:
    """How the slit crack maps onto a given grid.

    The erosion variant disables a string of whole elements; the phase-field
    variant pins the initial damage to nodes on a grid line. The two use
    deliberately different placements (see ``register_crack_ee``).
    """

    mode: str                       # "ee" | "pf"
    eroded_elements: np.ndarray     # element ids, empty in pf mode
    crack_nodes: np.ndarray         # node ids, empty in ee mode
    crack_y: float                  # ordinate of the crack line
    crack_x_center: float           # abscissa of the crack midpoint


def crack_element_count(a: float, h: float) -> int:
    """Number of eroded elements, ceil(2a/h), robust to float ties.

    A relative slack of 1e-9 keeps 2a that is an exact multiple of h from
    rounding up an extra element.
    """
    q = 2.0 * a / h
    n = math.ceil(q - 1e-9 * max(q, 1.0))
    return max(n, 1)


def register_crack_ee(grid: Grid, a: float) -> CrackRegistration:
    """Erosion registration: a contiguous run of ceil(2a/h) elements.

    The crack runs along the mid-height of element row ny//2 with its
    midpoint at that row's central element center, i.e. offset by
    (h/2, h/2) from the domain center. This placement reproduces the
    single-row ceil(2a/h) element count on every mesh; the O(h) offset is
    part of the discretization error.
    """
    if 2.0 * a >= grid.D:
        raise ConfigError(f"crack length {2 * a} exceeds domain {grid.D}")
    if a <= 0:
        raise ConfigError("erosion registration requires a positive crack length")
    n_eroded = crack_element_count(a, grid.h)
    row = grid.ny // 2
    center_col = grid.nx // 2
    start = center_col - (n_eroded - 1) // 2
    start = min(max(start, 0), grid.nx - n_eroded)
    cols = np.arange(start, start + n_eroded, dtype=np.int64)
    eroded = cols + row * grid.nx
    crack_y = 0.5 * (grid.ys[row] + grid.ys[row + 1])
    crack_x_center = 0.5 * (grid.xs[center_col] + grid.xs[center_col + 1])
    return CrackRegistration(
        mode="ee", eroded_elements=eroded,
        crack_nodes=np.empty(0, dtype=np.int64),
        crack_y=crack_y, crack_x_center=crack_x_center,
    )


def register_crack_pf(grid: Grid, a: float) -> CrackRegistration:
    """Phase-field registration: nodes on the mid-height grid line."""
    if 2.0 * a >= grid.D:
        raise ConfigError(f"crack length {2 * a} exceeds domain {grid.D}")
    if grid.ny % 2 != 0:
        raise ConfigError(
            f"phase-field registration needs an even element count per side "
            f"(no grid line at mid-height for ny={grid.ny})"
        )
    j_line = grid.ny // 2
    tol = a + 1e-12 * grid.D
    cols = np.nonzero(np.abs(grid.xs) <= tol)[0]
    nodes = (cols + j_line * (grid.nx + 1)).astype(np.int64)
    return CrackRegistration(
        mode="pf", eroded_elements=np.empty(0, dtype=np.int64),
        crack_nodes=nodes, crack_y=float(grid.ys[j_line]), crack_x_center=0.0,
    )


def dump_debug_csv(grid: Grid, registration: CrackRegistration,
                   path: str | Path) -> None:
    """Write node coordinates and the crack sets for visual inspection."""
    path = Path(path)
    coords = grid.node_coords()
    centers = grid.element_centers()
    crack_nodes = set(registration.crack_nodes.tolist())
    eroded = set(registration.eroded_elements.tolist())
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "id", "x", "y", "flag"])
        for nid in range(grid.n_nodes):
            writer.writerow(["node", nid, repr(float(coords[nid, 0])),
                             repr(float(coords[nid, 1])),
                             int(nid in crack_nodes)])
        for el in range(grid.n_elements):
            writer.writerow(["element", el, repr(float(centers[el, 0])),
                             repr(float(centers[el, 1])), int(el in eroded)])
