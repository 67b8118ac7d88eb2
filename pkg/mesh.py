"""Structured triangulation of the (s, t) rectangle [0, s_max] x [0, pi]"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from errors import InvalidParameterError

logger = logging.getLogger(__name__)

LOWER, UPPER = 0, 1


def reference_lattice(p: int) -> List[Tuple[int, int]]:
    """Order-p nodes (i, j), i + j <= p, of the reference triangle.

    Local order is lexicographic in (j, i): the row j = 0 first, i increasing.
    Node (i, j) sits at (i/p, j/p).
    """
    return [(i, j) for j in range(p + 1) for i in range(p + 1 - j)]


@dataclass(eq=False)
class Mesh:
    """Uniform m x m cells, each split bottom-left to top-right into two order-p triangles.

    Lower triangle of a cell: corners (0,0), (1,0), (1,1); upper: (0,0), (1,1), (0,1)
    in cell-local units. Nodes are numbered row-major, index = it*(p*m+1) + is.
    """
    m: int
    p: int
    s_max: float
    nodes: np.ndarray
    elements: np.ndarray
    boundary_mask: np.ndarray
    orientation: np.ndarray
    cell_origin: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def Ne(self) -> int:
        return int(self.elements.shape[0])

    @property
    def N(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def h_s(self) -> float:
        return self.s_max / self.m

    @property
    def h_t(self) -> float:
        return math.pi / self.m

    @property
    def element_area(self) -> float:
        return 0.5 * self.h_s * self.h_t

    @property
    def free_nodes(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_mask)

    def free_index(self) -> np.ndarray:
        """Map global node -> free index, -1 on the Dirichlet edge s = s_max"""
        index = np.full(self.N, -1, dtype=np.int64)
        free = self.free_nodes
        index[free] = np.arange(free.size)
        return index

    def gradient_map(self, element: int) -> np.ndarray:
        """M with [d/ds, d/dt] = M @ [d/dxi_ref, d/deta_ref]"""
        hs, ht = self.h_s, self.h_t
        if self.orientation[element] == LOWER:
            return np.array([[1.0 / hs, 0.0], [-1.0 / ht, 1.0 / ht]])
        return np.array([[1.0 / hs, -1.0 / hs], [0.0, 1.0 / ht]])

    def map_points(self, element: int, ref_points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Reference-triangle points -> (s, t) inside one element"""
        s0, t0 = self.cell_origin[element]
        a, b = ref_points[:, 0], ref_points[:, 1]
        if self.orientation[element] == LOWER:
            return s0 + self.h_s * (a + b), t0 + self.h_t * b
        return s0 + self.h_s * a, t0 + self.h_t * (a + b)

    def jacobian_determinant(self) -> float:
        return self.h_s * self.h_t

    def summary(self) -> Dict[str, Any]:
        return {"m": self.m, "p": self.p, "Ne": self.Ne, "N": self.N,
                "s_max": self.s_max, "boundary_nodes": int(self.boundary_mask.sum())}


def build_mesh(m: int, p: int, s_max: float) -> Mesh:
    """Uniform order-p triangulation with Ne = 2 m^2 and N = (p m + 1)^2"""
    if int(m) != m or m < 1:
        raise InvalidParameterError("m must be a positive integer")
    if int(p) != p or p < 1:
        raise InvalidParameterError("p must be a positive integer")
    if not (s_max > 0 and math.isfinite(s_max)):
        raise InvalidParameterError("s_max must be positive")
    m, p = int(m), int(p)

    n1 = p * m + 1
    s_coords = np.linspace(0.0, s_max, n1)
    t_coords = np.linspace(0.0, math.pi, n1)
    S, T = np.meshgrid(s_coords, t_coords)
    nodes = np.column_stack([S.ravel(), T.ravel()])

    lattice = np.array(reference_lattice(p), dtype=np.int64)
    li, lj = lattice[:, 0], lattice[:, 1]
    offsets = {
        LOWER: (li + lj, lj),
        UPPER: (li, li + lj),
    }

    b_idx, a_idx = np.divmod(np.arange(m * m), m)
    elements = np.empty((2 * m * m, lattice.shape[0]), dtype=np.int64)
    orientation = np.empty(2 * m * m, dtype=np.int8)
    for kind in (LOWER, UPPER):
        ds, dt = offsets[kind]
        cols = a_idx[:, None] * p + ds[None, :]
        rows = b_idx[:, None] * p + dt[None, :]
        elements[kind::2] = rows * n1 + cols
        orientation[kind::2] = kind

    cell_origin = np.repeat(
        np.column_stack([a_idx * (s_max / m), b_idx * (math.pi / m)]), 2, axis=0)
    boundary_mask = (np.arange(n1 * n1) % n1) == n1 - 1

    mesh = Mesh(m=m, p=p, s_max=float(s_max), nodes=nodes, elements=elements,
                boundary_mask=boundary_mask, orientation=orientation,
                cell_origin=cell_origin)
    logger.debug(f"built mesh m={m} p={p}: Ne={mesh.Ne} N={mesh.N}")
    return mesh


def grid_ladder(m_list: Sequence[int], p: int, s_max: float) -> List[Mesh]:
    """Meshes of a refinement ladder sharing p and s_max"""
    m_list = list(m_list)
    if not m_list:
        raise InvalidParameterError("m_list must not be empty")
    if any(b <= a for a, b in zip(m_list, m_list[1:])):
        raise InvalidParameterError("m_list must be strictly increasing")

    meshes = []
    for rung, m in enumerate(m_list):
        mesh = build_mesh(m, p, s_max)
        mesh.metadata.update({"rung": rung, "Ne": mesh.Ne, "N": mesh.N})
        meshes.append(mesh)
    return meshes


def dump_mesh(mesh: Mesh) -> str:
    """Plain-text listing: one node per line (index s t), then one element per line"""
    lines = [f"# nodes {mesh.N}"]
    for index, (s, t) in enumerate(mesh.nodes):
        lines.append(f"{index} {s:.17g} {t:.17g}")
    lines.append(f"# elements {mesh.Ne}")
    for index, element in enumerate(mesh.elements):
        lines.append(f"{index} " + " ".join(str(n) for n in element))
    return "\n".join(lines) + "\n"
