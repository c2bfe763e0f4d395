"""Lattice approximations of planar domains with a fused boundary vertex.

A continuum domain D is approximated at scale N by the set of lattice points
x with d_inf(x/N, complement of D) > 1/N.  Every nearest-neighbour edge that
leaves the approximation terminates in a single extra vertex (the fused
boundary), so each lattice vertex keeps degree exactly 4.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import EmptyDomainError, ParameterError

_OFFSETS = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass(frozen=True)
class DomainSpec:
    """Bounded continuum domain: unit square, rectangle, disk or simple polygon."""

    shape: str  # "unit-square" | "rectangle" | "disk" | "polygon"
    width: float = 1.0
    height: float = 1.0
    radius: float = 1.0
    polygon: tuple[tuple[float, float], ...] = ()
    anchor: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.shape not in ("unit-square", "rectangle", "disk", "polygon"):
            raise ParameterError(f"unknown shape {self.shape!r}")
        if self.shape == "rectangle" and (self.width <= 0 or self.height <= 0):
            raise ParameterError("rectangle needs positive width and height")
        if self.shape == "disk" and self.radius <= 0:
            raise ParameterError("disk needs positive radius")
        if self.shape == "polygon":
            if len(self.polygon) < 3:
                raise ParameterError("polygon needs at least 3 vertices")
            if _polygon_self_intersects(self.polygon):
                raise ParameterError("polygon must be simple (non-self-intersecting)")

    def bounding_box(self) -> tuple[float, float, float, float]:
        ax, ay = self.anchor
        if self.shape in ("unit-square", "rectangle"):
            w = 1.0 if self.shape == "unit-square" else self.width
            h = 1.0 if self.shape == "unit-square" else self.height
            return ax, ay, ax + w, ay + h
        if self.shape == "disk":
            r = self.radius
            return ax - r, ay - r, ax + r, ay + r
        xs = [p[0] + ax for p in self.polygon]
        ys = [p[1] + ay for p in self.polygon]
        return min(xs), min(ys), max(xs), max(ys)

    def dist_to_complement(self, px: float, py: float) -> float:
        """sup-norm distance from (px, py) to the complement; <= 0 outside."""
        ax, ay = self.anchor
        if self.shape in ("unit-square", "rectangle"):
            w = 1.0 if self.shape == "unit-square" else self.width
            h = 1.0 if self.shape == "unit-square" else self.height
            return min(px - ax, ax + w - px, py - ay, ay + h - py)
        if self.shape == "disk":
            a, b = abs(px - ax), abs(py - ay)
            disc = 2.0 * self.radius**2 - (a - b) ** 2
            if disc < 0 or a * a + b * b >= self.radius**2:
                return 0.0 if a * a + b * b == self.radius**2 else min(0.0, self.radius - np.hypot(a, b))
            return (-(a + b) + np.sqrt(disc)) / 2.0
        pts = [(x + ax, y + ay) for x, y in self.polygon]
        if not _point_in_polygon(px, py, pts):
            return 0.0
        m = len(pts)
        return min(
            _linf_point_segment(px, py, pts[i], pts[(i + 1) % m]) for i in range(m)
        )


def _point_in_polygon(px: float, py: float, pts) -> bool:
    inside = False
    m = len(pts)
    for i in range(m):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % m]
        if (y1 > py) != (y2 > py):
            xcross = x1 + (py - y1) / (y2 - y1) * (x2 - x1)
            if px < xcross:
                inside = not inside
    return inside


def _linf_point_segment(px, py, a, b) -> float:
    """Exact sup-norm distance from a point to a segment.

    f(t) = max(|px-x(t)|, |py-y(t)|) is piecewise-linear convex in t, so the
    minimum sits at an endpoint, a zero crossing of either coordinate gap, or
    a crossing of the two gaps.
    """
    x0, y0 = a
    dx, dy = b[0] - x0, b[1] - y0
    cands = [0.0, 1.0]
    if dx != 0.0:
        cands.append((px - x0) / dx)
    if dy != 0.0:
        cands.append((py - y0) / dy)
    # |px-x(t)| = |py-y(t)|  ->  (px-x0) - t dx = +-((py-y0) - t dy)
    for s in (1.0, -1.0):
        den = dx - s * dy
        if den != 0.0:
            cands.append(((px - x0) - s * (py - y0)) / den)
    best = np.inf
    for t in cands:
        t = min(1.0, max(0.0, t))
        best = min(best, max(abs(px - (x0 + t * dx)), abs(py - (y0 + t * dy))))
    return best


def _polygon_self_intersects(poly) -> bool:
    def seg_int(p1, p2, p3, p4):
        d = lambda o, a, b: (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
        d1, d2 = d(p3, p4, p1), d(p3, p4, p2)
        d3, d4 = d(p1, p2, p3), d(p1, p2, p4)
        return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))

    m = len(poly)
    for i in range(m):
        for j in range(i + 1, m):
            if abs(i - j) in (1, m - 1):
                continue
            if seg_int(poly[i], poly[(i + 1) % m], poly[j], poly[(j + 1) % m]):
                return True
    return False


@dataclass
class LatticeDomain:
    """Immutable lattice domain D_N with its fused boundary vertex.

    Vertices are stored row-major (sorted by y then x), so two builds from
    identical inputs index identically.  The boundary vertex is not stored
    in `vertices`; in adjacency structures it takes index `n` (= len(vertices)).
    """

    N: int
    vertices: np.ndarray  # (n, 2) int64
    boundary_edge_count: np.ndarray  # (n,) int64, edges from each vertex to rho
    shape: str = "custom"
    trimmed_components: int = 0  # components dropped to keep the graph connected
    _index: dict = field(default_factory=dict, repr=False)
    _adj: sp.csr_matrix | None = field(default=None, repr=False)

    def __post_init__(self):
        self._index = {(int(i), int(j)): k for k, (i, j) in enumerate(self.vertices)}

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def deg_rho(self) -> int:
        return int(self.boundary_edge_count.sum())

    @property
    def deg_total(self) -> int:
        return 4 * self.n + self.deg_rho

    def index_of(self, point) -> int:
        return self._index[(int(point[0]), int(point[1]))]

    def contains(self, point) -> bool:
        return (int(point[0]), int(point[1])) in self._index

    def interior_adjacency(self) -> sp.csr_matrix:
        """Adjacency of D_N only (edges to the boundary vertex excluded)."""
        if self._adj is None:
            rows, cols = [], []
            for k, (i, j) in enumerate(self.vertices):
                for di, dj in _OFFSETS:
                    other = self._index.get((int(i) + di, int(j) + dj))
                    if other is not None:
                        rows.append(k)
                        cols.append(other)
            self._adj = sp.csr_matrix(
                (np.ones(len(rows)), (rows, cols)), shape=(self.n, self.n)
            )
        return self._adj

    def walk_graph(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR (indptr, indices) over D_N plus rho at index n.

        Edges to rho appear with multiplicity on both sides, so degrees are
        exactly 4 on D_N and deg_rho at rho.
        """
        n = self.n
        nbrs: list[list[int]] = [[] for _ in range(n + 1)]
        for k, (i, j) in enumerate(self.vertices):
            for di, dj in _OFFSETS:
                other = self._index.get((int(i) + di, int(j) + dj))
                nbrs[k].append(n if other is None else other)
            for _ in range(int(self.boundary_edge_count[k])):
                nbrs[n].append(k)
        indptr = np.zeros(n + 2, dtype=np.int64)
        for k in range(n + 1):
            indptr[k + 1] = indptr[k] + len(nbrs[k])
        indices = np.fromiter(
            (v for lst in nbrs for v in lst), dtype=np.int64, count=indptr[-1]
        )
        return indptr, indices

    @classmethod
    def from_points(cls, N: int, points, shape: str = "custom") -> "LatticeDomain":
        pts = np.asarray(sorted((int(p[0]), int(p[1])) for p in points), dtype=np.int64)
        pts = pts[np.lexsort((pts[:, 0], pts[:, 1]))]
        pset = {tuple(p) for p in pts}
        bec = np.array(
            [sum((i + di, j + dj) not in pset for di, dj in _OFFSETS) for i, j in pts],
            dtype=np.int64,
        )
        return cls(N=N, vertices=pts, boundary_edge_count=bec, shape=shape)

    def to_json(self) -> str:
        return json.dumps(
            {
                "N": self.N,
                "shape": self.shape,
                "vertices": self.vertices.tolist(),
                "boundary_edge_count": self.boundary_edge_count.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "LatticeDomain":
        doc = json.loads(text)
        return cls(
            N=doc["N"],
            vertices=np.asarray(doc["vertices"], dtype=np.int64),
            boundary_edge_count=np.asarray(doc["boundary_edge_count"], dtype=np.int64),
            shape=doc.get("shape", "custom"),
        )


def build_lattice(spec: DomainSpec, N: int) -> LatticeDomain:
    """Maximal lattice set at scale N with d_inf(x/N, complement) > 1/N."""
    if N < 1:
        raise ParameterError("N must be >= 1")
    x0, y0, x1, y1 = spec.bounding_box()
    imin, imax = int(np.floor(x0 * N)) - 1, int(np.ceil(x1 * N)) + 1
    jmin, jmax = int(np.floor(y0 * N)) - 1, int(np.ceil(y1 * N)) + 1
    pts = []
    for j in range(jmin, jmax + 1):
        for i in range(imin, imax + 1):
            # strict cutoff at 1/N; the epsilon keeps rounding noise in
            # expressions like 1 - 8/9 vs 1/9 from leaking boundary points
            if spec.dist_to_complement(i / N, j / N) > (1.0 + 1e-9) / N:
                pts.append((i, j))
    if not pts:
        raise EmptyDomainError(f"empty domain: no lattice point at scale N={N}")
    pts, trimmed = _largest_component(pts)
    pts = np.asarray(pts, dtype=np.int64)
    pts = pts[np.lexsort((pts[:, 0], pts[:, 1]))]
    pset = {tuple(p) for p in pts}
    bec = np.array(
        [sum((i + di, j + dj) not in pset for di, dj in _OFFSETS) for i, j in pts],
        dtype=np.int64,
    )
    return LatticeDomain(
        N=N, vertices=pts, boundary_edge_count=bec, shape=spec.shape,
        trimmed_components=trimmed,
    )


def square_grid(side: int) -> LatticeDomain:
    """The side x side grid: the unit-square approximation at scale side + 3."""
    if side < 1:
        raise ParameterError("side must be >= 1")
    return build_lattice(DomainSpec("unit-square"), side + 3)


def _largest_component(pts):
    pset = set(pts)
    seen: set = set()
    best: list = []
    ncomp = 0
    for start in pts:
        if start in seen:
            continue
        ncomp += 1
        comp = [start]
        seen.add(start)
        k = 0
        while k < len(comp):
            i, j = comp[k]
            k += 1
            for di, dj in _OFFSETS:
                q = (i + di, j + dj)
                if q in pset and q not in seen:
                    seen.add(q)
                    comp.append(q)
        if len(comp) > len(best):
            best = comp
    return best, ncomp - 1


@dataclass
class ValidationReport:
    inner_condition_ok: bool  # every vertex at d_inf distance > 1/N from the complement
    outer_condition_ok: bool  # every point deeper than delta is included
    delta: float
    deg_rho: int
    deg_total: int
    deg_ratio: float
    trimmed_components: int


def validate_admissible(domain: LatticeDomain, spec: DomainSpec, delta: float) -> ValidationReport:
    """Report-only admissibility check of a lattice domain against its spec."""
    if delta <= 0:
        raise ParameterError("delta must be positive")
    N = domain.N
    inner = all(
        spec.dist_to_complement(i / N, j / N) > 1.0 / N for i, j in domain.vertices
    )
    x0, y0, x1, y1 = spec.bounding_box()
    outer = True
    for j in range(int(np.floor(y0 * N)) - 1, int(np.ceil(y1 * N)) + 2):
        for i in range(int(np.floor(x0 * N)) - 1, int(np.ceil(x1 * N)) + 2):
            if spec.dist_to_complement(i / N, j / N) > delta and not domain.contains((i, j)):
                outer = False
    return ValidationReport(
        inner_condition_ok=inner,
        outer_condition_ok=outer,
        delta=delta,
        deg_rho=domain.deg_rho,
        deg_total=domain.deg_total,
        deg_ratio=domain.deg_rho / domain.deg_total,
        trimmed_components=domain.trimmed_components,
    )
