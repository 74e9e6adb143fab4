"""Global P1 operators on the vertex set of a quadrature rule.

The vertices (all non-virtual nodes) are triangulated once on the embedded
sphere via a convex hull.  Each triangle is assigned to the chart where it
is small and its flat Dirichlet stiffness is assembled in that chart's
coordinates; conformal invariance of the Dirichlet energy makes the union a
consistent discretization of the complex Laplacian,

    int Delta_g(u) v dA_g  ~  -(1/4) v^T K u      (any conformal g),

with K symmetric positive semidefinite and K @ const = 0 exactly.  Metric
information enters only through lumped hat masses.
"""

import numpy as np
from scipy import sparse
from scipy.spatial import ConvexHull

from . import charts
from .charts import CHART_W, CHART_Z
from .errors import LinearSolveFailed


class SphereMesh(object):
    """Triangulation + P1 stiffness/mass for one quadrature rule."""

    def __init__(self, rule, triangles=None):
        self.rule = rule
        self.vertex_ids = rule.vertex_ids
        self.n = rule.n_vertices
        if triangles is None:
            triangles = self._triangulate()
        self.triangles = triangles            # (m, 3) vertex-local indices
        self._assemble()

    def _triangulate(self):
        pts = np.empty((self.n, 3))
        pos = self.rule.pos[self.vertex_ids]
        cht = self.rule.chart[self.vertex_ids]
        for c in (CHART_Z, CHART_W):
            m = cht == c
            pts[m] = charts.embed_sphere(pos[m], c)
        hull = ConvexHull(pts)
        return hull.simplices.astype(np.int64)

    def _positions_in(self, chart):
        pos = self.rule.pos[self.vertex_ids].copy()
        flip = self.rule.chart[self.vertex_ids] != chart
        pos[flip] = 1.0 / pos[flip]
        return pos

    def _assemble(self):
        rule = self.rule
        tri = self.triangles
        pos_z = self._positions_in(CHART_Z)
        pos_w = self._positions_in(CHART_W)
        # chart of each triangle: where its centroid radius is moderate
        cut = np.sqrt(rule.atlas.seam_lo * rule.atlas.seam_hi)
        zrad = np.abs(pos_z[tri]).max(axis=1)
        in_z = zrad <= cut
        rows, cols, vals = [], [], []
        area_z = np.zeros(self.n)
        area_w = np.zeros(self.n)
        for chart, mask, pos in ((CHART_Z, in_z, pos_z),
                                 (CHART_W, ~in_z, pos_w)):
            T = tri[mask]
            if len(T) == 0:
                continue
            p = pos[T]                                    # (m,3) complex
            x, y = p.real, p.imag
            b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0],
                          y[:, 0] - y[:, 1]], axis=1)
            c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2],
                          x[:, 1] - x[:, 0]], axis=1)
            area2 = x[:, 0] * b[:, 0] + x[:, 1] * b[:, 1] + x[:, 2] * b[:, 2]
            good = np.abs(area2) > 1e-300
            T, b, c, area2 = T[good], b[good], c[good], np.abs(area2[good])
            coef = 1.0 / (4.0 * 0.5 * area2)
            for i in range(3):
                for j in range(3):
                    rows.append(T[:, i])
                    cols.append(T[:, j])
                    vals.append(coef * (b[:, i] * b[:, j]
                                        + c[:, i] * c[:, j]))
            share = area2 / 6.0                  # |T|/3 per vertex
            tgt = area_z if chart == CHART_Z else area_w
            np.add.at(tgt, T.ravel(), np.repeat(share, 3))
        self.K = sparse.csr_matrix(
            (np.concatenate(vals),
             (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n, self.n))
        self.area_share_z = area_z
        self.area_share_w = area_w
        # conversion of each vertex's stored density into either chart
        vpos = rule.pos[self.vertex_ids]
        vfam_w = rule.chart[self.vertex_ids] == CHART_W
        jac4 = np.abs(vpos) ** 4
        self.conv_to_z = np.where(vfam_w, jac4, 1.0)
        self.conv_to_w = np.where(vfam_w, 1.0, jac4)

    def rebuilt(self, rule):
        """Same connectivity over a structurally identical displaced rule."""
        return SphereMesh(rule, triangles=self.triangles)

    def mass(self, density_full):
        """Lumped hat mass per vertex for the metric of nodal `density`.

        `density_full` is given per node in each node's own family chart.
        """
        d = np.asarray(density_full)[self.vertex_ids]
        return (self.area_share_z * d * self.conv_to_z
                + self.area_share_w * d * self.conv_to_w)

    def gather(self, field_full):
        return np.asarray(field_full)[self.vertex_ids]

    def scatter(self, vertex_values, fill=True):
        """Vertex values -> full node vector (virtual nodes interpolated)."""
        out = np.zeros(self.rule.n_nodes, dtype=np.asarray(vertex_values).dtype)
        out[self.vertex_ids] = vertex_values
        if fill:
            out = self.rule.virtual_fill @ out
        return out


def factorized(A):
    """LU factorization with a stable failure mode."""
    from scipy.sparse.linalg import splu
    try:
        return splu(A.tocsc())
    except Exception as exc:      # singular or structurally broken system
        raise LinearSolveFailed(str(exc))
