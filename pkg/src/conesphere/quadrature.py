"""Singularity-graded quadrature atlas on the two-chart sphere.

The node set is a union of structured polar tensor families:

* one graded patch per puncture (radial variable t = r^(1-a), Gauss-Legendre
  panels, uniform angles) -- the grading absorbs the conical density exactly;
* one polar cap per chart covering the bulk between the central patch and
  the seam annulus;
* a shared log-polar family on the seam annulus A < |z| < B, whose nodes
  carry the full area jacobian (the two chart partition weights sum to one
  exactly at shared nodes).

Overlaps between patches and caps are split by C^4 radial bumps so that no
area is counted twice.  Every integral in the package is a weighted nodal
sum against these weights; fields live as flat arrays over the node set.
"""

import numpy as np
from scipy import sparse

from . import charts
from .charts import CHART_W, CHART_Z
from .errors import ResolutionTooCoarse
from .gridops import AngularAxis, PanelAxis

_TWO_PI = 2.0 * np.pi


class Resolution(object):
    """Grid resolution knobs; `rings`, `angles`, `patch_radius` are primary."""

    def __init__(self, rings=8, angles=96, patch_radius=0.12,
                 patch_rings=7, patch_angles=48, annulus_rings=3,
                 panel_nodes=6):
        self.rings = int(rings)
        self.angles = int(angles)
        self.patch_radius = float(patch_radius)
        self.patch_rings = int(patch_rings)
        self.patch_angles = int(patch_angles)
        self.annulus_rings = int(annulus_rings)
        self.panel_nodes = int(panel_nodes)

    def refined(self, factor=2):
        """Resolution with all node counts scaled by `factor`."""
        return Resolution(rings=self.rings * factor,
                          angles=self.angles * factor,
                          patch_radius=self.patch_radius,
                          patch_rings=self.patch_rings * factor,
                          patch_angles=self.patch_angles * factor,
                          annulus_rings=self.annulus_rings * factor,
                          panel_nodes=self.panel_nodes)

    def scaled(self, factor):
        """Coarser/finer resolution by a real factor >= 0.25."""
        s = lambda v, lo: max(lo, int(round(v * factor)))
        return Resolution(rings=s(self.rings, 3),
                          angles=s(self.angles, 16),
                          patch_radius=self.patch_radius,
                          patch_rings=s(self.patch_rings, 3),
                          patch_angles=s(self.patch_angles, 12),
                          annulus_rings=s(self.annulus_rings, 2),
                          panel_nodes=self.panel_nodes)

    def key(self):
        return (self.rings, self.angles, self.patch_radius,
                self.patch_rings, self.patch_angles, self.annulus_rings,
                self.panel_nodes)


def bump_eta(r, r_in, r_out):
    """C^4 radial bump: 1 inside r_in, 0 outside r_out."""
    x = (np.asarray(r, dtype=float) - r_in) / (r_out - r_in)
    return 1.0 - charts.smoothstep_s4(x)


def product_angular_weights(mask_fine, n):
    """Angular weights integrating mask(theta) * (trig interpolant).

    `mask_fine` samples the known mask on a fine uniform grid (length a
    multiple of n).  Returns length-n weights W with
    sum_k W_k G(theta_k) ~= int mask(theta) G(theta) dtheta
    exact for G in the n-point trigonometric interpolation space.  Weights
    may be slightly negative near the mask's support boundary.
    """
    nfine = len(mask_fine)
    V = np.asarray(mask_fine, dtype=float) * (2.0 * np.pi / nfine)
    Vh = np.fft.fft(V)
    m = n // 2
    spec = np.zeros(n, dtype=complex)
    for q in range(-(m - 1), m):
        spec[q % n] += Vh[(-q) % nfine]
    spec[m] += 0.5 * (Vh[(-m) % nfine] + Vh[m % nfine])
    return np.fft.fft(spec).real / n


class Family(object):
    """One polar tensor grid of nodes.

    kind is 'patch', 'cap' or 'annulus'.  The radial axis is panel-Gauss in
    a monotone variable v with r = radius(v); the angular axis is uniform.
    Node ids index the global flat field vectors.
    """

    def __init__(self, kind, chart, center, axis, ang, grading_gamma):
        self.kind = kind
        self.chart = chart
        self.center = complex(center)
        self.axis = axis
        self.ang = ang
        self.gamma = grading_gamma    # r = v**(1/gamma); None -> log grading
        if grading_gamma is None:
            self.r = np.exp(axis.nodes)
            self.drdv = self.r.copy()
        else:
            self.r = axis.nodes ** (1.0 / grading_gamma)
            self.drdv = (1.0 / grading_gamma) * \
                axis.nodes ** (1.0 / grading_gamma - 1.0)
        self.nr = axis.n
        self.na = ang.n
        self.size = self.nr * self.na
        self.node_ids = None          # assigned by the rule
        zeta = self.r[:, None] * np.exp(1j * ang.theta[None, :])
        self.zeta = self.center + zeta

    def var_of_radius(self, r):
        if self.gamma is None:
            return np.log(r)
        return np.asarray(r, dtype=float) ** self.gamma

    def view(self, field):
        """Family block of a flat field, shaped (nr, na)."""
        return np.asarray(field)[self.node_ids]

    def d_dvar(self, arr):
        return self.axis.derivative(arr)

    def d_dtheta(self, arr):
        return self.ang.derivative(arr)

    def dz_dzbar(self, field):
        """(d/dzeta, d/dzetabar) of a nodal field, on this family's block.

        Derivatives are taken in the family's own chart coordinates.
        """
        arr = self.view(field).astype(complex)
        dvdr = 1.0 / self.drdv
        fr = self.d_dvar(arr) * dvdr[:, None]
        ft = self.d_dtheta(arr)
        eith = np.exp(1j * self.ang.theta)[None, :]
        inv_r = (1.0 / self.r)[:, None]
        dz = 0.5 * (fr - 1j * inv_r * ft) / eith
        dzbar = 0.5 * (fr + 1j * inv_r * ft) * eith
        return dz, dzbar

    def interp_weights(self, r_q, theta_q):
        """(node_ids, weights) interpolating at local polar (r_q, theta_q)."""
        idx_r, w_r = self.axis.interp_row(float(self.var_of_radius(r_q)))
        w_t = self.ang.interp_row(float(theta_q) % _TWO_PI)
        ids = self.node_ids[np.ix_(idx_r, np.arange(self.na))].ravel()
        wts = np.outer(w_r, w_t).ravel()
        keep = np.abs(wts) > 1e-15
        return ids[keep], wts[keep]


def _subdivided(breaks, targets):
    """Sorted breakpoints with every gap split to its local target width."""
    breaks = sorted(breaks)
    merged = [breaks[0]]
    for b in breaks[1:]:
        if b - merged[-1] > 1e-9 * max(1.0, abs(b)):
            merged.append(b)
    out = [merged[0]]
    for b in merged[1:]:
        start = out[-1]
        gap = b - start
        mid = 0.5 * (start + b)
        target = min(t for lo, hi, t in targets if lo <= mid <= hi)
        k = max(1, int(np.ceil(gap / target)))
        out.extend(start + gap * i / k for i in range(1, k))
        out.append(b)
    return np.array(out)


def _patch_family(pc, gamma, res):
    t_in = pc.r_in ** gamma
    t_out = pc.r_out ** gamma
    n_blend = max(3, res.patch_rings // 2)
    breaks = np.concatenate([
        np.linspace(0.0, t_in, res.patch_rings + 1),
        np.linspace(t_in, t_out, n_blend + 1)[1:]])
    axis = PanelAxis(breaks, res.panel_nodes)
    ang = AngularAxis(res.patch_angles)
    return Family("patch", pc.chart, pc.p_loc, axis, ang, gamma)


def _cap_family(chart, center_pc, outer, off_center, res):
    lo = center_pc.r_in
    breaks = {lo, center_pc.r_out, outer}
    targets = [(lo, outer, (outer - lo) / res.rings),
               (lo, center_pc.r_out, 0.5 * (center_pc.r_out - center_pc.r_in))]
    for pc in off_center:
        d = abs(pc.p_loc)
        for t in (d - pc.r_out, d - pc.r_in, d + pc.r_in, d + pc.r_out):
            if lo * 1.001 < t < outer * 0.999:
                breaks.add(t)
        targets.append((max(lo, d - pc.r_out), min(outer, d + pc.r_out),
                        0.5 * (pc.r_out - pc.r_in)))
    axis = PanelAxis(_subdivided(breaks, targets), res.panel_nodes)
    ang = AngularAxis(res.angles)
    return Family("cap", chart, 0.0j, axis, ang, 1.0)


def _annulus_family(A, B, res):
    breaks = np.linspace(np.log(A), np.log(B), res.annulus_rings + 1)
    axis = PanelAxis(breaks, res.panel_nodes)
    ang = AngularAxis(res.angles)
    return Family("annulus", CHART_Z, 0.0j, axis, ang, None)


class QuadratureRule(object):
    """Node set, weights, and calculus for one surface geometry."""

    def __init__(self, surface, atlas, resolution, grading_weights=None,
                 self_check=True):
        self.surface = surface
        self.atlas = atlas
        self.resolution = resolution
        self.grading_weights = tuple(
            surface.weights if grading_weights is None else grading_weights)
        self._build_families()
        self._assign_nodes()
        self._compute_weights()
        self._mark_virtual()
        self._build_virtual_fill()
        if self_check:
            self._self_check()

    # -- construction ------------------------------------------------------

    def _build_families(self):
        atlas, res = self.atlas, self.resolution
        self.families = []
        self.patch_family_index = {}
        for pc in atlas.patches:
            gamma = 1.0 - self.grading_weights[pc.index]
            fam = _patch_family(pc, gamma, res)
            self.patch_family_index[pc.index] = len(self.families)
            self.families.append(fam)
        for chart in (CHART_Z, CHART_W):
            pcs = atlas.patch_of_chart(chart)
            center = [pc for pc in pcs if abs(pc.p_loc) == 0.0]
            if len(center) != 1:
                raise ResolutionTooCoarse(
                    "chart %d must own exactly one central puncture" % chart)
            outer = atlas.seam_lo if chart == CHART_Z else 1.0 / atlas.seam_hi
            off = [pc for pc in pcs if abs(pc.p_loc) > 0.0]
            self.families.append(_cap_family(chart, center[0], outer,
                                             off, res))
        self.families.append(_annulus_family(atlas.seam_lo, atlas.seam_hi,
                                             res))

    def _assign_nodes(self):
        start = 0
        pos, chart, famid = [], [], []
        for fi, fam in enumerate(self.families):
            ids = np.arange(start, start + fam.size).reshape(fam.nr, fam.na)
            fam.node_ids = ids
            start += fam.size
            pos.append(fam.zeta.ravel())
            chart.append(np.full(fam.size, fam.chart, dtype=np.int8))
            famid.append(np.full(fam.size, fi, dtype=np.int16))
        self.n_nodes = start
        self.pos = np.concatenate(pos)
        self.chart = np.concatenate(chart)
        self.fam = np.concatenate(famid)
        self.g0 = charts.g0_density(self.pos)

    def _same_chart_patches(self, chart, exclude_center=False):
        out = []
        for pc in self.atlas.patches:
            if pc.chart != chart:
                continue
            if exclude_center and abs(pc.p_loc) == 0.0:
                continue
            out.append(pc)
        return out

    def _compute_weights(self):
        q = np.zeros(self.n_nodes)
        theta_z = np.ones(self.n_nodes)
        for fam in self.families:
            radial = fam.axis.weights * fam.r * fam.drdv
            if fam.kind == "patch":
                pc = self._patch_chart_of(fam)
                eta = bump_eta(fam.r, pc.r_in, pc.r_out)
                fam.q_bare = np.repeat((radial * fam.ang.weight)[:, None],
                                       fam.na, axis=1)
                w = fam.q_bare * eta[:, None]
            elif fam.kind == "cap":
                w = self._cap_weights(fam, radial)
            else:
                w = np.repeat((radial * fam.ang.weight)[:, None],
                              fam.na, axis=1)
                theta_z[fam.node_ids.ravel()] = np.repeat(
                    self.atlas.theta_z(fam.r)[:, None], fam.na, 1).ravel()
            q[fam.node_ids.ravel()] = np.asarray(w).ravel()
        for fam in self.families:
            if fam.kind in ("cap", "patch") and fam.chart == CHART_W:
                theta_z[fam.node_ids.ravel()] = 0.0
        self.q = q
        self.theta_z = theta_z

    def _cap_weights(self, fam, radial):
        """Cap weights: radial center-patch bump is exact (aligned panels);
        off-center patch bumps enter through per-ring product integration
        against the trigonometric interpolation space."""
        n = fam.na
        nfine = 64 * n
        theta_fine = _TWO_PI * np.arange(nfine) / nfine
        eith = np.exp(1j * theta_fine)
        center = [pc for pc in self._same_chart_patches(fam.chart)
                  if abs(pc.p_loc) == 0.0][0]
        off = self._same_chart_patches(fam.chart, exclude_center=True)
        radial_factor = radial * (1.0 - bump_eta(fam.r, center.r_in,
                                                 center.r_out))
        w = np.repeat((radial_factor * fam.ang.weight)[:, None], n, axis=1)
        for i, r in enumerate(fam.r):
            hit = [pc for pc in off
                   if abs(r - abs(pc.p_loc)) < pc.r_out + 0.05 * pc.r_out]
            if not hit:
                continue
            mask = np.ones(nfine)
            for pc in hit:
                d = np.abs(r * eith - pc.p_loc)
                mask *= 1.0 - bump_eta(d, pc.r_in, pc.r_out)
            w[i, :] = radial_factor[i] * product_angular_weights(mask, n)
        return w

    def _patch_chart_of(self, fam):
        for pc in self.atlas.patches:
            if pc.chart == fam.chart and pc.p_loc == fam.center:
                return pc
        raise KeyError("family has no matching patch")

    def _mark_virtual(self):
        """Vertex mask: drop cap nodes swallowed by patch cores and the
        ultra-deep patch rings that would degenerate the mesh embedding."""
        is_vertex = np.ones(self.n_nodes, dtype=bool)
        virtual_src = np.full(self.n_nodes, -1, dtype=np.int32)
        for fam in self.families:
            if fam.kind == "cap":
                for pc in self._same_chart_patches(fam.chart,
                                                   exclude_center=True):
                    d = np.abs(fam.zeta - pc.p_loc)
                    inside = d < pc.r_in
                    ids = fam.node_ids[inside]
                    is_vertex[ids] = False
                    virtual_src[ids] = self.patch_family_index[pc.index]
            elif fam.kind == "patch":
                pc = self._patch_chart_of(fam)
                r_mesh = max(1e-6, pc.r_out * 1.0e-4)
                deep = fam.r < r_mesh
                ids = fam.node_ids[deep]
                is_vertex[ids] = False
                virtual_src[ids] = self.fam[fam.node_ids[0, 0]]
        self.is_vertex = is_vertex
        self.virtual_src = virtual_src
        self.vertex_ids = np.nonzero(is_vertex)[0]
        self.n_vertices = len(self.vertex_ids)
        self.vertex_of_node = np.full(self.n_nodes, -1, dtype=np.int64)
        self.vertex_of_node[self.vertex_ids] = np.arange(self.n_vertices)

    def _build_virtual_fill(self):
        """Sparse operator completing a vertex-valued field to all nodes.

        Cap nodes inside a foreign patch core take tensor interpolation from
        that patch.  Deep patch rings take a least-squares radial profile fit
        in tau = t^2 (the variable in which conical profiles are analytic),
        per angle column, extrapolated inward.
        """
        rows, cols, vals = [], [], []
        ids = np.arange(self.n_nodes)
        for i in ids[self.is_vertex]:
            rows.append(i)
            cols.append(i)
            vals.append(1.0)
        for fam in self.families:
            if fam.kind == "cap":
                mask = ~self.is_vertex[fam.node_ids]
                if not mask.any():
                    continue
                for (ir, ik) in zip(*np.nonzero(mask)):
                    node = fam.node_ids[ir, ik]
                    src = self.families[self.virtual_src[node]]
                    d = fam.zeta[ir, ik] - src.center
                    s_ids, s_w = src.interp_weights(abs(d), np.angle(d))
                    ok = self.is_vertex[s_ids]
                    s_w = s_w * ok / np.sum(s_w * ok)
                    rows.extend([node] * len(s_ids))
                    cols.extend(s_ids.tolist())
                    vals.extend(s_w.tolist())
            elif fam.kind == "patch":
                vertex_rows = np.nonzero(
                    self.is_vertex[fam.node_ids[:, 0]])[0]
                deep_rows = np.nonzero(
                    ~self.is_vertex[fam.node_ids[:, 0]])[0]
                if len(deep_rows) == 0:
                    continue
                fit_rows = vertex_rows[:min(12, len(vertex_rows))]
                tau = (fam.axis.nodes[fit_rows]) ** 2
                deg = 3 if len(fit_rows) >= 6 else 1
                A = np.vander(tau, deg + 1, increasing=True)
                Apinv = np.linalg.pinv(A)       # (deg+1, nfit)
                tau_deep = (fam.axis.nodes[deep_rows]) ** 2
                P = np.vander(tau_deep, deg + 1, increasing=True) @ Apinv
                for ik in range(fam.na):
                    src_nodes = fam.node_ids[fit_rows, ik]
                    for a, ir in enumerate(deep_rows):
                        node = fam.node_ids[ir, ik]
                        rows.extend([node] * len(fit_rows))
                        cols.extend(src_nodes.tolist())
                        vals.extend(P[a].tolist())
        self.virtual_fill = sparse.csr_matrix(
            (vals, (rows, cols)), shape=(self.n_nodes, self.n_nodes))

    # -- integration -------------------------------------------------------

    def integrate(self, values, density):
        """Integral of a nodal field against the area form of `density`.

        `density` is the metric density in each node's family chart.
        """
        return np.sum(self.q * density * np.asarray(values), axis=-1)

    def area_weights(self, density):
        return self.q * density

    def total_area(self, density):
        return float(np.sum(self.q * density))

    # -- derivatives -------------------------------------------------------

    def dz_dzbar(self, field):
        """Per-node (d/dzeta, d/dzetabar) in each family's own chart."""
        dz = np.zeros(self.n_nodes, dtype=complex)
        dzb = np.zeros(self.n_nodes, dtype=complex)
        for fam in self.families:
            a, b = fam.dz_dzbar(field)
            dz[fam.node_ids.ravel()] = a.ravel()
            dzb[fam.node_ids.ravel()] = b.ravel()
        return dz, dzb

    def dzbar(self, field):
        return self.dz_dzbar(field)[1]

    # -- point evaluation ---------------------------------------------------

    def locate(self, zeta, chart):
        """Family owning a sphere point given in local coordinates."""
        for pc in self.atlas.patches:
            fam = self.families[self.patch_family_index[pc.index]]
            prof = self.atlas.profiles[pc.index]
            r = float(prof.local_radius(np.asarray([zeta]), chart)[0])
            if r <= pc.r_out * (1.0 - 1e-12):
                return fam, r
        zr = abs(zeta) if chart == CHART_Z else 1.0 / abs(zeta)
        if zr <= self.atlas.seam_lo:
            fam = [f for f in self.families
                   if f.kind == "cap" and f.chart == CHART_Z][0]
        elif zr >= self.atlas.seam_hi:
            fam = [f for f in self.families
                   if f.kind == "cap" and f.chart == CHART_W][0]
        else:
            fam = [f for f in self.families if f.kind == "annulus"][0]
        return fam, None

    def interp_row(self, zeta, chart):
        """(node_ids, weights) evaluating a nodal field at one point."""
        fam, _ = self.locate(zeta, chart)
        if fam.chart != chart:
            zeta = charts.other_chart_coord(zeta)
        d = zeta - fam.center
        return fam.interp_weights(abs(d), np.angle(d))

    def eval_field(self, field, zeta, chart):
        ids, w = self.interp_row(zeta, chart)
        return complex(np.dot(w, np.asarray(field)[ids]))

    # -- geometry helpers ---------------------------------------------------

    def puncture_distance(self, indices=None):
        """Per-node distance to the nearest puncture, measured in each
        puncture's owning-chart coordinate."""
        dmin = np.full(self.n_nodes, np.inf)
        for j, prof in enumerate(self.atlas.profiles):
            if indices is not None and j not in indices:
                continue
            for fam in self.families:
                r = prof.local_radius(fam.zeta.ravel(), fam.chart)
                ids = fam.node_ids.ravel()
                dmin[ids] = np.minimum(dmin[ids], r)
        return dmin

    def pos_in_chart(self, chart):
        """All node positions expressed in the requested chart."""
        out = self.pos.copy()
        flip = self.chart != chart
        out[flip] = 1.0 / out[flip]
        return out

    def with_moduli(self, moduli):
        """Same grid structure over displaced punctures 4..n.

        Patch grids translate rigidly with their punctures; cap panel
        breakpoints track the tangency radii smoothly.  The seam annulus and
        patch radii are frozen so that every derived quantity varies
        smoothly with the moduli.
        """
        from .surface import Atlas, PunctureChart, _local_coord
        surf2 = self.surface.with_moduli(moduli)
        patches = []
        for pc in self.atlas.patches:
            if pc.index >= 3:
                p_loc, chart = _local_coord(surf2.punctures[pc.index])
                if chart != pc.chart:
                    raise ValueError("puncture %d crossed charts; rebuild "
                                     "the atlas" % pc.index)
                patches.append(PunctureChart(pc.index, p_loc, chart,
                                             pc.r_in, pc.r_out))
            else:
                patches.append(pc)
        atlas2 = Atlas(surf2, self.atlas.R0, self.atlas.seam_lo,
                       self.atlas.seam_hi, patches)
        return QuadratureRule(surf2, atlas2, self.resolution,
                              grading_weights=self.grading_weights,
                              self_check=False)

    # -- construction self checks ------------------------------------------

    def _self_check(self):
        area = self.total_area(self.g0)
        rel = abs(area - 4.0 * np.pi) / (4.0 * np.pi)
        if rel > 1e-8:
            raise ResolutionTooCoarse(
                "background area check failed: got %.12g, want 4*pi "
                "(rel err %.2e > 1e-8); increase rings/angles" % (area, rel))
        for pc in self.atlas.patches:
            fam = self.families[self.patch_family_index[pc.index]]
            a = self.grading_weights[pc.index]
            vals = fam.r ** (2.0 * a - 2.0)
            got = float(np.sum(fam.q_bare * vals[:, None]))
            want = _TWO_PI * pc.r_out ** (2 * a) / (2 * a)
            rel = abs(got - want) / want
            if rel > 1e-6:
                raise ResolutionTooCoarse(
                    "graded patch check failed at puncture %d: rel err "
                    "%.2e > 1e-6; increase patch_rings" % (pc.index, rel))


def build_quadrature(surface, atlas, resolution=None, grading_weights=None,
                     self_check=True):
    """Construct the quadrature rule; see QuadratureRule."""
    if resolution is None:
        resolution = Resolution()
    return QuadratureRule(surface, atlas, resolution,
                          grading_weights=grading_weights,
                          self_check=self_check)
