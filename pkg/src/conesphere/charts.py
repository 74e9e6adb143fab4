"""Geometry of the two-chart sphere and the singular log profiles.

The sphere carries two stereographic charts, z and w = 1/z.  Points are
always stored as a complex local coordinate together with the chart that
owns them.  The round background density is the same expression in either
chart, 4/(1+|zeta|^2)^2.

The singular profile Psi_j of a puncture equals -log|zeta - p|^2 exactly
inside the puncture patch (in the owning chart), and is blended over the
patch annulus into -log(chord^2), the global chordal-distance profile,
which is smooth on the rest of the sphere.  Values and the Laplacian of
Psi_j are closed-form; nothing about the singular part is ever finite
differenced.
"""

import numpy as np

CHART_Z = 0
CHART_W = 1


def g0_density(zeta):
    """Round background density 4/(1+|zeta|^2)^2 (same form in each chart)."""
    return 4.0 / (1.0 + np.abs(zeta) ** 2) ** 2


def other_chart_coord(zeta):
    """Transition map w = 1/z (or z = 1/w)."""
    return 1.0 / zeta


def density_to_other_chart(density, zeta):
    """Convert a metric density given at zeta to the coordinate 1/zeta.

    g_w(w) = g_z(z) |dz/dw|^2 with w = 1/z, so the factor is |zeta|^4.
    """
    return density * np.abs(zeta) ** 4


def embed_sphere(zeta, chart):
    """Map local coordinates to points on the unit 2-sphere in R^3.

    The z-chart is the standard stereographic projection from the north
    pole; w = 1/z lands on the same sphere point.
    """
    zeta = np.asarray(zeta)
    x, y = zeta.real, zeta.imag
    denom = 1.0 + x * x + y * y
    if chart == CHART_Z:
        pts = np.stack([2 * x / denom, 2 * y / denom,
                        (x * x + y * y - 1.0) / denom], axis=-1)
    else:
        pts = np.stack([2 * x / denom, -2 * y / denom,
                        (1.0 - x * x - y * y) / denom], axis=-1)
    return pts


def chord2(zeta, chart, p_loc, p_chart):
    """Squared chordal-type distance between nodes and a puncture.

    Normalized as |z - p|^2 / ((1+|z|^2)(1+|p|^2)) when both points are
    given in the same chart; the cross-chart form replaces |z - p|^2 by
    |1 - p*zeta|^2.  (True chordal distance on the unit sphere is 4x this.)
    """
    n2 = 1.0 + np.abs(zeta) ** 2
    p2 = 1.0 + abs(p_loc) ** 2
    if chart == p_chart:
        num = np.abs(zeta - p_loc) ** 2
    else:
        num = np.abs(1.0 - p_loc * zeta) ** 2
    return num / (n2 * p2)


# ---------------------------------------------------------------------------
# smoothstep blends

def smoothstep_quintic(x):
    """C^2 quintic smoothstep: 0 for x<=0, 1 for x>=1."""
    x = np.clip(x, 0.0, 1.0)
    return x ** 3 * (10.0 + x * (-15.0 + 6.0 * x))


def smoothstep_s4(x):
    """C^4 degree-9 smoothstep: 0 for x<=0, 1 for x>=1."""
    x = np.clip(x, 0.0, 1.0)
    return x ** 5 * (126.0 + x * (-420.0 + x * (540.0 + x * (-315.0 + 70.0 * x))))


def smoothstep_s4_d1(x):
    x = np.asarray(x, dtype=float)
    inside = (x > 0.0) & (x < 1.0)
    xc = np.clip(x, 0.0, 1.0)
    d = xc ** 4 * (630.0 + xc * (-2520.0 + xc * (3780.0 + xc * (-2520.0 + 630.0 * xc))))
    return np.where(inside, d, 0.0)


def smoothstep_s4_d2(x):
    x = np.asarray(x, dtype=float)
    inside = (x > 0.0) & (x < 1.0)
    xc = np.clip(x, 0.0, 1.0)
    d = xc ** 3 * (2520.0 + xc * (-12600.0 + xc * (22680.0 + xc * (-17640.0 + 5040.0 * xc))))
    return np.where(inside, d, 0.0)


# ---------------------------------------------------------------------------
# singular profiles Psi_j


class PunctureProfile(object):
    """Closed-form Psi_j for one puncture.

    Parameters
    ----------
    p_loc : complex
        Local coordinate of the puncture in its owning chart (w=0 for the
        point at infinity).
    chart : int
        Owning chart, CHART_Z or CHART_W.
    r_in, r_out : float
        Patch radii in the owning chart.  Psi equals -log|zeta-p|^2 for
        |zeta - p| <= r_in and the chordal profile for |zeta - p| >= r_out.
    """

    def __init__(self, p_loc, chart, r_in, r_out):
        self.p_loc = complex(p_loc)
        self.chart = chart
        self.r_in = float(r_in)
        self.r_out = float(r_out)

    def local_radius(self, zeta, chart):
        """Distance |zeta - p| measured in the puncture's owning chart."""
        if chart == self.chart:
            return np.abs(zeta - self.p_loc)
        zz = other_chart_coord(np.asarray(zeta, dtype=complex))
        return np.abs(zz - self.p_loc)

    def _blend(self, r):
        # beta = 1 inside the patch, 0 outside; C^4 transition
        x = (r - self.r_in) / (self.r_out - self.r_in)
        return 1.0 - smoothstep_s4(x)

    def chordal_value(self, zeta, chart):
        return -np.log(chord2(zeta, chart, self.p_loc, self.chart))

    def value(self, zeta, chart):
        """Psi_j at the given nodes (any chart)."""
        zeta = np.asarray(zeta, dtype=complex)
        if chart != self.chart:
            # Cross-chart points are always beyond the patch annulus.
            return self.chordal_value(zeta, chart)
        d = zeta - self.p_loc
        r = np.abs(d)
        out = np.empty(zeta.shape, dtype=float)
        core = r <= self.r_in
        far = r >= self.r_out
        mid = ~(core | far)
        with np.errstate(divide="ignore"):
            out[core] = -2.0 * np.log(r[core])
        out[far] = self.chordal_value(zeta[far], chart)
        if np.any(mid):
            zm = zeta[mid]
            rm = r[mid]
            beta = self._blend(rm)
            L = -2.0 * np.log(rm)
            B = np.log((1.0 + np.abs(zm) ** 2) * (1.0 + abs(self.p_loc) ** 2))
            out[mid] = L + (1.0 - beta) * B
        return out

    def ddbar(self, zeta, chart):
        """d^2 Psi_j / dzeta dzetabar at the given nodes.

        Equals 0 in the patch core, g0/4 beyond the patch annulus (the
        chordal profile), and the analytic blend expression in between.
        """
        zeta = np.asarray(zeta, dtype=complex)
        if chart != self.chart:
            return g0_density(zeta) / 4.0
        d = zeta - self.p_loc
        r = np.abs(d)
        out = np.empty(zeta.shape, dtype=float)
        core = r <= self.r_in
        far = r >= self.r_out
        mid = ~(core | far)
        out[core] = 0.0
        out[far] = g0_density(zeta[far]) / 4.0
        if np.any(mid):
            zm = zeta[mid]
            dm = d[mid]
            rm = r[mid]
            width = self.r_out - self.r_in
            x = (rm - self.r_in) / width
            beta = 1.0 - smoothstep_s4(x)
            beta_r = -smoothstep_s4_d1(x) / width
            beta_rr = -smoothstep_s4_d2(x) / width ** 2
            one_p = 1.0 + np.abs(zm) ** 2
            B = np.log(one_p * (1.0 + abs(self.p_loc) ** 2))
            dB = np.conj(zm) / one_p          # dB/dzeta
            ddbarB = 1.0 / one_p ** 2
            dbeta = beta_r * np.conj(dm) / (2.0 * rm)   # dbeta/dzeta
            ddbar_beta = (beta_rr + beta_r / rm) / 4.0
            cross = 2.0 * np.real(dbeta * np.conj(dB))
            out[mid] = ((1.0 - beta) * ddbarB
                        - ddbar_beta * B - cross)
        return out


def total_psi(profiles, weights, zeta, chart):
    """S = sum_j a_j Psi_j at the given nodes."""
    acc = np.zeros(np.shape(zeta), dtype=float)
    for prof, a in zip(profiles, weights):
        acc += a * prof.value(zeta, chart)
    return acc


def total_psi_lap_g0(profiles, weights, zeta, chart):
    """Delta_{g0} of S = sum a_j Psi_j, via the complex Laplacian."""
    acc = np.zeros(np.shape(zeta), dtype=float)
    for prof, a in zip(profiles, weights):
        acc += a * prof.ddbar(zeta, chart)
    return acc / g0_density(zeta)
