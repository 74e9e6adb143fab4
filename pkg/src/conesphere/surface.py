"""Weighted punctured spheres and the two-chart atlas.

A surface is the Riemann sphere with n >= 3 punctures normalized so that
the first three sit at 0, 1, infinity; the remaining punctures are the
moduli coordinates.  Weights live strictly inside (0, 1) and must satisfy
the stability condition sum(a_j) > 2.

The atlas assigns every puncture to the chart where it is small (|p| <= 1
keeps the z-chart), sizes a polar patch around each one, and reserves a
seam annulus A < |z| < B, clear of all patches, across which the two
charts are blended by a quintic partition of unity.
"""

import cmath

import numpy as np

from . import charts
from .errors import (AtlasError, BadNormalization, DuplicatePuncture,
                     PunctureOnSeam, Unstable, WeightOutOfRange)

INF = complex("inf")


def _is_inf(p):
    return cmath.isinf(p)


class WeightedSurface(object):
    """Punctured sphere with weights; construct through validate_surface."""

    def __init__(self, punctures, weights):
        self.punctures = tuple(punctures)
        self.weights = tuple(float(a) for a in weights)
        self.n = len(self.punctures)
        self.total_weight = sum(self.weights)
        # deg(K_X + a) on genus 0 and the weighted Euler characteristic
        self.degree = self.total_weight - 2.0
        self.euler = 2.0 - self.total_weight

    @property
    def moduli(self):
        """Positions of punctures 4..n (the moduli coordinates)."""
        return self.punctures[3:]

    @property
    def dim_moduli(self):
        return self.n - 3

    def with_moduli(self, moduli):
        """Same weights, punctures 4..n replaced by the given positions."""
        return validate_surface(self.punctures[:3] + tuple(moduli),
                                self.weights)

    def finite_punctures(self):
        return [p for p in self.punctures if not _is_inf(p)]

    def puncture_key(self):
        return (tuple((p.real, p.imag) if not _is_inf(p) else ("inf",)
                      for p in self.punctures), self.weights)

    def __repr__(self):
        pts = ", ".join("inf" if _is_inf(p) else format(p, ".6g")
                        for p in self.punctures)
        return "WeightedSurface([%s], weights=%s)" % (pts, list(self.weights))


def validate_surface(punctures, weights):
    """Check all surface invariants and return a WeightedSurface.

    Raises DuplicatePuncture, WeightOutOfRange, Unstable or
    BadNormalization; never anything else.
    """
    punctures = [complex(p) if not (isinstance(p, str) and p == "inf")
                 else INF for p in punctures]
    weights = [float(a) for a in weights]
    if len(punctures) != len(weights):
        raise BadNormalization("punctures and weights must have equal length")
    n = len(punctures)
    if n < 3:
        raise BadNormalization("need at least the three punctures 0, 1, inf")
    if punctures[0] != 0 or punctures[1] != 1 or not _is_inf(punctures[2]):
        raise BadNormalization("first three punctures must be 0, 1, inf")
    for j, p in enumerate(punctures):
        if j >= 3 and _is_inf(p):
            raise DuplicatePuncture("puncture %d duplicates infinity" % j)
    finite = [(j, p) for j, p in enumerate(punctures) if not _is_inf(p)]
    for i in range(len(finite)):
        for k in range(i + 1, len(finite)):
            if abs(finite[i][1] - finite[k][1]) == 0.0:
                raise DuplicatePuncture(
                    "punctures %d and %d coincide" % (finite[i][0],
                                                      finite[k][0]))
    for j, a in enumerate(weights):
        if not (0.0 < a < 1.0) or not np.isfinite(a):
            raise WeightOutOfRange(
                "weight %d is %g, must lie strictly in (0,1)" % (j, a))
    total = sum(weights)
    if total - 2.0 <= 0.0:
        raise Unstable("sum of weights %.6g <= 2, deg(K_X + a) = %.6g"
                       % (total, total - 2.0))
    return WeightedSurface(punctures, weights)


class PunctureChart(object):
    """Chart assignment and patch geometry of a single puncture."""

    def __init__(self, index, p_loc, chart, r_in, r_out):
        self.index = index
        self.p_loc = complex(p_loc)
        self.chart = chart
        self.r_in = float(r_in)
        self.r_out = float(r_out)

    def profile(self):
        return charts.PunctureProfile(self.p_loc, self.chart,
                                      self.r_in, self.r_out)


class Atlas(object):
    """Two-chart cover with a blended seam annulus A < |z| < B."""

    def __init__(self, surface, R0, seam_lo, seam_hi, patches):
        self.surface = surface
        self.R0 = float(R0)
        self.seam_lo = float(seam_lo)
        self.seam_hi = float(seam_hi)
        self.patches = list(patches)
        self.profiles = [pc.profile() for pc in patches]

    def theta_z(self, zradius):
        """z-chart partition weight as a function of |z| (quintic blend)."""
        x = (np.log(np.asarray(zradius, dtype=float)) - np.log(self.seam_lo)) \
            / (np.log(self.seam_hi) - np.log(self.seam_lo))
        return 1.0 - charts.smoothstep_quintic(x)

    def theta_w(self, zradius):
        return 1.0 - self.theta_z(zradius)

    def patch_of_chart(self, chart):
        return [pc for pc in self.patches if pc.chart == chart]

    def singular_sum(self, zeta, chart, weights=None):
        """S = sum a_j Psi_j at nodes given in local coordinates."""
        w = self.surface.weights if weights is None else weights
        return charts.total_psi(self.profiles, w, zeta, chart)

    def singular_sum_lap(self, zeta, chart, weights=None):
        """Delta_{g0} S at nodes given in local coordinates."""
        w = self.surface.weights if weights is None else weights
        return charts.total_psi_lap_g0(self.profiles, w, zeta, chart)


def _local_coord(p):
    """(local coordinate, chart) for a puncture."""
    if _is_inf(p):
        return 0.0j, charts.CHART_W
    if abs(p) <= 1.0:
        return p, charts.CHART_Z
    return 1.0 / p, charts.CHART_W


def _min_local_separation(j, punctures):
    """Distance from puncture j to the others in j's owning chart."""
    pj, chart = _local_coord(punctures[j])
    dmin = np.inf
    for k, q in enumerate(punctures):
        if k == j:
            continue
        if _is_inf(q):
            qloc = 0.0j if chart == charts.CHART_W else None
        elif chart == charts.CHART_Z:
            qloc = q
        else:
            qloc = 1.0 / q if q != 0 else None
        if qloc is None:
            continue    # the other puncture is at infinity of this chart
        dmin = min(dmin, abs(pj - qloc))
    return dmin


def build_atlas(surface, R0=1.5, patch_radius=0.12, seam=None):
    """Assign charts, size patches, and reserve the seam annulus.

    Raises PunctureOnSeam when no patch scaling clears a blend window, or
    when an explicitly requested seam annulus contains a puncture patch.
    """
    if R0 <= 1.0:
        raise AtlasError("R0 = %g <= 1: the two chart disks do not cover "
                         "the sphere" % R0)
    n = surface.n
    locs = [_local_coord(p) for p in surface.punctures]
    seps = [_min_local_separation(j, surface.punctures) for j in range(n)]

    def make_patches(scale):
        patches = []
        for j in range(n):
            p_loc, chart = locs[j]
            r_out = min(patch_radius, 0.35 * seps[j]) * scale
            patches.append(PunctureChart(j, p_loc, chart,
                                         0.5 * r_out, r_out))
        return patches

    def window(patches):
        """Available (A, B) in z-radius between chart-owned patches."""
        lo = 1.0 / R0 * 1.02
        hi = R0 * 0.98
        for pc in patches:
            outer = abs(pc.p_loc) + pc.r_out
            if pc.chart == charts.CHART_Z:
                lo = max(lo, outer * 1.02)
            else:
                hi = min(hi, (1.0 / outer) * 0.98)
        return lo, hi

    if seam is not None:
        A, B = float(seam[0]), float(seam[1])
        if not (1.0 / R0 < A < B < R0):
            raise AtlasError("seam annulus (%g, %g) must sit inside the "
                             "chart overlap (%g, %g)" % (A, B, 1 / R0, R0))
        patches = make_patches(1.0)
        for pc in patches:
            outer = abs(pc.p_loc) + pc.r_out
            zlo = outer if pc.chart == charts.CHART_Z else 1.0 / outer
            zhi = None
            if pc.chart == charts.CHART_Z:
                bad = zlo > A
            else:
                bad = zlo < B
            if bad:
                raise PunctureOnSeam(
                    "puncture %d (patch out to z-radius %.4g) intrudes on "
                    "the seam annulus (%g, %g)" % (pc.index, zlo, A, B))
        return Atlas(surface, R0, A, B, patches)

    for scale in (1.0, 0.7, 0.5, 0.35, 0.25):
        patches = make_patches(scale)
        A, B = window(patches)
        if B / A >= 1.08:
            return Atlas(surface, R0, A, B, patches)
    raise PunctureOnSeam(
        "no seam annulus inside (%g, %g) clears all puncture patches; "
        "punctures crowd the unit circle" % (1.0 / R0, R0))
