"""Fixed analytic conventions shared by every module.

All operators and area forms in this package follow one convention sheet:

* Laplacian: the complex Laplacian  Delta_g = (1/g) d^2/dz dzbar, which has
  non-positive spectrum.  In real coordinates Delta_g = (1/4g) * (dxx + dyy).
* Area form: dA_g = (sqrt(-1)/2) g dz ^ dzbar = g dx dy.
* Orientation constant: dz dzbar = -2i dx dy; the duality pairing integrates
  phi * mu against dz dzbar with this constant.
* Background metric: round sphere density g0 = 4/(1+|z|^2)^2 in either chart,
  with (our-normalization) curvature K_{g0} = +1/2 and total area 4*pi.
* Hyperbolic density: the solved conical density g_a satisfies
  d^2(log g_a)/dz dzbar = g_a away from the punctures, which integrates to
  Vol(g_a) = pi * (sum(a_j) - 2) on genus 0.

Changing any of these invalidates caches; the version string below is hashed
into every cache key and echoed in reports.
"""

CONVENTIONS_VERSION = "conesphere-conventions-1"

# dz ^ dzbar = -2i dx ^ dy
PAIRING_ORIENTATION = -2.0j

# K_{g0} of the round background, constant over the sphere.
BACKGROUND_CURVATURE = 0.5
