"""Newton solver for the regular part of the conical hyperbolic metric.

We solve, in weak form on the mesh vertices,

    Delta_{g0} w - e^S e^w = K_{g0} - Delta_{g0} S,       S = sum_j a_j Psi_j,

so that g_a = exp(S + w) g0 has d^2(log g_a)/dz dzbar = g_a away from the
punctures.  The singular coefficient e^S and Delta_{g0} S are closed-form;
only w is discretized.  Continuation in a global weight scale tau guards
the Newton iteration at strong singularities.
"""

import numpy as np
from scipy import sparse

from . import charts
from .conventions import BACKGROUND_CURVATURE
from .errors import (EvaluationAtPuncture, NewtonDiverged,
                     PointTooCloseToPuncture)
from .mesh import SphereMesh, factorized


class SolverOptions(object):
    """Newton/continuation knobs for the Liouville solve."""

    def __init__(self, newton_tol=1e-11, max_iterations=60,
                 max_backtracks=30, continuation_steps=3,
                 linear_tol=1e-12):
        if newton_tol <= 0 or linear_tol <= 0:
            raise ValueError("tolerances must be positive")
        if continuation_steps < 1:
            raise ValueError("need at least one continuation step")
        self.newton_tol = float(newton_tol)
        self.max_iterations = int(max_iterations)
        self.max_backtracks = int(max_backtracks)
        self.continuation_steps = int(continuation_steps)
        self.linear_tol = float(linear_tol)


class ConicalMetric(object):
    """Solved constant-curvature -1 conical metric g_a = e^(S+w) g0."""

    def __init__(self, surface, rule, mesh, w_vertices, options,
                 newton_history):
        self.surface = surface
        self.rule = rule
        self.mesh = mesh
        self.options = options
        self.newton_history = newton_history   # iterations per tau step
        self.w_vertices = w_vertices
        self.w = mesh.scatter(w_vertices)
        self.S = self._singular_sum_full()
        self.g_a = np.exp(self.S + self.w) * rule.g0
        self._mass0 = mesh.mass(rule.g0)
        self._mass_a = None
        self._resolvent_lu = None

    def _singular_sum_full(self, weights=None):
        rule = self.rule
        out = np.empty(rule.n_nodes)
        for fam in rule.families:
            out[fam.node_ids.ravel()] = rule.atlas.singular_sum(
                fam.zeta.ravel(), fam.chart,
                weights if weights is not None else self.surface.weights)
        return out

    # -- measures ------------------------------------------------------------

    @property
    def mass_a(self):
        """Lumped dA_{g_a} vertex weights (the solver-side area form)."""
        if self._mass_a is None:
            self._mass_a = self.mesh.mass(self.g_a)
        return self._mass_a

    def volume(self):
        """Total area of g_a via the graded quadrature."""
        return float(np.sum(self.rule.q * self.g_a))

    def integrate(self, values):
        """Quadrature integral against dA_{g_a}."""
        return self.rule.integrate(values, self.g_a)

    # -- residual diagnostics -------------------------------------------------

    def hyperbolicity_residual(self):
        """Nodal ((log g_a)_{z zbar} - g_a)/g_a via the solve operators."""
        rule, mesh = self.rule, self.mesh
        m0 = self._mass0
        V = np.exp(self.S)[mesh.vertex_ids]
        lapS = self._lap_S_vertices()
        lap_w = -(mesh.K @ self.w_vertices) / (4.0 * m0)
        resid = (lap_w + lapS - BACKGROUND_CURVATURE
                 - V * np.exp(self.w_vertices))
        rel = resid / (V * np.exp(self.w_vertices))
        return mesh.scatter(rel)

    def _lap_S_vertices(self, weights=None):
        rule = self.rule
        out = np.empty(rule.n_nodes)
        for fam in rule.families:
            out[fam.node_ids.ravel()] = rule.atlas.singular_sum_lap(
                fam.zeta.ravel(), fam.chart,
                weights if weights is not None else self.surface.weights)
        return out[self.mesh.vertex_ids]

    # -- point evaluation ------------------------------------------------------

    def density_at(self, zeta, chart):
        """Metric density at one point, returned in the requested chart."""
        dist = min(prof.local_radius(np.asarray([zeta]), chart)[0]
                   for prof in self.rule.atlas.profiles)
        if dist < 1e-13:
            raise EvaluationAtPuncture("metric is singular at a puncture")
        S = float(self.rule.atlas.singular_sum(
            np.asarray([zeta]), chart, self.surface.weights)[0])
        w = float(np.real(self.rule.eval_field(self.w, zeta, chart)))
        return float(np.exp(S + w) * charts.g0_density(zeta))

    def resolvent_factorization(self):
        if self._resolvent_lu is None:
            A = (self.mesh.K * 0.25 + sparse.diags(self.mass_a)).tocsc()
            self._resolvent_lu = factorized(A)
        return self._resolvent_lu


def _tau_schedule(total_weight, steps):
    tau0 = min(1.0, max(2.15 / total_weight, 0.55))
    if tau0 > 1.0 - 1e-12 or steps == 1:
        return [1.0]
    return list(np.linspace(tau0, 1.0, steps))


def solve_conical_metric(surface, rule, options=None, mesh=None,
                         w_start=None, tau_schedule=None):
    """Solve for the regular part w; returns a ConicalMetric.

    Raises NewtonDiverged when damping cannot reduce the residual and
    LinearSolveFailed on a broken Newton system.
    """
    if options is None:
        options = SolverOptions()
    if mesh is None:
        mesh = SphereMesh(rule)
    vids = mesh.vertex_ids
    m0 = mesh.mass(rule.g0)
    S_full = np.empty(rule.n_nodes)
    lapS_full = np.empty(rule.n_nodes)
    for fam in rule.families:
        ids = fam.node_ids.ravel()
        S_full[ids] = rule.atlas.singular_sum(fam.zeta.ravel(), fam.chart,
                                              surface.weights)
        lapS_full[ids] = rule.atlas.singular_sum_lap(
            fam.zeta.ravel(), fam.chart, surface.weights)
    S = S_full[vids]
    lapS = lapS_full[vids]
    K = mesh.K

    if tau_schedule is None:
        tau_schedule = _tau_schedule(surface.total_weight,
                                     options.continuation_steps)
    w = np.zeros(mesh.n) if w_start is None else np.array(w_start,
                                                          dtype=float)
    history = []

    def residual(wv, tau):
        V = np.exp(tau * S + wv)
        F = -(K @ wv) / 4.0 - m0 * V \
            - m0 * (BACKGROUND_CURVATURE - tau * lapS)
        err = np.linalg.norm(F / (m0 * (1.0 + V))) / np.sqrt(len(F))
        return F, V, err

    # scaled-L2 residual; the few ultra-graded vertices sit at a rounding
    # floor in the pointwise ratio, which the mean-square metric ignores
    floor_accept = 1e-8

    for tau in tau_schedule:
        F, V, err = residual(w, tau)
        it = 0
        while err > options.newton_tol:
            if it >= options.max_iterations:
                raise NewtonDiverged(
                    "no convergence at tau=%.3f after %d iterations "
                    "(residual %.2e)" % (tau, it, err))
            J = (-(K * 0.25) - sparse.diags(m0 * V)).tocsc()
            lu = factorized(J)
            delta = lu.solve(-F)
            alpha = 1.0
            improved = False
            for _ in range(options.max_backtracks):
                Fn, Vn, err_n = residual(w + alpha * delta, tau)
                if err_n < err * (1.0 - 1e-4 * alpha) \
                        or err_n < options.newton_tol:
                    improved = True
                    break
                alpha *= 0.5
            if not improved:
                if err < floor_accept:
                    break        # converged to the arithmetic floor
                raise NewtonDiverged(
                    "line search stalled at tau=%.3f (residual %.2e)"
                    % (tau, err))
            w = w + alpha * delta
            F, V, err = Fn, Vn, err_n
            it += 1
        history.append(it)

    return ConicalMetric(surface, rule, mesh, w, options, history)


# ---------------------------------------------------------------------------
# metric diagnostics


def curvature_residual(metric, points=None, chart=charts.CHART_Z):
    """Hyperbolicity defect ((log g_a)_{z zbar} - g_a)/g_a.

    With `points=None` returns the nodal field (same discrete operators as
    the solve).  Given explicit points, interpolates the nodal field there;
    points inside a patch core radius raise PointTooCloseToPuncture.
    """
    field = metric.hyperbolicity_residual()
    if points is None:
        return field
    out = []
    for zeta in np.atleast_1d(points):
        dist = min(prof.local_radius(np.asarray([zeta]), chart)[0]
                   for prof in metric.rule.atlas.profiles)
        r_in = max(pc.r_in for pc in metric.rule.atlas.patches)
        if dist < r_in:
            raise PointTooCloseToPuncture(
                "point at local distance %.3g from a puncture" % dist)
        out.append(np.real(metric.rule.eval_field(field, zeta, chart)))
    return np.array(out)


def volume(metric):
    """Total hyperbolic area; equals pi*(sum a_j - 2) in exact arithmetic."""
    return metric.volume()


def metric_at(metric, zeta, chart=charts.CHART_Z):
    """Density of g_a against |dzeta|^2 in the requested chart."""
    return metric.density_at(zeta, chart)


def local_profile_check(metric, puncture_index, radii=None, n_angles=16,
                        fit_degree=3):
    """Sample rho = g_a * r^(2a) near a puncture and test the cone profile.

    Reports the angular variation of rho at the smallest radius and the
    relative residuals of least-squares polynomial fits of the angular mean
    against t = r^(2(1-a)) (the profile variable) and against r itself.
    """
    pc = metric.rule.atlas.patches[puncture_index]
    a = metric.surface.weights[puncture_index]
    if radii is None:
        radii = np.geomspace(1e-3, 1e-2, 12)
    radii = np.asarray(radii, dtype=float)
    theta = 2 * np.pi * np.arange(n_angles) / n_angles
    rho = np.empty((len(radii), n_angles))
    for i, r in enumerate(radii):
        for k, th in enumerate(theta):
            zeta = pc.p_loc + r * np.exp(1j * th)
            rho[i, k] = metric.density_at(zeta, pc.chart) * r ** (2 * a)
    mean = rho.mean(axis=1)
    angular_variation = (rho[0].max() - rho[0].min()) / mean[0]

    def fit_residual(x):
        A = np.vander(x, fit_degree + 1, increasing=True)
        coef, *_ = np.linalg.lstsq(A, mean, rcond=None)
        return np.linalg.norm(A @ coef - mean) / np.linalg.norm(mean)

    t = radii ** (2.0 * (1.0 - a))
    return {
        "puncture": puncture_index,
        "weight": a,
        "radii": radii,
        "angular_variation": float(angular_variation),
        "fit_residual_t": float(fit_residual(t)),
        "fit_residual_r": float(fit_residual(radii)),
        "profile_mean": mean,
    }
