"""Panelized Gauss rules and spectral calculus on polar tensor grids.

Each node family in the quadrature atlas is a tensor grid: Gauss-Legendre
panels in a (possibly graded) radial variable crossed with a uniform
periodic angular grid.  This module supplies the 1-d building blocks:
panel nodes/weights, Lagrange differentiation within panels, FFT
differentiation in the angle, and interpolation to off-grid points.
"""

import numpy as np


def gauss_panels(breakpoints, n_per_panel):
    """Composite Gauss-Legendre nodes/weights on [b0..bk] panels.

    Returns (nodes, weights, panel_index) with nodes strictly inside the
    panels (no breakpoint is ever a node).
    """
    breakpoints = np.asarray(breakpoints, dtype=float)
    x0, w0 = np.polynomial.legendre.leggauss(int(n_per_panel))
    nodes, weights, panel = [], [], []
    for k in range(len(breakpoints) - 1):
        a, b = breakpoints[k], breakpoints[k + 1]
        nodes.append(0.5 * (b - a) * x0 + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w0)
        panel.append(np.full(n_per_panel, k))
    return (np.concatenate(nodes), np.concatenate(weights),
            np.concatenate(panel))


def barycentric_weights(x):
    x = np.asarray(x, dtype=float)
    m = len(x)
    w = np.ones(m)
    for j in range(m):
        w[j] = 1.0 / np.prod(x[j] - np.delete(x, j))
    return w


def lagrange_diff_matrix(x):
    """Derivative-at-nodes matrix for the Lagrange basis on nodes x."""
    x = np.asarray(x, dtype=float)
    m = len(x)
    w = barycentric_weights(x)
    D = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            if i != j:
                D[i, j] = (w[j] / w[i]) / (x[i] - x[j])
        D[i, i] = -np.sum(D[i, :])
    return D


def lagrange_interp_weights(x, xq):
    """Row of interpolation weights from nodes x to a single point xq."""
    x = np.asarray(x, dtype=float)
    diff = xq - x
    exact = np.abs(diff) < 1e-300
    if np.any(exact):
        row = np.zeros(len(x))
        row[np.argmax(exact)] = 1.0
        return row
    w = barycentric_weights(x) / diff
    return w / np.sum(w)


class PanelAxis(object):
    """Radial axis of a tensor family: Gauss panels in a monotone variable."""

    def __init__(self, breakpoints, n_per_panel):
        self.breakpoints = np.asarray(breakpoints, dtype=float)
        self.n_per_panel = int(n_per_panel)
        self.nodes, self.weights, self.panel = gauss_panels(
            self.breakpoints, n_per_panel)
        self.n = len(self.nodes)
        self.npanels = len(self.breakpoints) - 1
        self._diffs = [lagrange_diff_matrix(
            self.nodes[k * n_per_panel:(k + 1) * n_per_panel])
            for k in range(self.npanels)]

    def derivative(self, arr):
        """d(arr)/dvar along axis 0; arr shape (n, ...)."""
        out = np.empty_like(arr, dtype=complex if np.iscomplexobj(arr) else float)
        m = self.n_per_panel
        for k in range(self.npanels):
            sl = slice(k * m, (k + 1) * m)
            out[sl] = self._diffs[k] @ arr[sl]
        return out

    def panel_of(self, xq):
        k = np.searchsorted(self.breakpoints, xq) - 1
        return int(np.clip(k, 0, self.npanels - 1))

    def interp_row(self, xq):
        """(indices, weights) interpolating a value at variable xq."""
        k = self.panel_of(xq)
        m = self.n_per_panel
        idx = np.arange(k * m, (k + 1) * m)
        wts = lagrange_interp_weights(self.nodes[idx], xq)
        return idx, wts


class AngularAxis(object):
    """Uniform periodic angular grid with FFT calculus."""

    def __init__(self, n):
        self.n = int(n)
        self.theta = 2.0 * np.pi * np.arange(self.n) / self.n
        self.weight = 2.0 * np.pi / self.n
        k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        if self.n % 2 == 0:
            k = k.copy()
            k[self.n // 2] = 0.0   # drop the unpaired Nyquist mode
        self._ik = 1j * k

    def derivative(self, arr):
        """d(arr)/dtheta along axis 1; arr shape (..., n)."""
        return np.fft.ifft(self._ik * np.fft.fft(arr, axis=-1), axis=-1)

    def interp_row(self, theta_q):
        """Barycentric trigonometric interpolation weights at theta_q."""
        d = 0.5 * (theta_q - self.theta)
        sgn = np.where(np.arange(self.n) % 2 == 0, 1.0, -1.0)
        near = np.abs(np.sin(d)) < 1e-14
        if np.any(near):
            row = np.zeros(self.n)
            row[np.argmax(near)] = 1.0
            return row
        if self.n % 2 == 0:
            c = sgn / np.tan(d)
        else:
            c = sgn / np.sin(d)
        return c / np.sum(c)
