"""Quadrature grid on the 2-sphere parameter domain.

θ nodes are Gauss-Legendre nodes in cos θ (they never touch the poles),
φ nodes are uniform. Fields are arrays of shape ``(ntheta, nphi, ...)``.

θ-derivatives use trigonometric barycentric interpolation on the full
meridian circle: the samples at ``(θ_k, φ_l)`` and ``(θ_k, φ_l + π)`` are the
values of one smooth periodic function at ``t = θ_k`` and ``t = -θ_k``.
A field whose sign flips when the meridian direction is reversed (anything
carrying one θ index, e.g. ``∂_θ f`` or ``sqrt(det σ)``) has ``parity=-1``.
"""

from functools import lru_cache

import numpy as np

__all__ = ["SphereGrid"]


def _trig_weights(t):
    d = np.sin(0.5 * (t[:, None] - t[None, :]))
    np.fill_diagonal(d, 1.0)
    sign = np.prod(np.sign(d), axis=1)
    logs = np.sum(np.log(np.abs(d)), axis=1)
    return sign * np.exp(-(logs - logs.max()))


@lru_cache(maxsize=16)
def _circle_operators(order):
    x, w = np.polynomial.legendre.leggauss(order)
    idx = np.argsort(-x)
    x, w = x[idx], w[idx]
    theta = np.arccos(x)
    t = np.concatenate([theta, -theta])
    bw = _trig_weights(t)
    diff = t[:, None] - t[None, :]
    np.fill_diagonal(diff, 1.0)
    D = 0.5 * (bw[None, :] / bw[:, None]) / np.tan(0.5 * diff)
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    for arr in (x, w, theta, t, bw, D):
        arr.setflags(write=False)
    return x, w, theta, t, bw, D


class SphereGrid:
    """Tensor grid of ``order`` θ-nodes and ``nphi`` φ-nodes.

    ``nphi`` must be even (the reflected meridian must be on the grid) and at
    least 4 so that φ-derivatives of rotating vector components are exact.
    """

    def __init__(self, order=64, nphi=4):
        order = int(order)
        nphi = int(nphi)
        if order < 4:
            raise ValueError(f"quadrature order must be >= 4, got {order}")
        if nphi < 4 or nphi % 2:
            raise ValueError(f"nphi must be even and >= 4, got {nphi}")
        self.order = order
        self.nphi = nphi
        (self.cos_theta, self.weights, self.theta, self._t, self._bw,
         self._D) = _circle_operators(order)
        self.sin_theta = np.sqrt(1.0 - self.cos_theta ** 2)
        self.phi = 2.0 * np.pi * np.arange(nphi) / nphi
        self._mirror = (np.arange(nphi) + nphi // 2) % nphi
        k = np.fft.fftfreq(nphi, d=1.0 / nphi)
        k[nphi // 2] = 0.0
        self._k = k

    def __repr__(self):
        return f"SphereGrid(order={self.order}, nphi={self.nphi})"

    @property
    def shape(self):
        return (self.order, self.nphi)

    def mesh(self):
        """Return ``(theta, phi)`` arrays of shape ``(order, nphi)``."""
        return np.meshgrid(self.theta, self.phi, indexing="ij")

    def _circle(self, f, parity):
        f = np.asarray(f, dtype=float)
        return np.concatenate([f, parity * f[:, self._mirror]], axis=0)

    def d_theta(self, f, parity=1):
        """Spectral θ-derivative of a grid field (result has parity ``-parity``)."""
        circ = self._circle(f, parity)
        n = self.order
        return np.tensordot(self._D[:n], circ, axes=(1, 0))

    def d_phi(self, f):
        """Spectral φ-derivative of a grid field."""
        F = np.fft.fft(np.asarray(f, dtype=float), axis=1)
        shape = [1] * F.ndim
        shape[1] = self.nphi
        return np.real(np.fft.ifft(1j * self._k.reshape(shape) * F, axis=1))

    def interpolate_theta(self, f, t, parity=1):
        """Evaluate the meridian interpolant of ``f`` (shape ``(order, nphi, ...)``)
        at angles ``t`` along each φ-meridian. Angles in ``(-π, 0)`` refer to
        the reflected half ``φ + π``.
        """
        circ = self._circle(f, parity)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        diff = t[:, None] - self._t[None, :]
        hit = np.isclose(diff, 0.0, atol=1e-15, rtol=0)
        diff = np.where(hit, 1.0, diff)
        K = self._bw[None, :] / np.tan(0.5 * diff)
        L = K / K.sum(axis=1, keepdims=True)
        rows, cols = np.nonzero(hit)
        L[rows] = 0.0
        L[rows, cols] = 1.0
        return np.tensordot(L, circ, axes=(1, 0))

    def antiderivative_theta(self, fprime, origin=0.5 * np.pi, parity=-1,
                             npts=8):
        """``F(θ_k) = ∫_origin^θ_k f'(t) dt`` at every θ node.

        ``fprime`` is a grid field of the given parity. Integration runs
        panel-by-panel between consecutive nodes with ``npts``-point
        Gauss-Legendre rules on the spectral interpolant.
        """
        fprime = np.asarray(fprime, dtype=float)
        knots = np.sort(np.concatenate([self.theta, [origin]]))
        a, b = knots[:-1], knots[1:]
        gx, gw = np.polynomial.legendre.leggauss(npts)
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        pts = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
        vals = self.interpolate_theta(fprime, pts, parity=parity)
        vals = vals.reshape((len(a), npts) + fprime.shape[1:])
        wts = (half[:, None] * gw[None, :]).reshape((len(a), npts)
                                                    + (1,) * (fprime.ndim - 1))
        panels = np.sum(vals * wts, axis=1)
        cum = np.concatenate([np.zeros((1,) + panels.shape[1:]),
                              np.cumsum(panels, axis=0)])
        iorigin = int(np.searchsorted(knots, origin))
        cum = cum - cum[iorigin]
        keep = np.ones(len(knots), dtype=bool)
        keep[iorigin] = False
        return cum[keep]

    def integrate(self, f, area_element):
        """``∫ f dA`` where ``area_element`` is ``sqrt(det σ)`` on the grid
        (density with respect to ``dθ dφ``)."""
        f = np.asarray(f, dtype=float)
        dens = np.asarray(area_element, dtype=float) * f
        wt = (self.weights / self.sin_theta)[:, None] * (2.0 * np.pi / self.nphi)
        return float(np.sum(wt * dens))
