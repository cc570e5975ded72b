"""Spacetime metrics with first derivatives and Christoffel symbols.

Points are arrays of shape ``(..., 4)`` holding ``(y0, y1, y2, y3)`` in
geometric units. All providers are vectorized over the leading axes:

    G  = metric.eval(points)     # (..., 4, 4)
    dG = metric.deriv(points)    # (..., 4, 4, 4), dG[..., c, a, b] = ∂_c G_ab
    Gam = christoffel(metric, points)  # (..., 4, 4, 4), Gam[..., c, a, b] = Γ^c_ab
"""

import numpy as np

from . import kernels

__all__ = [
    "DomainError",
    "SignatureError",
    "MetricProvider",
    "Minkowski",
    "IsotropicSchwarzschild",
    "minkowski",
    "schwarzschild_isotropic",
    "christoffel",
    "check_signature",
    "fd_derivative",
]


class DomainError(ValueError):
    """Point outside the domain where a metric is defined."""


class SignatureError(ValueError):
    """Metric is not Lorentzian with signature (-,+,+,+)."""


def _as_points(points):
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1:] != (4,):
        raise ValueError(f"points must have shape (..., 4), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise DomainError("non-finite coordinates")
    return pts


def check_signature(G):
    """Raise SignatureError unless every matrix in ``G`` has signature (-,+,+,+)."""
    G = np.asarray(G, dtype=float)
    ev = np.linalg.eigvalsh(G.reshape(-1, 4, 4))
    neg = np.sum(ev < 0, axis=-1)
    pos = np.sum(ev > 0, axis=-1)
    bad = np.flatnonzero((neg != 1) | (pos != 3))
    if bad.size:
        raise SignatureError(
            f"metric not Lorentzian at {bad.size} point(s); "
            f"first eigenvalues {ev[bad[0]].tolist()}"
        )


def fd_derivative(fn, points, rel_step=1e-6):
    """Central-difference derivative of a matrix field with one Richardson step.

    The step at each point is ``max(1, |y|) * rel_step``. Returns an array of
    shape ``(..., 4, 4, 4)`` indexed ``[..., c, a, b]``.
    """
    pts = np.asarray(points, dtype=float)
    h = np.maximum(1.0, np.linalg.norm(pts, axis=-1)) * rel_step
    out = None
    for c in range(4):
        e = np.zeros(4)
        e[c] = 1.0

        def central(step):
            s = step[..., None]
            diff = fn(pts + s * e) - fn(pts - s * e)
            return diff / (2.0 * step)[..., None, None]

        d = (4.0 * central(0.5 * h) - central(h)) / 3.0
        if out is None:
            out = np.empty(d.shape[:-2] + (4, 4, 4))
        out[..., c, :, :] = d
    return out


class MetricProvider:
    """Base class for spacetime metrics.

    Subclasses implement ``_metric(points)``; ``_deriv(points)`` defaults to
    the finite-difference policy of :func:`fd_derivative`. Instances are
    immutable after construction.
    """

    name = "metric"

    def __init__(self, params=None):
        self._params = dict(params or {})

    @property
    def params(self):
        return dict(self._params)

    def eval(self, points):
        G = self._metric(_as_points(points))
        check_signature(G)
        return G

    def deriv(self, points):
        return self._deriv(_as_points(points))

    def _metric(self, pts):
        raise NotImplementedError

    def _deriv(self, pts):
        return fd_derivative(self._metric, pts)

    def christoffel(self, points):
        return christoffel(self, points)

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self._params.items())
        return f"{type(self).__name__}({args})"


class Minkowski(MetricProvider):
    name = "minkowski"

    def _metric(self, pts):
        G = np.zeros(pts.shape[:-1] + (4, 4))
        G[..., 0, 0] = -1.0
        G[..., 1, 1] = G[..., 2, 2] = G[..., 3, 3] = 1.0
        return G

    def _deriv(self, pts):
        return np.zeros(pts.shape[:-1] + (4, 4, 4))


class IsotropicSchwarzschild(MetricProvider):
    """Schwarzschild in isotropic coordinates,

        ds² = -((1 - M/2ρ)/(1 + M/2ρ))² dt² + (1 + M/2ρ)⁴ δ_ij dy^i dy^j,

    valid for ρ > M/2.
    """

    name = "schwarzschild"

    def __init__(self, mass):
        mass = float(mass)
        if not mass >= 0:
            raise ValueError(f"mass must be non-negative, got {mass}")
        super().__init__({"M": mass})
        self.mass = mass

    def _rho(self, pts):
        rho = np.linalg.norm(pts[..., 1:], axis=-1)
        if self.mass > 0 and np.any(rho <= 0.5 * self.mass):
            raise DomainError(
                f"isotropic Schwarzschild needs rho > M/2 = {0.5 * self.mass}, "
                f"got rho = {float(np.min(rho))}"
            )
        return rho

    def _metric(self, pts):
        M = self.mass
        G = np.zeros(pts.shape[:-1] + (4, 4))
        if M == 0:
            G[..., 0, 0] = -1.0
            G[..., 1, 1] = G[..., 2, 2] = G[..., 3, 3] = 1.0
            return G
        rho = self._rho(pts)
        psi = 1.0 + M / (2.0 * rho)
        chi = 1.0 - M / (2.0 * rho)
        G[..., 0, 0] = -(chi / psi) ** 2
        G[..., 1, 1] = G[..., 2, 2] = G[..., 3, 3] = psi ** 4
        return G

    def _deriv(self, pts):
        M = self.mass
        dG = np.zeros(pts.shape[:-1] + (4, 4, 4))
        if M == 0:
            return dG
        rho = self._rho(pts)
        psi = 1.0 + M / (2.0 * rho)
        chi = 1.0 - M / (2.0 * rho)
        d00 = -2.0 * chi * M / (rho ** 2 * psi ** 3)
        dii = -2.0 * M * psi ** 3 / rho ** 2
        for c in range(1, 4):
            drho = pts[..., c] / rho
            dG[..., c, 0, 0] = d00 * drho
            for i in range(1, 4):
                dG[..., c, i, i] = dii * drho
        return dG


def minkowski():
    return Minkowski()


def schwarzschild_isotropic(M):
    return IsotropicSchwarzschild(M)


def christoffel(metric, points):
    """Christoffel symbols ``Γ^c_ab`` of ``metric`` at ``points``."""
    pts = _as_points(points)
    shape = pts.shape[:-1]
    G = metric.eval(pts).reshape(-1, 4, 4)
    dG = metric.deriv(pts).reshape(-1, 4, 4, 4)
    _, gam = kernels.christoffel(G, dG)
    return gam.reshape(shape + (4, 4, 4))
