"""Isometric embedding of axisymmetric 2-metrics as surfaces of revolution.

A metric ``σ = r0² P² dθ² + r0² Q² sin²θ dφ²`` is realized in
``R³ ⊂ R^{3,1}`` as ``X = (0, u sin φ, u cos φ, v)`` with

    u = r0 Q sin θ,    v' = -sqrt(r0² P² - u'²),    v(π/2) = 0.

The reference mean curvature ``H0`` is taken with respect to the outward
normal, so a round sphere of radius r has ``H0 = 2/r``.
"""

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

__all__ = [
    "EmbeddingError",
    "AxisymMetric2",
    "EmbeddingProfile",
    "profile_from_metric",
    "reference_mean_curvature",
    "tau_field",
    "embed_geometry",
]


class EmbeddingError(ArithmeticError):
    """The metric has no isometric embedding as a surface of revolution."""

    def __init__(self, message, theta=None):
        self.theta = theta
        if theta is not None:
            message = f"{message} at theta={theta:.6g}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class AxisymMetric2:
    """Profile functions ``P(θ)``, ``Q(θ)`` sampled on the θ nodes of ``grid``."""

    grid: object
    r0: float
    P: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        Q = np.asarray(self.Q, dtype=float)
        if P.shape != (self.grid.order,) or Q.shape != (self.grid.order,):
            raise ValueError("P and Q must be sampled on the grid theta nodes")
        if np.any(P <= 0) or np.any(Q <= 0):
            raise ValueError("P and Q must be positive")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "Q", Q)

    @classmethod
    def from_induced_metric(cls, grid, sigma, r0, tol=1e-9):
        """Read ``P``, ``Q`` from an induced metric on ``grid``.

        ``sigma`` (shape ``grid.shape + (2, 2)``) must be φ-independent with
        vanishing ``σ_θφ``, relative to ``tol``.
        """
        sigma = np.asarray(sigma, dtype=float)
        scale = np.max(np.abs(sigma))
        spread = np.max(np.abs(sigma - sigma[:, :1]))
        if spread > tol * scale:
            raise ValueError(f"induced metric is not axisymmetric "
                             f"(relative phi-variation {spread / scale:.3g})")
        if np.max(np.abs(sigma[..., 0, 1])) > tol * scale:
            raise ValueError("induced metric has a theta-phi cross term")
        s = sigma[:, 0]
        P = np.sqrt(s[:, 0, 0]) / r0
        Q = np.sqrt(s[:, 1, 1]) / (r0 * grid.sin_theta)
        return cls(grid, float(r0), P, Q)


@dataclass(frozen=True, eq=False)
class EmbeddingProfile:
    """Profile curve ``(u(θ), v(θ))`` and its θ-derivatives on the grid nodes."""

    grid: object
    r0: float
    P: np.ndarray
    u: np.ndarray
    du: np.ndarray
    ddu: np.ndarray
    v: np.ndarray
    dv: np.ndarray
    ddv: np.ndarray

    @cached_property
    def H0(self):
        return reference_mean_curvature(self)

    @property
    def theta(self):
        return self.grid.theta

    def shifted(self, c):
        """Same embedding translated by ``c`` along the axis (gauge change)."""
        return replace(self, v=self.v + c)

    def position(self, phi):
        """``X`` as spacetime points of shape ``(order, len(phi), 4)``."""
        phi = np.atleast_1d(phi)[None, :]
        u, v = self.u[:, None], self.v[:, None]
        zero = np.zeros_like(u * phi)
        return np.stack([zero, u * np.sin(phi), u * np.cos(phi),
                         v + zero], -1)

    def outward_normal(self, phi):
        """Unit outward normal ``e3^{H0}`` in R³ (as a 4-vector)."""
        phi = np.atleast_1d(phi)[None, :]
        s = (self.r0 * self.P)[:, None]
        du, dv = self.du[:, None], self.dv[:, None]
        zero = np.zeros_like(du * phi)
        return np.stack([zero, -dv * np.sin(phi) / s, -dv * np.cos(phi) / s,
                         du / s + zero], -1)


def profile_from_metric(g):
    """Solve for the surface-of-revolution profile of ``g``."""
    grid, r0 = g.grid, g.r0
    theta, s, c = grid.theta, grid.sin_theta, grid.cos_theta
    P, Q = g.P, g.Q
    col = lambda a: np.asarray(a)[:, None] * np.ones(grid.nphi)

    def derivs(f):
        # differentiate the deviation from the mean to limit roundoff growth
        f1 = grid.d_theta(col(f - f.mean()), parity=1)
        return f1[:, 0], grid.d_theta(f1, parity=-1)[:, 0]

    dP, _ = derivs(P)
    dQ, ddQ = derivs(Q)
    u = r0 * Q * s
    du = r0 * (dQ * s + Q * c)
    ddu = r0 * (ddQ * s + 2 * dQ * c - Q * s)
    # r0²P² - u'² rearranged so that nothing cancels near the poles
    radicand = (Q * s) ** 2 + (P - Q) * (P + Q) - dQ * s * (dQ * s + 2 * Q * c)
    bad = np.flatnonzero(radicand <= 0)
    if bad.size:
        raise EmbeddingError("not embeddable as a surface of revolution "
                             f"({bad.size} node(s))", float(theta[bad[0]]))
    dv = -r0 * np.sqrt(radicand)
    # from v'² = r0²P² - u'²
    ddv = (r0 ** 2 * P * dP - du * ddu) / dv
    v = grid.antiderivative_theta(col(dv), parity=-1)[:, 0]
    return EmbeddingProfile(grid, r0, P, u, du, ddu, v, dv, ddv)


def reference_mean_curvature(e):
    """Mean curvature (sum of principal curvatures, outward normal) of the
    surface of revolution ``e``.

    Meridian curvature ``(u''v' - u'v'')/|c'|³`` plus azimuthal curvature
    ``-v'/(u |c'|)`` with ``|c'| = r0 P``.
    """
    speed = e.r0 * e.P
    if np.any(speed <= 0) or np.any(e.u <= 0):
        raise EmbeddingError("degenerate profile derivative")
    meridian = (e.ddu * e.dv - e.du * e.ddv) / speed ** 3
    azimuthal = -e.dv / (e.u * speed)
    return meridian + azimuthal


def tau_field(e, a):
    """Time function ``τ = -⟨X, T0⟩ = -(a1 u sin φ + a2 u cos φ + a3 v)``
    on the full grid."""
    a = np.asarray(a, dtype=float)
    phi = e.grid.phi[None, :]
    u, v = e.u[:, None], e.v[:, None]
    return -(a[0] * u * np.sin(phi) + a[1] * u * np.cos(phi) + a[2] * v
             + 0.0 * phi)


def embed_geometry(geometry):
    """Embedding profile for the induced metric of a SurfaceGeometry."""
    g = AxisymMetric2.from_induced_metric(geometry.grid, geometry.sigma,
                                          geometry.chart.r0)
    return profile_from_metric(g)
