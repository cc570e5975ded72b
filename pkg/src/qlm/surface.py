"""Extrinsic geometry of parameterized spacelike 2-surfaces in spacetime.

The main entry point is :func:`compute_geometry`, which evaluates a chart on a
:class:`~qlm.grid.SphereGrid` and returns a :class:`SurfaceGeometry` holding,
per node, the induced metric, the mean curvature vector ``H``, its dual
``J`` (``⟨J,J⟩ = -⟨H,H⟩``, ``⟨J,H⟩ = 0``, future-directed) and the normal
connection one-form ``ω_a = ⟨∇_{∂_a Y}(J/|H|), H/|H|⟩``.

Pointwise versions (:func:`induced_metric`, :func:`mean_curvature_vector`,
:func:`dual_normal_J`, :func:`connection_form`) evaluate at arbitrary
``(θ, φ)`` without a grid; the connection form then uses a local
finite-difference stencil instead of the spectral θ-derivative.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .grid import SphereGrid

__all__ = [
    "GeometryError",
    "SurfaceChart",
    "boosted_sphere_chart",
    "round_sphere_chart",
    "SurfaceGeometry",
    "compute_geometry",
    "induced_metric",
    "mean_curvature_vector",
    "dual_normal_J",
    "connection_form",
    "surface_calculus",
    "integrate",
]

_STATUS_TEXT = {
    kernels.STATUS_SIGMA: "induced metric not positive definite",
    kernels.STATUS_SPACELIKE: "mean curvature not spacelike",
    kernels.STATUS_NORMAL: "degenerate normal bundle",
}


class GeometryError(ArithmeticError):
    """Raised when the surface fails a geometric requirement at some node.

    ``nodes`` is a list of ``(theta, phi, reason)`` for the failing nodes.
    """

    def __init__(self, message, nodes=()):
        self.nodes = list(nodes)
        if self.nodes:
            th, ph, why = self.nodes[0]
            message = (f"{message}: {len(self.nodes)} node(s), first at "
                       f"theta={th:.6g}, phi={ph:.6g} ({why})")
        super().__init__(message)


@dataclass(frozen=True)
class SurfaceChart:
    """Boosted coordinate sphere

        Y(θ, φ) = (βγ r0 cos θ, r0 sin θ sin φ, r0 sin θ cos φ, γ r0 cos θ),

    the coordinate sphere of radius ``r0`` in the slice ``γ y0 - βγ y3 = 0``.
    """

    beta: float
    gamma: float
    r0: float

    def evaluate(self, theta, phi):
        """Return ``(Y, Yd, Ydd)`` with shapes ``(..., 4)``, ``(..., 2, 4)``
        and ``(..., 2, 2, 4)``; index 0 is θ and index 1 is φ."""
        theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float),
                                         np.asarray(phi, dtype=float))
        r, b, g = self.r0, self.beta, self.gamma
        st, ct = np.sin(theta), np.cos(theta)
        sp, cp = np.sin(phi), np.cos(phi)
        zero = np.zeros_like(theta)
        Y = np.stack([b * g * r * ct, r * st * sp, r * st * cp, g * r * ct], -1)
        Yt = np.stack([-b * g * r * st, r * ct * sp, r * ct * cp, -g * r * st], -1)
        Yp = np.stack([zero, r * st * cp, -r * st * sp, zero], -1)
        Ytp = np.stack([zero, r * ct * cp, -r * ct * sp, zero], -1)
        Ypp = np.stack([zero, -r * st * sp, -r * st * cp, zero], -1)
        Yd = np.stack([Yt, Yp], -2)
        Ydd = np.stack([np.stack([-Y, Ytp], -2), np.stack([Ytp, Ypp], -2)], -3)
        return Y, Yd, Ydd

    def slice_coordinates(self, theta, phi):
        """Coordinates ``(y1, y2, y3')`` of the nodes inside the boosted slice."""
        theta, phi = np.broadcast_arrays(theta, phi)
        r = self.r0
        return np.stack([r * np.sin(theta) * np.sin(phi),
                         r * np.sin(theta) * np.cos(phi),
                         r * np.cos(theta)], -1)

    def frames(self, theta, phi):
        """Reference frames ``(N, B, T)``: ``N = Y/r0``, ``B = γ(∂0 + β∂3)``
        and ``T = ∂_θ Y / r0``."""
        Y, Yd, _ = self.evaluate(theta, phi)
        B = np.broadcast_to(self.gamma * np.array([1.0, 0.0, 0.0, self.beta]),
                            Y.shape)
        return Y / self.r0, B, Yd[..., 0, :] / self.r0


def boosted_sphere_chart(beta, gamma, r0):
    beta, gamma, r0 = float(beta), float(gamma), float(r0)
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if abs(gamma ** 2 - beta ** 2 * gamma ** 2 - 1.0) > 1e-12:
        raise ValueError(f"inconsistent boost: gamma^2 (1 - beta^2) = "
                         f"{gamma ** 2 * (1 - beta ** 2)!r}, expected 1")
    if not r0 > 0:
        raise ValueError(f"r0 must be positive, got {r0}")
    return SurfaceChart(beta, gamma, r0)


def round_sphere_chart(r0):
    return boosted_sphere_chart(0.0, 1.0, r0)


def _inner(G, u, v):
    return np.einsum("...i,...ij,...j->...", u, G, v)


def _local(chart, metric, theta, phi):
    Y, Yd, Ydd = chart.evaluate(theta, phi)
    shape = Y.shape[:-1]
    G = metric.eval(Y).reshape(-1, 4, 4)
    dG = metric.deriv(Y).reshape(-1, 4, 4, 4)
    Ginv, gam = kernels.christoffel(G, dG)
    sigma, H, J, status = kernels.extrinsic(
        G, Ginv, gam, Yd.reshape(-1, 2, 4), Ydd.reshape(-1, 2, 2, 4))
    _raise_on_status(status, np.broadcast_to(theta, shape).ravel(),
                     np.broadcast_to(phi, shape).ravel())
    return dict(
        Y=Y, Yd=Yd, G=G.reshape(shape + (4, 4)),
        gamma=gam.reshape(shape + (4, 4, 4)),
        sigma=sigma.reshape(shape + (2, 2)),
        H=H.reshape(shape + (4,)), J=J.reshape(shape + (4,)),
    )


def _raise_on_status(status, theta, phi):
    bad = np.flatnonzero(status)
    if bad.size == 0:
        return
    nodes = [(float(theta[i]), float(phi[i]), _STATUS_TEXT[int(status[i])])
             for i in bad]
    reasons = {why for _, _, why in nodes}
    raise GeometryError(" / ".join(sorted(reasons)), nodes)


def induced_metric(chart, metric, theta, phi):
    """``σ_ab = G(∂_a Y, ∂_b Y)`` at the given parameter values."""
    return _local(chart, metric, theta, phi)["sigma"]


def mean_curvature_vector(chart, metric, theta, phi):
    """Return ``(H, |H|)``; raises GeometryError if H is not spacelike."""
    loc = _local(chart, metric, theta, phi)
    H = loc["H"]
    return H, np.sqrt(_inner(loc["G"], H, H))


def dual_normal_J(chart, metric, theta, phi, H=None):
    """Future-directed normal with ``⟨J,J⟩ = -⟨H,H⟩`` and ``⟨J,H⟩ = 0``.

    If ``H`` is given it is used instead of the computed mean curvature
    vector (it must be normal to the surface).
    """
    if H is None:
        return _local(chart, metric, theta, phi)["J"]
    Y, Yd, Ydd = chart.evaluate(theta, phi)
    shape = Y.shape[:-1]
    G = metric.eval(Y).reshape(-1, 4, 4)
    Ginv = np.linalg.inv(G)
    Yd = Yd.reshape(-1, 2, 4)
    H = np.broadcast_to(H, shape + (4,)).reshape(-1, 4)
    sigma = np.einsum("nai,nij,nbj->nab", Yd, G, Yd)
    sinv = np.linalg.inv(sigma)
    V = -Ginv[:, :, 0]
    proj = np.einsum("nbi,nij,nj->nb", Yd, G, V)
    Vn = V - np.einsum("nai,nab,nb->ni", Yd, sinv, proj)
    HH = np.einsum("ni,nij,nj->n", H, G, H)
    if np.any(HH <= 0):
        raise GeometryError("mean curvature not spacelike")
    VJ = Vn - (np.einsum("ni,nij,nj->n", Vn, G, H) / HH)[:, None] * H
    nJ = -np.einsum("ni,nij,nj->n", VJ, G, VJ)
    if np.any(nJ <= 0):
        raise GeometryError("degenerate normal bundle")
    return (np.sqrt(HH / nJ)[:, None] * VJ).reshape(shape + (4,))


_FD6 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0


def connection_form(chart, metric, theta, phi, W, h=1e-3):
    """``⟨∇^N_W (J/|H|), H/|H|⟩`` for a tangent vector ``W = W^a ∂_a Y``.

    Derivatives of ``J/|H|`` along θ and φ use a 6th-order central stencil
    with step ``h`` (radians). ``W`` has shape ``(..., 2)``.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    theta, phi = np.broadcast_arrays(theta, phi)
    offsets = h * np.arange(-3, 4)

    def unit_J(th, ph):
        loc = _local(chart, metric, th, ph)
        hn = np.sqrt(_inner(loc["G"], loc["H"], loc["H"]))
        return loc["J"] / hn[..., None]

    Et = unit_J(theta[..., None] + offsets, phi[..., None] + 0 * offsets)
    Ep = unit_J(theta[..., None] + 0 * offsets, phi[..., None] + offsets)
    dE = np.stack([np.tensordot(Et, _FD6, axes=(-2, 0)),
                   np.tensordot(Ep, _FD6, axes=(-2, 0))], -2) / h
    loc = _local(chart, metric, theta, phi)
    shape = theta.shape
    hn = np.sqrt(_inner(loc["G"], loc["H"], loc["H"]))
    E = loc["J"] / hn[..., None]
    omega = kernels.connection(
        loc["G"].reshape(-1, 4, 4), loc["gamma"].reshape(-1, 4, 4, 4),
        loc["Yd"].reshape(-1, 2, 4), E.reshape(-1, 4), dE.reshape(-1, 2, 4),
        loc["H"].reshape(-1, 4)).reshape(shape + (2,))
    return np.sum(np.asarray(W, dtype=float) * omega, axis=-1)


@dataclass(frozen=True, eq=False)
class SurfaceGeometry:
    """Per-node geometric data of a surface on a :class:`SphereGrid`.

    Arrays have leading shape ``grid.shape``. ``omega[..., a]`` is the
    connection one-form evaluated on ``∂_a Y``.
    """

    grid: SphereGrid
    chart: SurfaceChart
    theta: np.ndarray
    phi: np.ndarray
    Y: np.ndarray
    Yd: np.ndarray
    G: np.ndarray
    christoffel: np.ndarray
    sigma: np.ndarray
    sigma_inv: np.ndarray
    sqrt_det: np.ndarray
    H: np.ndarray
    H_norm: np.ndarray
    J: np.ndarray
    omega: np.ndarray

    def inner(self, u, v):
        return _inner(self.G, u, v)

    def integrate(self, f):
        return self.grid.integrate(f, self.sqrt_det)

    def connection(self, W):
        """``⟨∇^N_W (J/|H|), H/|H|⟩`` for a tangent field ``W^a`` of shape
        ``grid.shape + (2,)``."""
        return np.sum(W * self.omega, axis=-1)


def compute_geometry(chart, metric, grid):
    """Evaluate all per-node extrinsic data of ``chart`` in ``metric``."""
    theta, phi = grid.mesh()
    shape = grid.shape
    Y, Yd, Ydd = chart.evaluate(theta, phi)
    G = metric.eval(Y).reshape(-1, 4, 4)
    dG = metric.deriv(Y).reshape(-1, 4, 4, 4)
    Ginv, gam = kernels.christoffel(G, dG)
    Ydf = Yd.reshape(-1, 2, 4)
    sigma, H, J, status = kernels.extrinsic(G, Ginv, gam, Ydf,
                                            Ydd.reshape(-1, 2, 2, 4))
    _raise_on_status(status, theta.ravel(), phi.ravel())
    HH = np.einsum("ni,nij,nj->n", H, G, H)
    hn = np.sqrt(HH)
    E = (J / hn[:, None]).reshape(shape + (4,))
    dE = np.stack([grid.d_theta(E, parity=1), grid.d_phi(E)], axis=-2)
    omega = kernels.connection(G, gam, Ydf, E.reshape(-1, 4),
                               dE.reshape(-1, 2, 4), H)
    det = sigma[:, 0, 0] * sigma[:, 1, 1] - sigma[:, 0, 1] ** 2
    return SurfaceGeometry(
        grid=grid, chart=chart, theta=theta, phi=phi, Y=Y, Yd=Yd,
        G=G.reshape(shape + (4, 4)),
        christoffel=gam.reshape(shape + (4, 4, 4)),
        sigma=sigma.reshape(shape + (2, 2)),
        sigma_inv=np.linalg.inv(sigma).reshape(shape + (2, 2)),
        sqrt_det=np.sqrt(det).reshape(shape),
        H=H.reshape(shape + (4,)),
        H_norm=hn.reshape(shape),
        J=J.reshape(shape + (4,)),
        omega=omega.reshape(shape + (2,)),
    )


def surface_calculus(grid, sigma, f):
    """Gradient and Laplace-Beltrami operator of ``f`` with respect to ``σ``.

    ``sigma`` has shape ``grid.shape + (2, 2)``. Returns ``(grad, grad_sq,
    lap)`` where ``grad[..., a] = σ^{ab} ∂_b f``.
    """
    sigma = np.asarray(sigma, dtype=float)
    det = sigma[..., 0, 0] * sigma[..., 1, 1] - sigma[..., 0, 1] * sigma[..., 1, 0]
    if np.any(det <= 0):
        raise GeometryError("degenerate induced metric")
    sinv = np.linalg.inv(sigma)
    sq = np.sqrt(det)
    df = np.stack([grid.d_theta(f, parity=1), grid.d_phi(f)], axis=-1)
    grad = np.einsum("...ab,...b->...a", sinv, df)
    grad_sq = np.einsum("...a,...a->...", grad, df)
    # sqrt(det σ) and ∂_θ f both flip sign on the reflected meridian
    flux_t = sq * grad[..., 0]
    flux_p = sq * grad[..., 1]
    lap = (grid.d_theta(flux_t, parity=1) + grid.d_phi(flux_p)) / sq
    return grad, grad_sq, lap


def integrate(grid, f, sqrt_det):
    """``∫ f dv`` over the surface with area density ``sqrt_det``."""
    return grid.integrate(f, sqrt_det)
