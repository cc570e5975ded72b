"""ADM energy-momentum of the boosted slice ``γ y0 - βγ y3 = 0`` and the
cross-checks relating it to the quasilocal limit.

Slice coordinates ``x = (y1, y2, y3')`` embed linearly as
``y = Φ x = (βγ x3, x1, x2, γ x3)``. The extrinsic curvature convention is

    p(X, Y) = ⟨∇_X e0, Y⟩,   e0 the future unit normal of the slice,

which makes ``p(ν, ν) - tr p = ⟨H, e0⟩`` for coordinate spheres with outward
normal ``ν``.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .embedding import tau_field
from .grid import SphereGrid
from .quasilocal import DEFAULT_RADII, extrapolate
from .spacetime import christoffel, schwarzschild_isotropic
from .surface import surface_calculus

__all__ = [
    "EXTRINSIC_CURVATURE_CONVENTION",
    "SliceData",
    "ADMResult",
    "boosted_slice_data",
    "adm_integrals",
    "adm_energy",
    "adm_momentum",
    "adm_energy_momentum",
    "linearity_residuals",
    "slice_frame",
    "mean_curvature_anchor",
    "normal_mean_curvature_deficit",
    "momentum_flux_identity",
    "connection_by_parts",
]

EXTRINSIC_CURVATURE_CONVENTION = (
    "p(X,Y) = <nabla_X e0, Y> with e0 the future unit normal of the slice; "
    "satisfies p(nu,nu) - tr p = <H, e0>"
)


class SliceData:
    """Induced 3-metric and extrinsic curvature of a boosted slice of
    ``metric``. All methods take slice points of shape ``(..., 3)``."""

    def __init__(self, metric, beta=0.0, gamma=None):
        beta = float(beta)
        if gamma is None:
            if not abs(beta) < 1:
                raise ValueError(f"|beta| must be < 1, got {beta}")
            gamma = 1.0 / math.sqrt(1.0 - beta ** 2)
        gamma = float(gamma)
        if not gamma > 0 or abs(gamma ** 2 * (1 - beta ** 2) - 1) > 1e-12:
            raise ValueError(f"inconsistent boost parameters beta={beta}, "
                             f"gamma={gamma}")
        self.metric4 = metric
        self.beta, self.gamma = beta, gamma
        bg = beta * gamma
        self.Phi = np.array([[0.0, 0.0, bg],
                             [1.0, 0.0, 0.0],
                             [0.0, 1.0, 0.0],
                             [0.0, 0.0, gamma]])
        # covector d(γ y0 - βγ y3)
        self.slice_covector = np.array([gamma, 0.0, 0.0, -bg])

    def embed(self, x):
        return np.einsum("mi,...i->...m", self.Phi, np.asarray(x, dtype=float))

    def metric(self, x):
        G = self.metric4.eval(self.embed(x))
        return np.einsum("mi,...mn,nj->...ij", self.Phi, G, self.Phi)

    def metric_deriv(self, x):
        """``dg[..., k, i, j] = ∂_k g_ij``."""
        dG = self.metric4.deriv(self.embed(x))
        return np.einsum("lk,...lmn,mi,nj->...kij", self.Phi, dG, self.Phi,
                         self.Phi)

    def normal(self, x):
        """Future unit normal ``e0`` (contravariant 4-vector) and its
        lowered form."""
        G = self.metric4.eval(self.embed(x))
        Ginv = np.linalg.inv(G)
        n = self.slice_covector
        norm = np.sqrt(-np.einsum("...mn,m,n->...", Ginv, n, n))
        e0_low = -n / norm[..., None]
        e0 = np.einsum("...mn,...n->...m", Ginv, e0_low)
        return e0, e0_low

    def extrinsic(self, x):
        """``p_ij = ⟨∇_{∂i} e0, ∂j⟩ = -e0_ν Γ^ν_ab Φ^a_i Φ^b_j``."""
        y = self.embed(x)
        gam = christoffel(self.metric4, y)
        _, e0_low = self.normal(x)
        return -np.einsum("...n,...nab,ai,bj->...ij", e0_low, gam, self.Phi,
                          self.Phi)


def boosted_slice_data(M, beta, gamma=None):
    return SliceData(schwarzschild_isotropic(M), beta, gamma)


def _sphere(grid, r):
    th, ph = grid.mesh()
    nu = np.stack([np.sin(th) * np.sin(ph), np.sin(th) * np.cos(ph),
                   np.cos(th)], -1)
    return r * nu, nu, r ** 2 * np.sin(th)


def adm_integrals(data, r, grid):
    """Flux integrals ``(E_r, P_r)`` over the coordinate sphere of radius ``r``
    (flat normal and area element)."""
    x, nu, area = _sphere(grid, r)
    dg = data.metric_deriv(x)
    flux = (np.einsum("...jij->...i", dg) - np.einsum("...ijj->...i", dg))
    E = grid.integrate(np.einsum("...i,...i->...", flux, nu), area) / (16 * np.pi)
    p = data.extrinsic(x)
    trp = np.einsum("...ij,...ij->...", np.linalg.inv(data.metric(x)), p)
    P = np.empty(3)
    for k in range(3):
        dens = 2.0 * (np.einsum("...i,...i->...", p[..., :, k], nu)
                      - trp * nu[..., k])
        P[k] = grid.integrate(dens, area) / (16 * np.pi)
    return E, P


@dataclass(frozen=True)
class ADMResult:
    E: float
    P: tuple
    radii: tuple
    E_r: tuple
    P_r: tuple
    fits: dict = field(default_factory=dict, compare=False)
    convention: str = EXTRINSIC_CURVATURE_CONVENTION

    @property
    def future_timelike(self):
        return self.E >= 0 and self.E ** 2 >= float(np.dot(self.P, self.P))


def adm_energy_momentum(data, radii=DEFAULT_RADII, grid=None, rtol=1e-6):
    grid = grid or SphereGrid(64, 4)
    rows = [adm_integrals(data, r, grid) for r in radii]
    E_r = [row[0] for row in rows]
    P_r = np.array([row[1] for row in rows])
    e_fit = extrapolate(radii, E_r, rtol=rtol)
    scale = max(abs(e_fit.limit), float(np.max(np.abs(P_r))), 1e-300)
    fits = {"E": e_fit}
    for k in range(3):
        fits[f"P{k + 1}"] = extrapolate(radii, P_r[:, k], rtol=rtol, scale=scale)
    P = tuple(fits[f"P{k + 1}"].limit for k in range(3))
    return ADMResult(e_fit.limit, P, tuple(radii), tuple(E_r),
                     tuple(map(tuple, P_r)), fits)


def adm_energy(data, radii=DEFAULT_RADII, grid=None):
    return adm_energy_momentum(data, radii, grid).fits["E"]


def adm_momentum(data, radii=DEFAULT_RADII, grid=None):
    res = adm_energy_momentum(data, radii, grid)
    return [res.fits[f"P{k + 1}"] for k in range(3)]


def linearity_residuals(adm, limits):
    """``{a: |limit(a) - (sqrt(1+|a|²) E + a·P)|}`` for quasilocal limits
    keyed by observer 3-vectors."""
    out = {}
    for a, value in limits.items():
        av = np.asarray(a, dtype=float)
        pred = math.sqrt(1.0 + av @ av) * adm.E + float(av @ np.asarray(adm.P))
        out[tuple(av)] = abs(value - pred)
    return out


def slice_frame(data, geometry):
    """Slice quantities at the nodes of a boosted-sphere geometry.

    Returns a dict with slice points ``x``, slice metric ``g``, extrinsic
    curvature ``p``, the g-unit outward normal ``nu`` (slice components),
    its spacetime push-forward ``nu4`` and the future normal ``e0``.
    """
    x = geometry.chart.slice_coordinates(geometry.theta, geometry.phi)
    g = data.metric(x)
    ginv = np.linalg.inv(g)
    nu_low = x / np.linalg.norm(x, axis=-1, keepdims=True)
    nu = np.einsum("...ij,...j->...i", ginv, nu_low)
    nu = nu / np.sqrt(np.einsum("...i,...ij,...j->...", nu, g, nu))[..., None]
    e0, _ = data.normal(x)
    return dict(x=x, g=g, ginv=ginv, p=data.extrinsic(x), nu=nu,
                nu4=data.embed(nu), e0=e0)


def mean_curvature_anchor(data, geometry):
    """Return ``(p(ν,ν) - tr p, ⟨H, e0⟩)`` node fields."""
    f = slice_frame(data, geometry)
    p, nu = f["p"], f["nu"]
    lhs = (np.einsum("...i,...ij,...j->...", nu, p, nu)
           - np.einsum("...ij,...ij->...", f["ginv"], p))
    return lhs, geometry.inner(geometry.H, f["e0"])


def normal_mean_curvature_deficit(data, geometry, embedding):
    """``1/8π ∫ (|H0| - |⟨H, ν⟩|) dv``."""
    f = slice_frame(data, geometry)
    h_nu = np.abs(geometry.inner(geometry.H, f["nu4"]))
    return geometry.integrate(embedding.H0[:, None] - h_nu) / (8 * np.pi)


def momentum_flux_identity(data, geometry, a):
    """``1/8π ∫ p(a^⊤, ν) + ⟨H, e0⟩ g(a, ν) dv`` for the constant slice vector
    ``a``; tends to ``a·P`` at infinity."""
    f = slice_frame(data, geometry)
    a = np.asarray(a, dtype=float)
    g, p, nu = f["g"], f["p"], f["nu"]
    a_nu = np.einsum("i,...ij,...j->...", a, g, nu)
    a_tan = a - a_nu[..., None] * nu
    h_e0 = geometry.inner(geometry.H, f["e0"])
    dens = np.einsum("...i,...ij,...j->...", a_tan, p, nu) + h_e0 * a_nu
    return geometry.integrate(dens) / (8 * np.pi)


def connection_by_parts(data, geometry, embedding, observer):
    """Both sides of the integration-by-parts identity

        1/8π ∫ ⟨∇_{∇τ} J/|H|, H/|H|⟩
            = 1/8π ∫ -p(∇τ, ν) + Δτ asinh(⟨H, e0⟩/|H|).

    Returns ``(lhs, rhs)``.
    """
    f = slice_frame(data, geometry)
    tau = tau_field(embedding, observer.a)
    grad, _, lap = surface_calculus(geometry.grid, geometry.sigma, tau)
    lhs = geometry.integrate(geometry.connection(grad)) / (8 * np.pi)
    r = geometry.chart.r0
    th, ph = geometry.theta, geometry.phi
    dx = np.stack([
        r * np.stack([np.cos(th) * np.sin(ph), np.cos(th) * np.cos(ph),
                      -np.sin(th)], -1),
        r * np.stack([np.sin(th) * np.cos(ph), -np.sin(th) * np.sin(ph),
                      0 * th], -1),
    ], -2)
    W = np.einsum("...a,...ai->...i", grad, dx)
    psi = np.arcsinh(geometry.inner(geometry.H, f["e0"]) / geometry.H_norm)
    dens = -np.einsum("...i,...ij,...j->...", W, f["p"], f["nu"]) + lap * psi
    rhs = geometry.integrate(dens) / (8 * np.pi)
    return lhs, rhs
