"""Quasilocal energy of a surface with respect to an observer, its limit at
spatial infinity, and the limiting energy-momentum four-vector.

For an observer ``T0 = (sqrt(1+|a|²), a)`` and a reference embedding ``X`` in
``R³``, the time function is ``τ = -⟨X, T0⟩`` and the finite-radius energy is

    E = 1/8π ∫ sqrt(|H0|²(1+|∇τ|²) + (Δτ)²) - sqrt(|H|²(1+|∇τ|²) + (Δτ)²)
              - Δτ [asinh(Δτ/(sqrt(1+|∇τ|²)|H0|)) - asinh(Δτ/(sqrt(1+|∇τ|²)|H|))]
              + ⟨∇^N_{∇τ} J/|H|, H/|H|⟩  dv.

The reference-side connection term vanishes because ``J0/|H0|`` is the
constant vector ``(1, 0, 0, 0)`` for embeddings in ``R³``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np

from .embedding import embed_geometry, tau_field
from .grid import SphereGrid
from .surface import boosted_sphere_chart, compute_geometry, surface_calculus

__all__ = [
    "NonConvergenceError",
    "RegimeError",
    "Observer",
    "EnergyMomentum",
    "Extrapolation",
    "SurfaceFamily",
    "integrand_terms",
    "qle_finite",
    "sqrt_difference",
    "qle_limit_integrand",
    "mean_curvature_deficit",
    "momentum_integrals",
    "extrapolate",
    "energy_momentum",
    "minimize_over_observers",
    "DEFAULT_RADII",
    "ENERGY_FLOOR",
]

DEFAULT_RADII = (250.0, 500.0, 1000.0, 2000.0)
# energies at or below this (geometric units) are treated as zero
ENERGY_FLOOR = 1e-9


class NonConvergenceError(ArithmeticError):
    pass


class RegimeError(ArithmeticError):
    """``|H|/|H0|`` outside the asymptotic regime guard."""


@dataclass(frozen=True)
class Observer:
    a: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        a = tuple(float(x) for x in self.a)
        if len(a) != 3 or not all(math.isfinite(x) for x in a):
            raise ValueError(f"observer needs a finite 3-vector, got {self.a!r}")
        object.__setattr__(self, "a", a)

    @property
    def T0(self):
        a = np.array(self.a)
        return np.concatenate([[math.sqrt(1.0 + a @ a)], a])


@dataclass(frozen=True)
class Extrapolation:
    """Least-squares fit ``c0 + c1/r + c2/r²`` over a radius ladder."""

    radii: tuple
    values: tuple
    coeffs: tuple
    residual: float
    tolerance: float

    @property
    def limit(self):
        return self.coeffs[0]

    @property
    def converged(self):
        return self.residual <= self.tolerance


@dataclass(frozen=True)
class EnergyMomentum:
    e: float
    p: tuple
    m: float = float("nan")
    a_min: tuple = (float("nan"),) * 3
    fits: dict = field(default_factory=dict, compare=False)

    @property
    def vector(self):
        return np.array([self.e, *self.p])


def integrand_terms(geometry, embedding, observer):
    """Node fields entering the energy: ``tau``, ``grad`` (contravariant),
    ``grad_sq``, ``lap``, ``H0``, ``H`` and the spacetime connection term."""
    tau = tau_field(embedding, observer.a)
    grad, grad_sq, lap = surface_calculus(geometry.grid, geometry.sigma, tau)
    H0 = embedding.H0[:, None] * np.ones(geometry.grid.nphi)
    return dict(
        tau=tau, grad=grad, grad_sq=grad_sq, lap=lap, H0=H0,
        H=geometry.H_norm, connection=geometry.connection(grad),
    )


def sqrt_difference(H0, H, grad_sq, lap):
    """``sqrt(A0) - sqrt(A)`` with ``A = |H|²(1+|∇τ|²) + (Δτ)²``, evaluated
    in the rationalized form

        (|H0| - |H|)(|H0| + |H|)(1+|∇τ|²) / (sqrt(A0) + sqrt(A))

    which avoids the cancellation between two nearly equal roots.
    """
    w = 1.0 + grad_sq
    root0 = np.sqrt(H0 ** 2 * w + lap ** 2)
    root = np.sqrt(H ** 2 * w + lap ** 2)
    return (H0 - H) * (H0 + H) * w / (root0 + root)


def _finite_density(t):
    H0, H, lap = t["H0"], t["H"], t["lap"]
    root_w = np.sqrt(1.0 + t["grad_sq"])
    return (sqrt_difference(H0, H, t["grad_sq"], lap)
            - lap * (np.arcsinh(lap / (root_w * H0))
                     - np.arcsinh(lap / (root_w * H)))
            + t["connection"])


def qle_finite(geometry, embedding, observer):
    """Quasilocal energy ``E(Σ, X, T0)`` at finite radius."""
    t = integrand_terms(geometry, embedding, observer)
    if np.any(t["H"] <= 0) or np.any(t["H0"] <= 0):
        raise RegimeError("mean curvature must be positive at every node")
    return geometry.integrate(_finite_density(t)) / (8.0 * np.pi)


def qle_limit_integrand(geometry, embedding, observer, guard=(0.5, 2.0)):
    """Asymptotic form ``1/8π ∫ sqrt(1+|a|²)(|H0| - |H|) + ⟨∇_{∇τ}J/|H|, H/|H|⟩``."""
    t = integrand_terms(geometry, embedding, observer)
    ratio = t["H"] / t["H0"]
    if np.any(ratio <= guard[0]) or np.any(ratio >= guard[1]):
        raise RegimeError(f"|H|/|H0| outside {guard}: range "
                          f"[{ratio.min():.4g}, {ratio.max():.4g}]")
    lapse = observer.T0[0]
    dens = lapse * (t["H0"] - t["H"]) + t["connection"]
    return geometry.integrate(dens) / (8.0 * np.pi)


def mean_curvature_deficit(geometry, embedding):
    """``1/8π ∫ (|H0| - |H|) dv``."""
    H0 = embedding.H0[:, None]
    return geometry.integrate(H0 - geometry.H_norm) / (8.0 * np.pi)


def coordinate_gradients(geometry, embedding):
    """Contravariant gradients ``∇X^i`` of the embedding coordinates,
    shape ``(3,) + grid.shape + (2,)``."""
    phi = geometry.grid.phi[None, :]
    u, du, dv = (x[:, None] for x in (embedding.u, embedding.du, embedding.dv))
    zero = 0.0 * phi * u
    dX = np.stack([
        np.stack([du * np.sin(phi), u * np.cos(phi)], -1),
        np.stack([du * np.cos(phi), -u * np.sin(phi)], -1),
        np.stack([dv + zero, zero], -1),
    ])
    return np.einsum("...ab,i...b->i...a", geometry.sigma_inv, dX)


def momentum_integrals(geometry, embedding):
    """``p_i = 1/8π ∫ ⟨∇^N_{-∇X^i} J/|H|, H/|H|⟩ dv`` at this radius."""
    grads = coordinate_gradients(geometry, embedding)
    return np.array([geometry.integrate(geometry.connection(-g))
                     for g in grads]) / (8.0 * np.pi)


def extrapolate(radii, values, rtol=1e-6, atol=1e-12, scale=None):
    """Fit ``c0 + c1/r + c2/r²`` and return an :class:`Extrapolation`.

    The fit is flagged non-converged when the largest residual exceeds
    ``rtol * scale + atol``; ``scale`` defaults to ``max(|c0|, max|values|)``.
    """
    r = np.asarray(radii, dtype=float)
    y = np.asarray(values, dtype=float)
    if r.ndim != 1 or r.size < 3 or r.shape != y.shape:
        raise ValueError("need at least 3 radii with one value each")
    if np.any(r <= 0) or np.any(np.diff(r) <= 0):
        raise ValueError("radii must be positive and strictly increasing")
    A = np.stack([np.ones_like(r), 1.0 / r, 1.0 / r ** 2], -1)
    # column scaling keeps the normal equations well conditioned
    colscale = np.max(np.abs(A), axis=0)
    coef, _, rank, _ = np.linalg.lstsq(A / colscale, y, rcond=None)
    if rank < 3:
        raise np.linalg.LinAlgError("rank-deficient extrapolation fit")
    coef = coef / colscale
    resid = float(np.max(np.abs(A @ coef - y)))
    if scale is None:
        scale = max(abs(coef[0]), float(np.max(np.abs(y))))
    return Extrapolation(tuple(r), tuple(y), tuple(float(c) for c in coef),
                         resid, rtol * scale + atol)


def minimize_over_observers(e, p):
    """Minimize ``e sqrt(1+|a|²) + p·a`` over ``a``.

    Returns ``(m, a_min)`` with ``m = sqrt(e² - |p|²)`` and ``a_min = -p/m``.
    """
    p = np.asarray(p, dtype=float)
    pp = float(p @ p)
    if not e > math.sqrt(pp):
        raise ValueError("energy-momentum not future-timelike: "
                         f"e={e!r}, |p|={math.sqrt(pp)!r}")
    m = math.sqrt(e * e - pp)
    return m, -p / m + 0.0


class SurfaceFamily:
    """Boosted coordinate spheres ``Σ_r`` in ``metric`` with their reference
    embeddings, evaluated on a fixed grid."""

    def __init__(self, metric, beta=0.0, order=64, nphi=4):
        self.metric = metric
        self.beta = float(beta)
        if not abs(self.beta) < 1:
            raise ValueError(f"|beta| must be < 1, got {beta}")
        self.gamma = 1.0 / math.sqrt(1.0 - self.beta ** 2)
        self.grid = SphereGrid(order, nphi)

    def chart(self, r0):
        return boosted_sphere_chart(self.beta, self.gamma, r0)

    def at(self, r0):
        """Return ``(geometry, embedding)`` at radius ``r0``."""
        geo = compute_geometry(self.chart(r0), self.metric, self.grid)
        return geo, embed_geometry(geo)

    def map(self, fn, radii, workers=1):
        """``[fn(*self.at(r)) for r in radii]``, optionally on a thread pool."""
        job = lambda r: fn(*self.at(r))
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                return list(pool.map(job, radii))
        return [job(r) for r in radii]


def energy_momentum(family, radii=DEFAULT_RADII, rtol=1e-6, strict=True,
                    workers=1, energy_floor=ENERGY_FLOOR):
    """Extrapolated ``(e, p)`` and the minimizing observer.

    ``e`` and ``p`` fits share the energy scale so that vanishing momentum
    components are judged against ``|e|``. When ``e`` does not exceed
    ``energy_floor`` (or its fit tolerance) no minimizer is reported and
    ``m``, ``a_min`` are NaN.
    """
    rows = family.map(lambda g, emb: (mean_curvature_deficit(g, emb),
                                      momentum_integrals(g, emb)),
                      radii, workers)
    e_vals = [row[0] for row in rows]
    p_vals = np.array([row[1] for row in rows])
    e_fit = extrapolate(radii, e_vals, rtol=rtol)
    scale = max(abs(e_fit.limit), float(np.max(np.abs(p_vals))), 1e-300)
    p_fits = [extrapolate(radii, p_vals[:, i], rtol=rtol, scale=scale)
              for i in range(3)]
    fits = {"e": e_fit, "p1": p_fits[0], "p2": p_fits[1], "p3": p_fits[2]}
    bad = [k for k, f in fits.items() if not f.converged]
    if bad and strict:
        raise NonConvergenceError(f"non-convergent ladder for {', '.join(bad)}")
    e = e_fit.limit
    p = tuple(f.limit for f in p_fits)
    m, a_min = float("nan"), (float("nan"),) * 3
    # a four-vector indistinguishable from zero has no minimizing observer
    if e > max(energy_floor, e_fit.tolerance):
        try:
            m, a_min = minimize_over_observers(e, p)
        except ValueError:
            pass
    return EnergyMomentum(e, p, m, tuple(float(x) for x in a_min), fits)
