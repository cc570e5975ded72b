"""Pure numpy implementation of the per-node geometry kernels.

Every function takes flat node arrays (leading axis = node index) and is a
drop-in replacement for the compiled ``qlm._kernels`` module.

Status codes returned by :func:`extrinsic`:

    0  ok
    1  induced metric not positive definite
    2  mean curvature vector not spacelike
    3  degenerate normal bundle (no timelike normal orthogonal to H)
"""

import numpy as np

STATUS_OK = 0
STATUS_SIGMA = 1
STATUS_SPACELIKE = 2
STATUS_NORMAL = 3


def christoffel(G, dG):
    """Return ``(Ginv, Gamma)`` with ``Gamma[n, c, a, b] = Γ^c_ab``.

    ``dG[n, c, a, b]`` holds ``∂_c G_ab``.
    """
    G = np.ascontiguousarray(G, dtype=float)
    dG = np.ascontiguousarray(dG, dtype=float)
    Ginv = np.linalg.inv(G)
    # lowered symbols Γ_dab = ½(∂_a G_db + ∂_b G_da − ∂_d G_ab)
    low = 0.5 * (dG.transpose(0, 2, 1, 3) + dG.transpose(0, 2, 3, 1) - dG)
    gam = np.einsum("ncd,ndab->ncab", Ginv, low)
    # remove round-off asymmetry in the lower pair
    gam = 0.5 * (gam + gam.transpose(0, 1, 3, 2))
    return Ginv, gam


def extrinsic(G, Ginv, gam, Yd, Ydd):
    """Induced metric, mean curvature vector and dual normal at each node.

    ``Yd[n, a, :]`` are the two tangent vectors ``∂_a Y`` and
    ``Ydd[n, a, b, :]`` the second parameter derivatives. Returns
    ``(sigma, H, J, status)``.
    """
    n = G.shape[0]
    status = np.zeros(n, dtype=np.int32)
    sigma = np.einsum("nai,nij,nbj->nab", Yd, G, Yd)
    det = sigma[:, 0, 0] * sigma[:, 1, 1] - sigma[:, 0, 1] * sigma[:, 1, 0]
    bad = (sigma[:, 0, 0] <= 0) | (det <= 0)
    status[bad] = STATUS_SIGMA
    det = np.where(bad, 1.0, det)
    sinv = np.empty_like(sigma)
    sinv[:, 0, 0] = sigma[:, 1, 1] / det
    sinv[:, 1, 1] = sigma[:, 0, 0] / det
    sinv[:, 0, 1] = -sigma[:, 0, 1] / det
    sinv[:, 1, 0] = -sigma[:, 1, 0] / det

    second = Ydd + np.einsum("ncij,nai,nbj->nabc", gam, Yd, Yd)
    hraw = np.einsum("nab,nabc->nc", sinv, second)
    H = hraw - _tangential(G, sinv, Yd, hraw)
    HH = np.einsum("ni,nij,nj->n", H, G, H)
    bad = (status == 0) & (HH <= 0)
    status[bad] = STATUS_SPACELIKE

    # future-pointing gradient of y^0, reduced to the normal plane
    V = -Ginv[:, :, 0]
    Vn = V - _tangential(G, sinv, Yd, V)
    safe_HH = np.where(HH > 0, HH, 1.0)
    VJ = Vn - (np.einsum("ni,nij,nj->n", Vn, G, H) / safe_HH)[:, None] * H
    nJ = -np.einsum("ni,nij,nj->n", VJ, G, VJ)
    bad = (status == 0) & (nJ <= 0)
    status[bad] = STATUS_NORMAL
    scale = np.sqrt(np.where(HH > 0, HH, 0.0) / np.where(nJ > 0, nJ, 1.0))
    J = scale[:, None] * VJ
    return sigma, H, J, status


def connection(G, gam, Yd, E, dE, H):
    """One-form ``ω_a = ⟨∇_{∂_a Y} E, H/|H|⟩`` with ``E = J/|H|``.

    ``dE[n, a, :]`` are parameter derivatives of the components of ``E``.
    """
    cov = dE + np.einsum("ncij,nai,nj->nac", gam, Yd, E)
    Hn = np.sqrt(np.einsum("ni,nij,nj->n", H, G, H))
    return np.einsum("nac,ncd,nd->na", cov, G, H) / Hn[:, None]


def _tangential(G, sinv, Yd, V):
    proj = np.einsum("nbi,nij,nj->nb", Yd, G, V)
    return np.einsum("nai,nab,nb->ni", Yd, sinv, proj)
