import os
import subprocess
import sys

import numpy as np
import pytest

from qlm import kernels
from qlm.spacetime import schwarzschild_isotropic
from qlm.surface import boosted_sphere_chart

try:
    compiled = kernels.get_backend("compiled")
except ImportError:  # extension not built
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None, reason="extension not built")


def inputs(n=50, r0=30.0):
    rng = np.random.default_rng(3)
    chart = boosted_sphere_chart(0.6, 1.25, r0)
    th = rng.uniform(0.1, 3.0, n)
    ph = rng.uniform(0, 2 * np.pi, n)
    Y, Yd, Ydd = chart.evaluate(th, ph)
    m = schwarzschild_isotropic(1.0)
    return m.eval(Y), m.deriv(Y), Yd, Ydd, rng


@needs_compiled
def test_backends_agree():
    G, dG, Yd, Ydd, rng = inputs()
    py = kernels.get_backend("python")
    out = {}
    for name, mod in (("py", py), ("cy", compiled)):
        Ginv, gam = mod.christoffel(G, dG)
        sigma, H, J, status = mod.extrinsic(G, Ginv, gam, Yd, Ydd)
        E = J / np.sqrt(np.einsum("ni,nij,nj->n", H, G, H))[:, None]
        dE = np.stack([E * 0.1, E * -0.3], 1)
        omega = mod.connection(G, gam, Yd, E, dE, H)
        out[name] = (Ginv, gam, sigma, H, J, status, omega)
    for a, b in zip(out["py"], out["cy"]):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14 * np.max(np.abs(a)))


@pytest.mark.parametrize("backend", ["python", "compiled"])
def test_status_codes(backend):
    if backend == "compiled" and compiled is None:
        pytest.skip("extension not built")
    mod = kernels.get_backend(backend)
    G, dG, Yd, Ydd, _ = inputs(4)
    Ginv, gam = mod.christoffel(G, dG)
    Yd = Yd.copy()
    Yd[1, 1] = Yd[1, 0]  # degenerate tangent plane at node 1
    *_, status = mod.extrinsic(G, Ginv, gam, Yd, Ydd)
    assert status[0] == kernels.STATUS_OK
    assert status[1] == kernels.STATUS_SIGMA


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")
    assert kernels.get_backend() is not None


def test_pure_python_switch():
    env = dict(os.environ, QLM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from qlm import kernels; print(kernels.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"


def test_pure_python_run_matches(boosted_500):
    code = ("from qlm.quasilocal import SurfaceFamily, Observer, qle_finite\n"
            "from qlm.spacetime import schwarzschild_isotropic\n"
            "f = SurfaceFamily(schwarzschild_isotropic(1.0), 0.6, 64, 4)\n"
            "print(repr(qle_finite(*f.at(500.0), Observer((0, 0, 1)))))\n")
    env = dict(os.environ, QLM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env=env, check=True)
    from qlm.quasilocal import Observer, qle_finite
    here = qle_finite(*boosted_500, Observer((0, 0, 1)))
    assert float(out.stdout) == pytest.approx(here, rel=1e-12)
