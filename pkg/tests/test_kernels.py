import subprocess
import sys

import numpy as np
import pytest

from bolzalab import hyperbolic as hyp
from bolzalab import kernels


def start_frames(n, seed=0):
    z, theta = hyp.sample_liouville_arrays(n, np.random.default_rng(seed))
    return hyp.su_from_phase(z, theta)


def test_numpy_kernel_matches_direct_flow():
    a, b = start_frames(16)
    z, theta = kernels.geodesic_trajectories(a, b, 0.05, 100, backend="numpy")
    za, ta = hyp.phase_from_su(*hyp.reduce_frames(*hyp.flow_arrays(a, b, 5.0)))
    assert np.max(np.abs(z[:, -1] - za)) < 1e-9
    assert np.max(np.abs(np.angle(np.exp(1j * (theta[:, -1] - ta))))) < 1e-9


def test_trajectories_stay_in_octagon():
    a, b = start_frames(8, seed=2)
    z, theta = kernels.geodesic_trajectories(a, b, 0.05, 400, backend="numpy")
    assert z.shape == (8, 401)
    assert np.all(hyp.in_octagon(z.ravel(), tol=1e-9))
    assert np.all((theta >= 0) & (theta < 2 * np.pi))


@pytest.mark.skipif(not kernels.HAVE_COMPILED, reason="compiled kernel not built")
def test_compiled_matches_numpy_on_short_horizon():
    a, b = start_frames(32, seed=1)
    zn, tn = kernels.geodesic_trajectories(a, b, 0.05, 200, backend="numpy")
    zc, tc = kernels.geodesic_trajectories(a, b, 0.05, 200, backend="cython")
    assert np.max(np.abs(zn - zc)) < 1e-9
    assert np.max(np.abs(np.angle(np.exp(1j * (tn - tc))))) < 1e-9


def test_fallback_selected_by_environment():
    code = "import bolzalab.kernels as k; print(k.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env={"BOLZALAB_PURE_PYTHON": "1", "PATH": ""},
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_unknown_backend_without_extension(monkeypatch):
    monkeypatch.setattr(kernels, "_trajkernel", None)
    a, b = start_frames(2)
    with pytest.raises(RuntimeError):
        kernels.geodesic_trajectories(a, b, 0.05, 10, backend="cython")
