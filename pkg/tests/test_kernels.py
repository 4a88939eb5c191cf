import subprocess
import sys

import numpy as np
import pytest

from distillab import _kernels
from distillab._kernels import _pure


def _random_pairs(seed, n=50, c=9):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, c))
    b = rng.normal(size=(n, c))
    # sprinkle exact ties to exercise the tie handling
    a[::7, 0] = a[::7, 1]
    b[::5, 2] = b[::5, 3]
    return a, b


@pytest.mark.skipif(
    not _kernels.USING_EXTENSION, reason="compiled extension not available"
)
class TestExtensionParity:
    def test_signed_matches_pure(self):
        for seed in range(5):
            a, b = _random_pairs(seed)
            np.testing.assert_allclose(
                _kernels.kendall_signed_many(a, b),
                _pure.kendall_signed_many(a, b),
                atol=1e-12,
            )

    def test_paper_matches_pure(self):
        for seed in range(5):
            a, b = _random_pairs(seed)
            np.testing.assert_allclose(
                _kernels.kendall_paper_many(a, b),
                _pure.kendall_paper_many(a, b),
                atol=1e-12,
            )

    def test_two_class_edge(self):
        a = np.array([[1.0, 2.0]])
        b = np.array([[2.0, 1.0]])
        np.testing.assert_allclose(_kernels.kendall_signed_many(a, b), [-1.0])
        np.testing.assert_allclose(
            _kernels.kendall_signed_many(a, a), [1.0]
        )


def test_pure_mode_env_var_forces_fallback():
    code = (
        "import distillab._kernels as k; "
        "import sys; sys.exit(0 if not k.USING_EXTENSION else 1)"
    )
    proc = subprocess.run(
        [sys.executable, "-c", code],
        env={"DISTILLAB_PURE": "1", "PATH": "/usr/bin:/bin"},
        capture_output=True,
    )
    assert proc.returncode == 0, proc.stderr.decode()


def test_noncontiguous_input_accepted():
    a, b = _random_pairs(0)
    got = _kernels.kendall_signed_many(a[:, ::-1][:, ::-1], b)
    np.testing.assert_allclose(got, _kernels.kendall_signed_many(a, b))
