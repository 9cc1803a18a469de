"""The numba kernels and the pure-numpy fallback must agree bit for bit."""

import json
import os
import subprocess
import sys

import pytest

SCRIPT = """
import json
from shellvar import Shell, superball, two_block, volume
from shellvar._jit import USE_NUMBA
from shellvar.counting import count_dilate, shell_counts
from shellvar.quadrature import overlap_volume
from shellvar.spectral import ft_indicator
import numpy as np
sb, tb = superball(4, 3), two_block()
out = {
    "numba": USE_NUMBA,
    "volume": volume(sb, rtol=1e-6),
    "ft": ft_indicator(tb, [1.0, 2.0, 0.5], tol=1e-6).real,
    "overlap": overlap_volume(sb, 1.0, 0.8, np.array([0.5, 0.25, 0.0]), 1e-6)[0],
    "counts": [count_dilate(tb, 7.7, [0.1, -0.2, 0.3]), count_dilate(sb, 3.0)],
    "shell": shell_counts(sb, Shell(5.0, 0.3), 1, 300).tolist(),
}
print(json.dumps(out))
"""


def _run(backend):
    env = dict(os.environ, SHELLVAR_BACKEND=backend)
    res = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True,
                         timeout=900)
    assert res.returncode == 0, res.stderr
    return json.loads(res.stdout.strip().splitlines()[-1])


@pytest.fixture(scope="module")
def both():
    return _run("numba"), _run("numpy")


def test_flag_selects_backend(both):
    fast, slow = both
    assert fast["numba"] is True and slow["numba"] is False


@pytest.mark.parametrize("key", ["volume", "ft", "overlap", "counts", "shell"])
def test_backends_identical(both, key):
    fast, slow = both
    assert fast[key] == slow[key]
