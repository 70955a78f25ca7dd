import numpy as np
import pytest
from hypothesis import settings, strategies as st

from threelevel import ThreeLevelAtom, Spectra, per_frequency

settings.register_profile("default", max_examples=100, deadline=None)
settings.load_profile("default")


def random_atom(rng, kmin=0.2, kmax=3.0):
    while True:
        e = np.sort(rng.uniform(-2.0, 5.0, 3))
        w21, w32 = e[1] - e[0], e[2] - e[1]
        if min(w21, w32) > 0.05 and abs(w21 - w32) > 1e-3:
            break
    k = rng.uniform(kmin, kmax, 3)
    return ThreeLevelAtom(tuple(e), {"21": k[0], "31": k[1], "32": k[2]})


def shared_per_frequency(atom, b21, b31, b32):
    w = atom.bohr
    return Spectra.shared(per_frequency({w.w21: b21, w.w31: b31, w.w32: b32}))


@pytest.fixture
def rng():
    return np.random.default_rng(20010424)


@pytest.fixture
def atom013():
    return ThreeLevelAtom((0.0, 1.0, 3.0), {"21": 1.0, "31": 1.0, "32": 1.0})


positive = st.floats(0.05, 5.0, allow_nan=False, allow_infinity=False)


@st.composite
def rate_sets(draw):
    from threelevel import RateSet
    vals = [draw(st.floats(0.1, 10.0)) for _ in range(6)]
    return RateSet(*vals)
