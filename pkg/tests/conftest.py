import os
import sys
from fractions import Fraction

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

GRID_SIZES = (8, 12, 16, 30, 64)


@st.composite
def grid_arcs(draw, d=None, max_arcs=5):
    """(d, [(start, length), ...]) with every endpoint a multiple of 1/d."""
    d = d or draw(st.sampled_from(GRID_SIZES))
    n = draw(st.integers(0, max_arcs))
    arcs = []
    for _ in range(n):
        start = Fraction(draw(st.integers(0, d - 1)), d)
        length = Fraction(draw(st.integers(1, d)), d)
        arcs.append((start, length))
    return d, arcs


@st.composite
def grid_arc_pair(draw):
    d = draw(st.sampled_from(GRID_SIZES))
    _, a = draw(grid_arcs(d=d))
    _, b = draw(grid_arcs(d=d))
    return d, a, b


@st.composite
def dyadic_arcs(draw, k_max=6, max_arcs=4):
    k = draw(st.integers(1, k_max))
    _, arcs = draw(grid_arcs(d=2 ** k, max_arcs=max_arcs))
    return k, arcs


rationals01 = st.builds(Fraction, st.integers(0, 10 ** 6), st.integers(1, 10 ** 6)).map(lambda f: f % 1)
