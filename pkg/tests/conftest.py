import hypothesis.strategies as st
import pytest

from mcsmodel.model import INTEL_XEON_6230, MachineConstants


@pytest.fixture
def intel() -> MachineConstants:
    return INTEL_XEON_6230


@st.composite
def constants_strategy(draw) -> MachineConstants:
    """Random valid machine constants (r_invalid >= max(w, r_modified), x >= w)."""
    w = draw(st.floats(0.5, 200.0, allow_nan=False, allow_infinity=False))
    r_m = draw(st.floats(0.1, 200.0, allow_nan=False, allow_infinity=False))
    r_i = draw(st.floats(max(w, r_m), 800.0, allow_nan=False, allow_infinity=False))
    x = draw(st.floats(w, 800.0, allow_nan=False, allow_infinity=False))
    alpha = draw(st.floats(1e-2, 1e8, allow_nan=False, allow_infinity=False))
    return MachineConstants(alpha=alpha, w=w, r_invalid=r_i, r_modified=r_m, x_contended=x)
