import pytest

from lqmfg.model import Coefficient, ModelParams, TimeGrid, Variant


def make_params(**overrides) -> ModelParams:
    """Benchmark instance; override any field."""
    fields = dict(
        a=-0.5, abar=0.3, b=1.0, sigma=0.2,
        q=Coefficient.constant(1.0), qbar=Coefficient.constant(0.5),
        r=Coefficient.constant(1.0), s=Coefficient.constant(1.0),
        qT=1.0, qbarT=0.5, T=1.0, x0=1.0, m0=1.0,
        c=0.0, theta=0.0, variant=Variant.RISK_NEUTRAL,
    )
    for key, val in overrides.items():
        if key in ("q", "qbar", "r", "s") and not isinstance(val, Coefficient):
            val = Coefficient.constant(val)
        fields[key] = val
    return ModelParams(**fields)


@pytest.fixture
def bench():
    return make_params()


@pytest.fixture
def grid():
    return TimeGrid(T=1.0, n_steps=1000)
