import hypothesis
import numpy as np
import pytest

from qosched.arrivals import AimdSourceSpec, BurstySourceSpec
from qosched.model import ChannelModel, FlowConfig, ScenarioSpec

hypothesis.settings.register_profile("ci", deadline=None, max_examples=100)
hypothesis.settings.load_profile("ci")


def make_flow(fid=0, alpha=0.5, lam=10.0, eta=1, nu=300, v=1000.0, **kw):
    return FlowConfig(
        id=fid, alpha=alpha, source=BurstySourceSpec(eta, lam, nu), v_param=v, **kw
    )


def make_aimd_flow(fid=0, alpha=0.5, v=1000.0, **kw):
    return FlowConfig(id=fid, alpha=alpha, source=AimdSourceSpec(), v_param=v, **kw)


def make_spec(flows, policy="pi_hat", horizon=1000, seed=0, s=50, **kw):
    return ScenarioSpec(
        flows=tuple(flows),
        channel=ChannelModel.constant(s),
        policy=policy,
        horizon=horizon,
        seed=seed,
        **kw,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
