import json

import numpy as np
import pytest

from conftest import random_model
from spinpair.model import E01, E10, G00, ElectronicState, PairSiteModel, Parity
from spinpair.presets import preset_model


def test_state_parsing():
    assert ElectronicState.parse("10") is E10
    assert ElectronicState.parse("E01") is E01
    assert ElectronicState.parse("G00") is G00
    with pytest.raises(ValueError):
        ElectronicState.parse("22")


def test_dict_roundtrip_through_json():
    m = random_model(np.random.default_rng(0), parity="odd")
    back = PairSiteModel.from_dict(json.loads(json.dumps(m.to_dict())))
    assert back.fingerprint() == m.fingerprint()
    assert back.parity is Parity.ODD
    for s in m.states:
        assert np.array_equal(back.tensors(s).J, m.tensors(s).J)


def test_requires_ground_state():
    with pytest.raises(ValueError):
        PairSiteModel(states={E10: dict(g1=np.eye(3), g2=np.eye(3), J=np.eye(3))})


def test_functional_updates_leave_original():
    m = preset_model("siteB-ising")
    m2 = m.with_dvector(G00, [0, 0, 0.15])
    assert np.allclose(m2.dvector(G00), [0, 0, 0.15])
    assert np.allclose(m.dvector(G00), 0)
    assert m2.tensors(G00).J[2, 2] == 209.0


def test_tensors_frozen():
    m = preset_model("siteB")
    with pytest.raises(ValueError):
        m.tensors(G00).J[0, 0] = 1.0


def test_origins_and_amplitudes():
    m = preset_model("siteB")
    assert m.origin(G00) == 0.0
    assert m.origin(E01) - m.origin(E10) == m.detuning
    assert m.amplitudes() == (1.0, 1.0)
    assert preset_model("siteA").amplitudes() == (1.0, 0.0)


def test_is_ising():
    assert preset_model("siteB-ising").tensors(G00).is_ising()
    assert not preset_model("siteB").tensors(G00).is_ising()


def test_non_finite_scalars_rejected():
    m = preset_model("siteB")
    with pytest.raises(ValueError):
        m.replace(kappa=float("nan"))
