import numpy as np
import pytest

from spinpair.anticrossing import (
    dark_state_analysis,
    detect_anticrossings,
    detect_crossings,
    find_anticrossings,
)
from spinpair.model import E01, E10, G00, PairSiteModel
from spinpair.presets import preset_model
from spinpair.spectrum import sweep
from spinpair.tracking import track_levels


def test_two_level_anticrossing():
    b = np.linspace(-1, 1, 201)
    H = np.zeros((b.size, 2, 2), dtype=complex)
    H[:, 0, 0], H[:, 1, 1] = 10 * b, -10 * b
    H[:, 0, 1] = H[:, 1, 0] = 0.25
    w, V = np.linalg.eigh(H)
    tr = track_levels(w, V, b)
    reps = detect_anticrossings(tr, "ground", refine=False)
    assert len(reps) == 1
    assert abs(reps[0].field) < 1e-9
    assert np.isclose(reps[0].gap, 0.5, rtol=1e-3)


def test_ising_model_has_crossings_only():
    m = preset_model("siteB-ising").replace(kappa=0.0)
    res = sweep(m, [0, 0, 1], -0.2, 0.7, 181)
    assert find_anticrossings(res) == []
    assert detect_crossings(res.ground)


def test_ising_with_coupling_has_no_spin_anticrossings():
    res = sweep(preset_model("siteB-ising"), [0, 0, 1], -0.2, 0.7, 901)
    reps = find_anticrossings(res)
    assert all(r.kind == "optical" for r in reps)


def test_no_optical_anticrossing_without_coupling():
    res = sweep(preset_model("siteB").replace(kappa=0.0), [0, 0, 1], -0.2, 0.7, 901)
    assert not [r for r in find_anticrossings(res) if r.kind == "optical"]


def _mirror_model(kappa, parity):
    # two manifolds that cross at B = 0.1 T with no other structure
    g = lambda v: np.diag([0, 0, v])
    states = {
        G00: dict(g1=g(200.0), g2=g(200.0), J=np.diag([0, 0, 50.0])),
        E10: dict(g1=g(100.0), g2=g(200.0), J=np.diag([0, 0, 60.0])),
        E01: dict(g1=g(200.0), g2=g(100.0), J=np.diag([0, 0, 55.0])),
    }
    return PairSiteModel(states=states, detuning=-5.0, kappa=kappa, parity=parity)


def test_isolated_gap_is_twice_kappa():
    m = _mirror_model(0.2, "odd")
    reps = dark_state_analysis(m, 0.0, 0.4, 401)
    assert reps
    for r in reps:
        assert abs(r.gap - 0.4) <= 0.01 * 0.4


def test_odd_parity_dark_side_flips_with_field():
    m = preset_model("siteB")
    pos = dark_state_analysis(m, 0.05, 0.3, 251)
    neg = dark_state_analysis(m, -0.3, -0.05, 251)
    assert len(pos) == 1 and len(neg) == 1
    assert {pos[0].dark_branch, neg[0].dark_branch} == {"lower", "upper"}


def test_even_parity_dark_side_same_at_both_signs():
    m = preset_model("siteB").replace(parity="even")
    pos = dark_state_analysis(m, 0.05, 0.3, 251)
    neg = dark_state_analysis(m, -0.3, -0.05, 251)
    assert len(pos) == 1 and len(neg) == 1
    assert pos[0].dark_branch == neg[0].dark_branch != "none"


def test_perturbed_spin_anticrossings_in_window():
    res = sweep(preset_model("siteB"), [0, 0, 1], -0.2, 0.7, 901)
    spin = [r for r in find_anticrossings(res) if r.kind == "spin" and r.doublets == "inter"]
    assert spin
    assert all(0.44 <= r.field <= 0.65 for r in spin)
    assert all(r.gap > 0 for r in spin)
