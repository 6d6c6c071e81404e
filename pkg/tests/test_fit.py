import numpy as np
import pytest

from spinpair.fit import (
    FitError,
    FitSpec,
    Peak,
    associate_peaks,
    fit_model,
    fit_quality_report,
    get_parameter,
    set_parameter,
    synthetic_peaks,
)
from spinpair.model import E01, E10, G00
from spinpair.presets import preset_model
from spinpair.spectrum import compute_lines

FIELDS = np.linspace(-0.1, 0.6, 6)


@pytest.fixture(scope="module")
def ising():
    return preset_model("siteB-ising")


@pytest.fixture(scope="module")
def ising_peaks(ising):
    return synthetic_peaks(ising, FIELDS, n_lines=8)


def test_peak_validation():
    with pytest.raises(ValueError):
        Peak(float("nan"), 1.0)
    with pytest.raises(ValueError):
        Peak(0.1, 1.0, weight=0.0)
    assert Peak(0.1, 2.0).weight == 1.0


def test_parameter_access():
    m = preset_model("siteB")
    assert get_parameter(m, "g0z") == 232.0
    assert get_parameter(m, "g1z") == 188.0
    assert get_parameter(m, "J00zz") == 209.0
    assert get_parameter(m, "delta") == m.detuning
    assert np.isclose(get_parameter(m, "D00x"), 2.0)
    m2 = set_parameter(m, "g0z", 233.0)
    # tied parameter moves both ions and keeps their difference
    assert np.isclose(m2.tensors(G00).g2[2, 2], 231.5)
    assert np.isclose(m2.tensors(E10).g2[2, 2], 231.5)
    assert np.isclose(m2.tensors(E01).g1[2, 2], 233.0)
    m3 = set_parameter(m, "D00z", 0.5)
    assert np.isclose(get_parameter(m3, "D00z"), 0.5)
    assert np.isclose(get_parameter(m3, "D00x"), 2.0)
    with pytest.raises(FitError):
        get_parameter(m, "bogus")


def test_self_peaks_match_with_zero_residual(ising, ising_peaks):
    assoc = associate_peaks(ising, ising_peaks)
    assert all(a.matched for a in assoc)
    assert max(abs(a.residual) for a in assoc) < 1e-9


def test_far_peak_unmatched(ising):
    assoc = associate_peaks(ising, [Peak(0.3, 5000.0)])
    assert not assoc[0].matched


def test_tie_goes_to_brighter_line():
    m = preset_model("siteB")
    L = compute_lines(m, np.array([[0, 0, 0.4]]))
    nu, P = L.frequency[0].ravel(), L.intensity[0].ravel()
    order = np.argsort(nu)
    # two neighbouring lines of clearly different brightness
    for a, b in zip(order[:-1], order[1:]):
        if 0.5 < nu[b] - nu[a] < 4 and max(P[a], P[b]) > 10 * min(P[a], P[b]):
            break
    mid = 0.5 * (nu[a] + nu[b])
    assoc = associate_peaks(m, [Peak(0.4, mid)])[0]
    assert np.isclose(assoc.intensity, max(P[a], P[b]))


def test_under_determined(ising):
    spec = FitSpec(ising, ["J00zz", "J10zz"])
    with pytest.raises(FitError, match="cannot determine"):
        fit_model(spec, [Peak(0.1, 1.0)])


def test_spec_validation(ising):
    with pytest.raises(FitError):
        FitSpec(ising, [])
    with pytest.raises(FitError):
        FitSpec(ising, ["delta", "delta"])
    with pytest.raises(FitError, match="outside bounds"):
        FitSpec(ising, ["J00zz"], bounds={"J00zz": (0, 100)})


def test_delta_only_recovery(ising, ising_peaks):
    start = set_parameter(ising, "delta", -9.0)
    res = fit_model(FitSpec(start, ["delta"], restarts=1), ising_peaks)
    assert res.converged
    assert abs(abs(res.values["delta"]) - 10.8) < 1e-6
    assert res.rms < 1e-6


def test_truth_is_fixed_point(ising, ising_peaks):
    res = fit_model(FitSpec(ising, ["J00zz", "delta"], restarts=0), ising_peaks)
    assert np.isclose(res.values["J00zz"], 209.0, atol=1e-6)
    assert np.isclose(res.values["delta"], -10.8, atol=1e-6)


def test_global_offset_absorbed_by_nu10(ising, ising_peaks):
    shifted = [Peak(p.field, p.frequency + 3.0) for p in ising_peaks]
    start = set_parameter(ising, "J00zz", 205.0)
    a = fit_model(FitSpec(start, ["J00zz", "nu10"], restarts=1), ising_peaks)
    b = fit_model(FitSpec(start, ["J00zz", "nu10"], restarts=1), shifted)
    assert np.isclose(b.values["nu10"] - a.values["nu10"], 3.0, atol=1e-6)
    assert np.isclose(a.values["J00zz"], b.values["J00zz"], atol=1e-6)


def test_weight_scaling_keeps_argmin(ising):
    noisy = synthetic_peaks(ising, FIELDS, n_lines=8, noise=0.05, seed=4)
    heavy = [Peak(p.field, p.frequency, 7.0) for p in noisy]
    start = set_parameter(ising, "J10zz", 230.0)
    a = fit_model(FitSpec(start, ["J10zz"], restarts=1), noisy)
    b = fit_model(FitSpec(start, ["J10zz"], restarts=1), heavy)
    assert np.isclose(a.values["J10zz"], b.values["J10zz"], atol=1e-6)
    assert np.isclose(a.loss * 7.0, b.loss, rtol=1e-6)


def test_report_and_serialization(ising, ising_peaks):
    peaks = ising_peaks + [Peak(0.2, 9000.0)]
    res = fit_model(FitSpec(ising, ["delta"], restarts=0), peaks)
    assert res.unmatched == [len(peaks) - 1]
    text, summary = fit_quality_report(res, peaks)
    assert "rms residual" in text
    assert "unmatched peaks" in text
    assert "locked" in text
    assert summary["unmatched"] == [len(peaks) - 1]
    assert sum(summary["histogram"]["counts"]) == len(ising_peaks)
    d = res.to_dict()
    assert d["parameters"]["delta"]["value"] == res.values["delta"]
    assert d["association"][-1]["line"] is None
    assert res.rms >= 0


def test_noisy_errors_are_finite(ising):
    noisy = synthetic_peaks(ising, FIELDS, n_lines=8, noise=0.05, seed=1)
    res = fit_model(FitSpec(ising, ["J00zz", "J01zz"], restarts=1), noisy)
    for n in res.names:
        assert np.isfinite(res.errors[n]) and res.errors[n] > 0
        assert abs(res.values[n] - get_parameter(ising, n)) < 4 * res.errors[n]


def test_refit_from_result_is_fixed_point(ising):
    noisy = synthetic_peaks(ising, FIELDS, n_lines=8, noise=0.05, seed=2)
    first = fit_model(FitSpec(ising, ["J00zz", "delta"], restarts=1), noisy)
    again = fit_model(FitSpec(first.model, ["J00zz", "delta"], restarts=1), noisy)
    for n in first.names:
        assert abs(again.values[n] - first.values[n]) <= 1e-6 * abs(first.values[n])


def test_locked_parameters_echoed_verbatim(ising, ising_peaks):
    res = fit_model(FitSpec(ising, ["delta"], restarts=0), ising_peaks)
    assert res.locked["J00zz"] == 209.0
    assert res.locked["g1z"] == 188.0
    text, _ = fit_quality_report(res, ising_peaks)
    assert "J00zz" in text and "209.0" in text
