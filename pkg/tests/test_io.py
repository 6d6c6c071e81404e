import json
import warnings

import numpy as np
import pytest

from spinpair.fit import Peak
from spinpair.io import (
    DataError,
    ModelConfig,
    RawMap,
    config_for_preset,
    extract_peaks,
    load_config,
    read_peaks,
    read_pgm,
    read_raw_map,
    read_spectrum,
    save_config,
    write_image,
    write_peaks,
    write_raw_map,
    write_spectrum,
)
from spinpair.presets import preset_model
from spinpair.spectrum import SpectrumMap, render_map, sweep


def test_read_three_peaks(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text("field_T,frequency_GHz,weight\n0.2,5.0,1\n0.1,3.0,2\n0.1,-1.0,1\n")
    peaks = read_peaks(p)
    assert len(peaks) == 3
    assert [(q.field, q.frequency) for q in peaks] == [(0.1, -1.0), (0.1, 3.0), (0.2, 5.0)]
    assert peaks[1].weight == 2.0


def test_weight_column_optional(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text("field_T,frequency_GHz\n0.2,5.0\n")
    assert read_peaks(p)[0].weight == 1.0


def test_bad_row_names_line(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text("field_T,frequency_GHz,weight\n0.2,5.0,1\nabc,3.0,1\n")
    with pytest.raises(DataError, match="line 3"):
        read_peaks(p)


def test_bad_header(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text("B,nu\n0.2,5.0\n")
    with pytest.raises(DataError, match="header"):
        read_peaks(p)


def test_empty_peak_file_warns(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text("")
    with pytest.warns(UserWarning):
        assert read_peaks(p) == []


def test_peaks_roundtrip(tmp_path):
    peaks = [Peak(0.1, 1.234567891, 2.0), Peak(-0.3, 7.5)]
    write_peaks(tmp_path / "p.csv", peaks)
    back = read_peaks(tmp_path / "p.csv")
    assert sorted((p.field, p.frequency, p.weight) for p in peaks) == \
        [(q.field, q.frequency, q.weight) for q in back]


def test_spectrum_roundtrip(tmp_path):
    smap = sweep(preset_model("siteB"), [0, 0, 1], -0.1, 0.2, 16).map
    write_spectrum(smap, tmp_path / "m.csv")
    back = read_spectrum(tmp_path / "m.csv")
    assert np.allclose(back.fields, smap.fields, atol=1e-9)
    assert np.allclose(back.frequencies, smap.frequencies, atol=1e-9)
    assert np.allclose(back.intensity, smap.intensity, atol=1e-9, rtol=1e-8)
    first = (tmp_path / "m.csv").read_text().splitlines()[:3]
    assert first[0] == "field_T,frequency_GHz,intensity"
    # field-major rows: the field stays fixed while frequency advances
    assert first[1].split(",")[0] == first[2].split(",")[0]


def test_empty_map_refused(tmp_path):
    empty = SpectrumMap(np.zeros(0), np.zeros(0), np.zeros((0, 0)))
    with pytest.raises(DataError):
        write_spectrum(empty, tmp_path / "m.csv")
    with pytest.raises(DataError):
        write_image(empty, tmp_path / "m.pgm")
    assert not (tmp_path / "m.csv").exists()
    assert not (tmp_path / "m.pgm").exists()


def test_ragged_grid_rejected(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("field_T,frequency_GHz,intensity\n0,0,1\n0,1,1\n1,0,1\n")
    with pytest.raises(DataError, match="grid"):
        read_spectrum(p)


def test_pgm(tmp_path):
    smap = SpectrumMap([0.0, 1.0, 2.0], [10.0, 20.0], [[0.0, 1.0], [0.5, 0.0], [0.0, 0.0]])
    write_image(smap, tmp_path / "m.pgm")
    raw = (tmp_path / "m.pgm").read_bytes()
    assert raw.startswith(b"P5\n")
    pix, comments = read_pgm(tmp_path / "m.pgm")
    assert any("log10(P+0.03)" in c for c in comments)
    assert pix.shape == (2, 3)
    # top row is the highest frequency
    assert pix[0, 0] == 65535 and pix[1, 0] == 0
    assert np.array_equal(pix, render_map(smap).pixels.T[::-1])


def _ridge_map(centres, n_fields=40, noise=0.02, seed=0, offset=0.0):
    rng = np.random.default_rng(seed)
    b = np.linspace(0, 1, n_fields)
    nu = np.arange(-10, 10, 0.05)
    cur = rng.normal(0, noise, (n_fields, nu.size)) + offset
    for c in centres:
        cur += np.exp(-0.5 * ((nu[None, :] - (c + 2 * b[:, None])) / 0.15) ** 2)
    return RawMap(b, nu, cur), b


def test_single_ridge_found_in_every_column():
    raw, b = _ridge_map([0.0])
    peaks = extract_peaks(raw)
    assert len(peaks) == len(b)
    for p in peaks:
        assert abs(p.frequency - 2 * p.field) <= 0.05
        assert p.weight > 5


def test_two_ridges_both_reported():
    raw, b = _ridge_map([0.0, 1.0])
    peaks = extract_peaks(raw)
    assert len(peaks) == 2 * len(b)


def test_constant_offset_invariance():
    a = extract_peaks(_ridge_map([0.0, 3.0], seed=5)[0])
    c = extract_peaks(_ridge_map([0.0, 3.0], seed=5, offset=123.0)[0])
    assert [(p.field, round(p.frequency, 9)) for p in a] == [(p.field, round(p.frequency, 9)) for p in c]


def test_pure_noise_false_positive_rate():
    # Gaussian tail oracle: each interior sample exceeds 5 sigma with
    # probability Q(5) = 2.87e-7, so 198 of them give 0.57 per 1e4 columns
    from scipy.stats import norm

    rng = np.random.default_rng(2024)
    n_cols, n_freq = 20000, 200
    expected = n_cols * (n_freq - 2) * norm.sf(5.0)
    assert expected / n_cols * 1e4 < 1.0
    raw = RawMap(np.arange(n_cols, dtype=float), np.arange(n_freq, dtype=float),
                 rng.normal(size=(n_cols, n_freq)))
    count = len(extract_peaks(raw))
    # Poisson(1.14): P(count > 5) < 1e-3
    assert count <= 5


def test_column_noise_scope_adapts_to_noisy_column():
    raw, b = _ridge_map([0.0], noise=0.02)
    rng = np.random.default_rng(9)
    raw.current[5] = rng.normal(0, 0.5, raw.frequencies.size)
    per_col = extract_peaks(raw, noise_scope="column")
    assert sum(p.field == b[5] for p in per_col) <= 1
    with pytest.raises(ValueError):
        extract_peaks(raw, noise_scope="row")


def test_constant_column_skipped_with_warning():
    raw, b = _ridge_map([0.0])
    raw.current[3] = 7.0
    with pytest.warns(UserWarning, match="constant"):
        peaks = extract_peaks(raw)
    assert len(peaks) == len(b) - 1


def test_raw_map_validation(tmp_path):
    with pytest.raises(DataError):
        RawMap([0.0, 1.0, 0.5], [0.0, 1.0], np.zeros((3, 2)))
    with pytest.raises(DataError):
        RawMap([0.0, 1.0], [0.0, 1.0], np.zeros((3, 2)))
    with pytest.raises(DataError):
        extract_peaks(RawMap([0.0, 1.0], [0.0, 1.0, 2.0], np.zeros((2, 3))))
    raw, _ = _ridge_map([0.0], n_fields=5)
    write_raw_map(raw, tmp_path / "raw.csv")
    back = read_raw_map(tmp_path / "raw.csv")
    assert np.allclose(back.current, raw.current, rtol=0, atol=0)


@pytest.mark.parametrize("name", ["siteA", "siteB", "siteB-ising"])
def test_config_roundtrip(tmp_path, name):
    cfg = config_for_preset(name)
    save_config(cfg, tmp_path / "c.json")
    back = load_config(tmp_path / "c.json")
    assert back.model.fingerprint() == cfg.model.fingerprint()
    assert back.to_dict() == cfg.to_dict()
    assert json.loads((tmp_path / "c.json").read_text())["schema_version"] == 1


def test_site_a_config_keeps_origin():
    assert config_for_preset("siteA").absolute_origin_THz == pytest.approx(194.88480)


def test_config_errors(tmp_path):
    with pytest.raises(DataError, match="schema_version"):
        ModelConfig.from_dict({"preset": "siteB"})
    with pytest.raises(DataError):
        ModelConfig.from_dict({"schema_version": 1})
    with pytest.raises(DataError):
        ModelConfig.from_dict({"schema_version": 1, "preset": "siteB", "sweep": {"axis": [0, 0, 0]}})
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(DataError, match="invalid JSON"):
        load_config(p)
    cfg = ModelConfig.from_dict({"schema_version": 1, "preset": "siteB", "sweep": {"steps": 11}})
    assert cfg.steps == 11 and cfg.model.name == "siteB"
