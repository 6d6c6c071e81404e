"""File formats: peak lists, spectrum maps, PGM images, raw maps and configs."""

import csv
from dataclasses import dataclass, field
import json
import math
import warnings

import numpy as np

from .fit import Peak
from .model import PairSiteModel
from .presets import preset_model
from .spectrum import COLOR_FLOOR, DEFAULT_WIDTH, RenderedMap, SpectrumMap, render_map

PEAK_HEADER = ("field_T", "frequency_GHz", "weight")
SPECTRUM_HEADER = ("field_T", "frequency_GHz", "intensity")
RAW_HEADER = ("field_T", "frequency_GHz", "current")
SCHEMA_VERSION = 1
MAD_TO_SIGMA = 1.4826


class DataError(ValueError):
    """Malformed or inconsistent input data."""


def _fmt(x):
    return f"{x:.9g}"


# -- peak lists ------------------------------------------------------------------


def read_peaks(path):
    """Peaks from a CSV with header ``field_T,frequency_GHz,weight``.

    The weight column may be left empty (weight 1). Peaks come back sorted by
    field, then frequency. An empty file gives an empty list and a warning.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [(n + 1, r) for n, r in enumerate(rows) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        warnings.warn(f"{path}: empty peak file", stacklevel=2)
        return []
    (_, header), body = rows[0], rows[1:]
    header = tuple(h.strip() for h in header)
    if header[:2] != PEAK_HEADER[:2] or (len(header) > 2 and header[2] != "weight") or len(header) > 3:
        raise DataError(f"{path}: line 1: expected header {','.join(PEAK_HEADER)}, got {','.join(header)}")
    peaks = []
    for line, r in body:
        if len(r) not in (2, 3):
            raise DataError(f"{path}: line {line}: expected 2 or 3 columns, got {len(r)}")
        try:
            b = float(r[0])
            nu = float(r[1])
            w = float(r[2]) if len(r) == 3 and r[2].strip() else 1.0
            peaks.append(Peak(b, nu, w))
        except ValueError as exc:
            raise DataError(f"{path}: line {line}: {exc}") from None
    if not peaks:
        warnings.warn(f"{path}: peak file has a header but no rows", stacklevel=2)
    peaks.sort(key=lambda p: (p.field, p.frequency))
    return peaks


def write_peaks(path, peaks):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PEAK_HEADER)
        for p in peaks:
            w.writerow([repr(float(p.field)), repr(float(p.frequency)), repr(float(p.weight))])


# -- spectrum maps -----------------------------------------------------------------


def _check_nonempty(smap):
    if smap.intensity.size == 0:
        raise DataError("refusing to write an empty spectrum map")


def write_spectrum(smap, path):
    """Long-format CSV, one row per grid point, field-major, 9 significant digits."""
    _check_nonempty(smap)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(SPECTRUM_HEADER) + "\n")
        freqs = [_fmt(f) for f in smap.frequencies]
        for i, b in enumerate(smap.fields):
            bs = _fmt(b)
            row = smap.intensity[i]
            fh.write("".join(f"{bs},{f},{_fmt(v)}\n" for f, v in zip(freqs, row)))


def _read_grid(path, header):
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    with open(path) as fh:
        got = tuple(h.strip() for h in fh.readline().strip().split(","))
    if got != header:
        raise DataError(f"{path}: line 1: expected header {','.join(header)}, got {','.join(got)}")
    if data.size == 0:
        raise DataError(f"{path}: no data rows")
    if data.shape[1] != 3:
        raise DataError(f"{path}: expected 3 columns, got {data.shape[1]}")
    fields, fi = np.unique(data[:, 0], return_inverse=True)
    freqs, qi = np.unique(data[:, 1], return_inverse=True)
    if len(data) != fields.size * freqs.size:
        raise DataError(f"{path}: {len(data)} rows do not form a {fields.size} x {freqs.size} grid")
    grid = np.full((fields.size, freqs.size), np.nan)
    grid[fi, qi] = data[:, 2]
    if np.isnan(grid).any():
        raise DataError(f"{path}: grid has duplicate or missing points")
    return fields, freqs, grid


def read_spectrum(path):
    fields, freqs, grid = _read_grid(path, SPECTRUM_HEADER)
    return SpectrumMap(fields, freqs, grid, {"source": str(path)})


# -- images -----------------------------------------------------------------------


def write_image(image, path, floor=COLOR_FLOOR):
    """16-bit binary PGM (P5, big-endian).

    ``image`` is a :class:`SpectrumMap` (rendered here) or a
    :class:`RenderedMap`. Columns run along the field axis; rows run along
    frequency with the highest frequency in the top row. Comment lines record
    the colour transform and both axis ranges.
    """
    if isinstance(image, SpectrumMap):
        _check_nonempty(image)
        image = render_map(image, floor)
    if not isinstance(image, RenderedMap) or image.pixels.size == 0:
        raise DataError("refusing to write an empty image")
    pix = np.ascontiguousarray(image.pixels.T[::-1]).astype(">u2")
    h, w = pix.shape
    comments = [
        f"transform {image.transform}",
        f"field_T {image.fields[0]:.9g} {image.fields[-1]:.9g} columns",
        f"frequency_GHz {image.frequencies[-1]:.9g} {image.frequencies[0]:.9g} rows top-to-bottom",
    ]
    head = "P5\n" + "".join(f"# {c}\n" for c in comments) + f"{w} {h}\n65535\n"
    with open(path, "wb") as fh:
        fh.write(head.encode("ascii"))
        fh.write(pix.tobytes())


def read_pgm(path):
    """(pixels as uint16 array (rows, cols), list of comment strings)."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens, comments = [], []
    pos = 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            end = data.index(b"\n", pos)
            comments.append(data[pos + 1:end].decode("ascii").strip())
            pos = end + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end].decode("ascii"))
        pos = end
    pos += 1
    if tokens[0] != "P5":
        raise DataError(f"{path}: not a binary PGM")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    dtype = ">u2" if maxval > 255 else "u1"
    pix = np.frombuffer(data[pos:], dtype=dtype, count=w * h).reshape(h, w)
    return pix.astype(np.uint16), comments


# -- raw maps and peak extraction ---------------------------------------------------


@dataclass
class RawMap:
    """Measured photocurrent on a (field, frequency) grid."""

    fields: np.ndarray
    frequencies: np.ndarray
    current: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.fields = np.asarray(self.fields, dtype=float)
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.current = np.asarray(self.current, dtype=float)
        if self.current.shape != (self.fields.size, self.frequencies.size):
            raise DataError(f"current grid {self.current.shape} does not match axes "
                            f"({self.fields.size}, {self.frequencies.size})")
        for name, ax in (("field", self.fields), ("frequency", self.frequencies)):
            d = np.diff(ax)
            if ax.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
                raise DataError(f"{name} axis is not strictly monotone")


def read_raw_map(path):
    fields, freqs, grid = _read_grid(path, RAW_HEADER)
    return RawMap(fields, freqs, grid, {"source": str(path)})


def write_raw_map(raw, path):
    with open(path, "w") as fh:
        fh.write(",".join(RAW_HEADER) + "\n")
        for i, b in enumerate(raw.fields):
            for f, v in zip(raw.frequencies, raw.current[i]):
                fh.write(f"{_fmt(b)},{_fmt(f)},{float(v)!r}\n")


def extract_peaks(raw, k_mad=5.0, min_separation=0.3, noise_scope="map"):
    """Peaks in a raw map, column by column.

    Each field column has its median removed. The noise scale is the median
    absolute deviation, scaled by 1.4826 so that it estimates the standard
    deviation of Gaussian noise. With ``noise_scope="map"`` one scale is taken
    from all median-subtracted columns together; ``"column"`` estimates it per
    column, which adapts to column-dependent noise but lets the scatter of a
    short-sample MAD raise the false-positive rate several-fold. Local maxima
    above ``k_mad`` noise units are kept, strongest first, dropping any within
    ``min_separation`` GHz of a stronger one. Positions are refined by a
    parabola through the three highest samples and weights are signal-to-noise
    ratios. Constant columns are skipped with a warning.
    """
    if raw.fields.size < 3 or raw.frequencies.size < 3:
        raise DataError("extract_peaks needs at least 3 points along each axis")
    if noise_scope not in ("map", "column"):
        raise ValueError("noise_scope must be 'map' or 'column'")
    order = np.argsort(raw.frequencies)
    nu = raw.frequencies[order]
    S = raw.current[:, order]
    S = S - np.median(S, axis=1, keepdims=True)
    col_mad = np.median(np.abs(S), axis=1)
    constant = np.ptp(raw.current, axis=1) == 0
    if noise_scope == "map":
        live = S[~constant]
        scale = MAD_TO_SIGMA * np.median(np.abs(live)) if live.size else 0.0
        noises = np.where(constant, 0.0, scale)
    else:
        noises = MAD_TO_SIGMA * col_mad
    peaks = []
    skipped = 0
    for i, b in enumerate(raw.fields):
        s = S[i]
        noise = noises[i]
        if constant[i] or not noise > 0:
            skipped += 1
            continue
        cand = np.nonzero((s[1:-1] > s[:-2]) & (s[1:-1] >= s[2:]) & (s[1:-1] > k_mad * noise))[0] + 1
        kept = []
        for k in sorted(cand, key=lambda k: -s[k]):
            if all(abs(nu[k] - nu[j]) >= min_separation for j in kept):
                kept.append(k)
        for k in sorted(kept):
            y0, y1, y2 = s[k - 1], s[k], s[k + 1]
            den = y0 - 2 * y1 + y2
            off = 0.5 * (y0 - y2) / den if den < 0 else 0.0
            off = min(max(off, -0.5), 0.5)
            step = nu[k + 1] - nu[k] if off > 0 else nu[k] - nu[k - 1]
            peaks.append(Peak(float(b), float(nu[k] + off * step), float(y1 / noise)))
    if skipped:
        warnings.warn(f"skipped {skipped} constant field column(s)", stacklevel=2)
    return peaks


# -- configuration -------------------------------------------------------------------


@dataclass
class ModelConfig:
    """Model plus sweep defaults and presentation options."""

    model: PairSiteModel
    axis: tuple = (0.0, 0.0, 1.0)
    b_min: float = -0.2
    b_max: float = 0.7
    steps: int = 901
    width: float = DEFAULT_WIDTH
    color_floor: float = COLOR_FLOOR
    absolute_origin_THz: float = None

    def to_dict(self):
        d = {
            "schema_version": SCHEMA_VERSION,
            "model": self.model.to_dict(),
            "sweep": {"axis": list(map(float, self.axis)), "b_min_T": self.b_min,
                      "b_max_T": self.b_max, "steps": self.steps},
            "presentation": {"width_GHz": self.width, "color_floor": self.color_floor},
        }
        if self.absolute_origin_THz is not None:
            d["absolute_origin_THz"] = self.absolute_origin_THz
        return d

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise DataError("config must be a JSON object")
        version = d.get("schema_version")
        if version != SCHEMA_VERSION:
            raise DataError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
        if "model" in d:
            model = PairSiteModel.from_dict(d["model"])
        elif "preset" in d:
            model = preset_model(d["preset"])
        else:
            raise DataError("config needs a 'model' or a 'preset'")
        sw = d.get("sweep", {})
        pr = d.get("presentation", {})
        origin = d.get("absolute_origin_THz", model.metadata.get("absolute_origin_THz"))
        cfg = cls(
            model=model,
            axis=tuple(float(a) for a in sw.get("axis", (0.0, 0.0, 1.0))),
            b_min=float(sw.get("b_min_T", -0.2)),
            b_max=float(sw.get("b_max_T", 0.7)),
            steps=int(sw.get("steps", 901)),
            width=float(pr.get("width_GHz", DEFAULT_WIDTH)),
            color_floor=float(pr.get("color_floor", COLOR_FLOOR)),
            absolute_origin_THz=None if origin is None else float(origin),
        )
        if len(cfg.axis) != 3 or not any(cfg.axis):
            raise DataError("sweep axis must be a non-zero 3-vector")
        if not all(math.isfinite(v) for v in (cfg.b_min, cfg.b_max, cfg.width, cfg.color_floor)):
            raise DataError("non-finite sweep or presentation value")
        return cfg


def load_config(path):
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from None
    return ModelConfig.from_dict(d)


def save_config(cfg, path):
    with open(path, "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2)
        fh.write("\n")


def config_for_preset(name):
    model = preset_model(name)
    return ModelConfig(model=model, absolute_origin_THz=model.metadata.get("absolute_origin_THz"))


def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, float) and not math.isfinite(o):
        return None
    raise TypeError(f"cannot serialize {type(o).__name__}")
