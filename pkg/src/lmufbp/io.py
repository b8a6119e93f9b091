"""Sinogram/phantom files, data conditioning and graymap output.

Sinogram file layout (ASCII header, then payload)::

    LMUSINO 1
    M 360
    K 1958
    T 0.0005107252298263534
    lambda 0.015          # optional; present => modulo data
    delta 0.00075         # optional
    encoding csv          # or f64le
    end
    <M lines of N comma-separated values | M*N little-endian float64>

Headerless CSV matrices (one angle per line, odd column count) are also
accepted; ``T`` then defaults to ``1/K``.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .geometry import Image, ModuloSinogram, SamplingGrid, Sinogram
from .phantoms import Ellipse, Phantom, SmoothBump, builtin_phantom

MAGIC = "LMUSINO 1"


class SinogramFormatError(ValueError):
    pass


def atomic_write(path, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_sinogram(path, sino: Sinogram | ModuloSinogram, encoding: str = "csv") -> None:
    if encoding not in ("csv", "f64le"):
        raise ValueError(f"unknown encoding {encoding!r}")
    base = sino.sinogram if isinstance(sino, ModuloSinogram) else sino
    g = base.grid
    lines = [MAGIC, f"M {g.M}", f"K {g.K}", f"T {g.T!r}"]
    if isinstance(sino, ModuloSinogram):
        lines += [f"lambda {sino.lam!r}", f"delta {sino.delta!r}"]
    lines += [f"encoding {encoding}", "end"]
    head = ("\n".join(lines) + "\n").encode("ascii")
    if encoding == "csv":
        body = "".join(",".join(repr(float(v)) for v in row) + "\n" for row in base.data).encode("ascii")
    else:
        body = base.data.astype("<f8").tobytes()
    atomic_write(path, head + body)


def _parse_header(raw: bytes):
    fields, pos = {}, 0
    first = True
    while True:
        nl = raw.find(b"\n", pos)
        if nl < 0:
            raise SinogramFormatError("header is not terminated by an 'end' line")
        line = raw[pos:nl].decode("ascii", errors="replace").strip()
        pos = nl + 1
        if first:
            if line != MAGIC:
                raise SinogramFormatError(f"bad magic line {line!r}, expected {MAGIC!r}")
            first = False
            continue
        if line == "end":
            return fields, pos
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition(" ")
        if not value:
            raise SinogramFormatError(f"malformed header line {line!r}")
        fields[key] = value.strip()


def _parse_csv_rows(text: str, expected_rows: int | None, expected_cols: int | None, first_line: int = 1):
    rows = [ln for ln in text.splitlines()]
    while rows and not rows[-1].strip():
        rows.pop()
    data = []
    for i, ln in enumerate(rows):
        try:
            vals = [float(v) for v in ln.split(",")]
        except ValueError as exc:
            raise SinogramFormatError(f"row {i} (line {first_line + i}): {exc}") from None
        if expected_cols is not None and len(vals) != expected_cols:
            raise SinogramFormatError(
                f"row {i} (line {first_line + i}) has {len(vals)} values, expected {expected_cols}"
            )
        expected_cols = len(vals)
        data.append(vals)
    if expected_rows is not None and len(data) != expected_rows:
        raise SinogramFormatError(f"found {len(data)} data rows, header declares M = {expected_rows}")
    return np.array(data, dtype=float)


def _check_finite(data):
    bad = ~np.isfinite(data)
    if bad.any():
        m, n = np.argwhere(bad)[0]
        raise SinogramFormatError(f"non-finite entry at row {m}, column {n}")


def load_sinogram(path, T: float | None = None) -> Sinogram | ModuloSinogram:
    raw = Path(path).read_bytes()
    if not raw.startswith(MAGIC.encode()):
        data = _parse_csv_rows(raw.decode("ascii"), None, None)
        if data.ndim != 2 or data.shape[1] % 2 == 0:
            raise SinogramFormatError(f"headerless CSV needs an odd number of columns, got shape {data.shape}")
        _check_finite(data)
        K = (data.shape[1] - 1) // 2
        return Sinogram(SamplingGrid(data.shape[0], K, 1.0 / K if T is None else T), data)

    fields, offset = _parse_header(raw)
    try:
        grid = SamplingGrid(int(fields["M"]), int(fields["K"]), float(fields["T"]))
        encoding = fields.get("encoding", "csv")
    except (KeyError, ValueError) as exc:
        raise SinogramFormatError(f"malformed header: {exc}") from None
    payload = raw[offset:]
    if encoding == "csv":
        n_header = raw[:offset].count(b"\n")
        data = _parse_csv_rows(payload.decode("ascii"), grid.M, grid.N, first_line=n_header + 1)
    elif encoding == "f64le":
        expected = grid.M * grid.N * 8
        if len(payload) != expected:
            raise SinogramFormatError(f"binary payload has {len(payload)} bytes, expected {expected}")
        data = np.frombuffer(payload, dtype="<f8").reshape(grid.shape).astype(float)
    else:
        raise SinogramFormatError(f"unknown encoding {encoding!r}")
    _check_finite(data)
    sino = Sinogram(grid, data)
    if "lambda" in fields:
        return ModuloSinogram(sino, float(fields["lambda"]), float(fields.get("delta", 0.0)))
    return sino


def normalize_sinogram(sino: Sinogram) -> Sinogram:
    """Affinely map the data onto [0, 1]."""
    lo, hi = float(sino.data.min()), float(sino.data.max())
    if not hi > lo:
        raise ValueError("cannot normalise constant data (degenerate range)")
    return sino.with_data((sino.data - lo) / (hi - lo))


def downsample_radial(sino, factor: int):
    """Keep every ``factor``-th radial sample, centre sample included."""
    if factor == 1:
        return sino
    base = sino.sinogram if isinstance(sino, ModuloSinogram) else sino
    g = base.grid
    if factor < 1 or g.K % factor:
        raise ValueError(f"K = {g.K} is not divisible by downsampling factor {factor}")
    grid = SamplingGrid(g.M, g.K // factor, g.T * factor)
    out = Sinogram(grid, base.data[:, ::factor])
    if isinstance(sino, ModuloSinogram):
        return ModuloSinogram(out, sino.lam, sino.delta)
    return out


def graymap_bytes(img: Image, window: tuple[float, float] | None = None) -> bytes:
    """Binary PGM (P5), top row first, so +y points up on screen."""
    data = img.data
    if window is None:
        lo, hi = float(data.min()), float(data.max())
    else:
        lo, hi = map(float, window)
        if not lo < hi:
            raise ValueError(f"display window must satisfy lo < hi, got {window}")
    if hi > lo:
        scaled = np.clip((data - lo) / (hi - lo), 0.0, 1.0)
        pix = np.rint(scaled * 255.0).astype(np.uint8)
    else:
        pix = np.full(data.shape, 128, dtype=np.uint8)
    pix = pix[::-1]
    head = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return head + pix.tobytes()


def render_image(img: Image, path, window: tuple[float, float] | None = None) -> None:
    atomic_write(path, graymap_bytes(img, window))


def read_graymap(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    parts = raw.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError("not a binary graymap")
    w, h = int(parts[1]), int(parts[2])
    return np.frombuffer(parts[4][: w * h], dtype=np.uint8).reshape(h, w)


def save_image(path, img: Image) -> None:
    import io

    buf = io.BytesIO()
    np.save(buf, img.data)
    atomic_write(path, buf.getvalue())


def load_image(path) -> Image:
    return Image(np.load(path))


# -- phantom files ---------------------------------------------------------


def phantom_from_records(records, name: str = "custom") -> Phantom:
    """Build a phantom from a list of dicts.

    ``{"kind": "ellipse", "center": [x, y], "axes": [a, b], "rotation": rad, "intensity": v}``
    ``{"kind": "bump", "center": [x, y], "radius": r, "intensity": v, "nu": 2.5}``
    """
    comps = []
    for i, rec in enumerate(records):
        kind = rec.get("kind")
        try:
            center = tuple(float(c) for c in rec["center"])
            if kind == "ellipse":
                a, b = (float(v) for v in rec["axes"])
                comps.append(Ellipse(center, a, b, float(rec.get("rotation", 0.0)), float(rec.get("intensity", 1.0))))
            elif kind == "bump":
                comps.append(
                    SmoothBump(center, float(rec["radius"]), float(rec.get("intensity", 1.0)), float(rec.get("nu", 2.5)))
                )
            else:
                raise ValueError(f"unknown component kind {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"phantom record {i}: {exc}") from None
    return Phantom(comps, name=name)


def phantom_to_records(phantom: Phantom) -> list[dict]:
    out = []
    for c in phantom.components:
        if isinstance(c, Ellipse):
            out.append(
                {"kind": "ellipse", "center": list(c.center), "axes": [c.a, c.b], "rotation": c.rotation, "intensity": c.intensity}
            )
        else:
            out.append({"kind": "bump", "center": list(c.center), "radius": c.radius, "intensity": c.intensity, "nu": c.nu})
    return out


def load_phantom(source: str) -> Phantom:
    """Built-in phantom name or path to a JSON list of component records."""
    path = Path(source)
    if path.suffix == ".json" or path.exists():
        records = json.loads(path.read_text())
        return phantom_from_records(records, name=path.stem)
    return builtin_phantom(source)


def save_phantom(path, phantom: Phantom) -> None:
    atomic_write(path, (json.dumps(phantom_to_records(phantom), indent=2) + "\n").encode())


# -- metrics records -------------------------------------------------------


def _fmt(v):
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    return "none" if v is None else str(v)


def metrics_text(record: dict) -> str:
    return "".join(f"{k}={_fmt(v)}\n" for k, v in record.items())


def write_metrics(directory, record: dict) -> None:
    directory = Path(directory)
    atomic_write(directory / "metrics.txt", metrics_text(record).encode())
    clean = {k: ("inf" if isinstance(v, float) and math.isinf(v) else v) for k, v in record.items()}
    atomic_write(directory / "metrics.json", (json.dumps(clean, indent=2, sort_keys=False) + "\n").encode())
