"""Image files and run reports.

Two image formats are supported:

* binary PGM (``P5``) with ``maxval`` 255, for viewing;
* a lossless raw format for exact round-trips: the 8-byte magic
  ``b"SGRAW\\x00\\x01\\x00"``, rows and cols as little-endian uint64, then
  ``rows * cols`` little-endian float64 values in row-major order.

Files are told apart by their leading bytes, not by extension.
"""
from __future__ import annotations

import csv
import os
import re
from pathlib import Path

import numpy as np

from .errors import FormatError

RAW_MAGIC = b"SGRAW\x00\x01\x00"

__all__ = ["read_image", "write_image", "write_pgm", "write_raw", "write_csv", "write_report",
           "RAW_MAGIC"]

_PGM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n)*(\S+)")


def _parse_pgm(data: bytes, path) -> np.ndarray:
    pos = 2
    fields = []
    for _ in range(3):
        m = _PGM_TOKEN.match(data, pos)
        if m is None:
            raise FormatError(f"{path}: truncated PGM header")
        fields.append(m.group(1))
        pos = m.end()
    try:
        cols, rows, maxval = (int(f) for f in fields)
    except ValueError:
        raise FormatError(f"{path}: non-numeric PGM header") from None
    if maxval != 255:
        raise FormatError(f"{path}: only maxval 255 is supported (got {maxval})")
    if rows <= 0 or cols <= 0:
        raise FormatError(f"{path}: bad PGM dimensions")
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise FormatError(f"{path}: missing separator after PGM header")
    pixels = data[pos + 1:]
    if len(pixels) < rows * cols:
        raise FormatError(f"{path}: PGM pixel data truncated")
    return np.frombuffer(pixels[: rows * cols], dtype=np.uint8).reshape(rows, cols).astype(float)


def _parse_raw(data: bytes, path) -> np.ndarray:
    if len(data) < 24:
        raise FormatError(f"{path}: truncated raw header")
    rows, cols = np.frombuffer(data[8:24], dtype="<u8")
    n = int(rows) * int(cols)
    if rows == 0 or cols == 0 or len(data) != 24 + 8 * n:
        raise FormatError(f"{path}: raw payload size does not match {rows}x{cols}")
    return np.frombuffer(data[24:], dtype="<f8").reshape(int(rows), int(cols)).astype(float)


def read_image(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data.startswith(RAW_MAGIC):
        return _parse_raw(data, path)
    if data.startswith(b"P5"):
        return _parse_pgm(data, path)
    raise FormatError(f"{path}: neither binary PGM nor raw field")


def write_pgm(path, field) -> None:
    """8-bit PGM; values are clamped to [0, 255] and rounded half to even."""
    f = np.asarray(field, dtype=float)
    if f.ndim != 2:
        raise FormatError("only 2-D fields can be written")
    pixels = np.rint(np.clip(f, 0.0, 255.0)).astype(np.uint8)
    header = f"P5\n{f.shape[1]} {f.shape[0]}\n255\n".encode()
    Path(path).write_bytes(header + pixels.tobytes())


def write_raw(path, field) -> None:
    f = np.asarray(field, dtype=float)
    if f.ndim != 2:
        raise FormatError("only 2-D fields can be written")
    header = RAW_MAGIC + np.array(f.shape, dtype="<u8").tobytes()
    Path(path).write_bytes(header + np.ascontiguousarray(f, dtype="<f8").tobytes())


def write_image(path, field) -> None:
    """PGM for ``.pgm`` paths, raw format for anything else."""
    if str(path).lower().endswith(".pgm"):
        write_pgm(path, field)
    else:
        write_raw(path, field)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def write_report(bundle, record, out_dir, max_lag: int = 100) -> list:
    """Write metrics, traces, ACF and estimate images into ``out_dir``.

    Returns the list of files written. Interval images are skipped when the
    bundle carries none (no kept samples).
    """
    from .experiments.metrics import acf

    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out}: {exc.strerror}") from exc
    written = []

    metrics = dict(bundle.metrics) if bundle is not None else {}
    if record is not None:
        metrics.setdefault("t_mc", record.t_mc)
        metrics.setdefault("t_bi", record.t_bi)
        metrics.setdefault("n_kept", record.n_kept)
        post = record.post_burn_trace
        if post.size:
            metrics.setdefault("trace_mean", float(np.mean(post)))
    write_csv(out / "metrics.csv", ["name", "value"], sorted(metrics.items()))
    written.append(out / "metrics.csv")

    if record is not None:
        write_csv(out / "trace.csv", ["sweep", "neg_log_posterior"],
                  ((i + 1, v) for i, v in enumerate(record.scalar_trace)))
        written.append(out / "trace.csv")
        post = record.post_burn_trace
        if post.size >= 2:
            rho = acf(post, max_lag)
            write_csv(out / "acf.csv", ["lag", "value"], enumerate(rho))
            written.append(out / "acf.csv")

    if bundle is not None:
        for name in ("mmse_x", "mmse_z", "mmse_u", "ci_low", "ci_high"):
            img = getattr(bundle, name, None)
            if img is None:
                continue
            for ext, writer in ((".pgm", write_pgm), (".raw", write_raw)):
                p = out / (name + ext)
                writer(p, img)
                written.append(p)
    return written


def write_aggregate(path, rows) -> None:
    """``rows`` maps metric name to a list of replicate values; writes mean and std."""
    out = []
    for name in sorted(rows):
        vals = np.asarray(rows[name], dtype=float)
        std = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
        out.append((name, float(np.mean(vals)), std, vals.size))
    write_csv(path, ["name", "mean", "std", "n"], out)


def bundled_image_path(name: str) -> str:
    return os.path.join(os.path.dirname(__file__), "data", name)
