"""Coefficient and signal file formats.

Coefficient files are plain text with one number per line: the ``b`` block,
a blank line, then the ``a`` block. Signals are either raw little-endian
float64 (``.f64``) or decimal text with one sample per line (``.txt``).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .model import TransferFunction


class FormatError(ValueError):
    """A file could not be parsed."""


def parse_coefficients(text: str) -> TransferFunction:
    blocks, current = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            if current:
                blocks.append(current)
                current = []
            continue
        try:
            current.append(float(line))
        except ValueError:
            raise FormatError(f"line {lineno}: not a number: {line!r}") from None
    if current:
        blocks.append(current)
    if len(blocks) != 2:
        raise FormatError(f"expected a b-block and an a-block separated by a blank line, found {len(blocks)} block(s)")
    return TransferFunction(*blocks)


def format_coefficients(tf: TransferFunction) -> str:
    b = "\n".join(repr(float(c)) for c in tf.b)
    a = "\n".join(repr(float(c)) for c in tf.a)
    return f"{b}\n\n{a}\n"


def read_coefficients(path) -> TransferFunction:
    return parse_coefficients(Path(path).read_text())


def write_coefficients(path, tf: TransferFunction) -> None:
    Path(path).write_text(format_coefficients(tf))


def _kind(path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix not in (".f64", ".txt"):
        raise FormatError(f"unsupported signal extension {suffix!r} (use .f64 or .txt)")
    return suffix


def read_signal(path) -> np.ndarray:
    path = Path(path)
    if _kind(path) == ".f64":
        raw = path.read_bytes()
        if len(raw) % 8:
            raise FormatError(f"{path}: size {len(raw)} is not a multiple of 8 bytes")
        x = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    else:
        values = []
        for lineno, line in enumerate(path.read_text().splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise FormatError(f"{path}:{lineno}: not a number: {line!r}") from None
        x = np.array(values, dtype=np.float64)
    if x.size == 0:
        raise FormatError(f"{path}: no samples")
    return x


def write_signal(path, y) -> None:
    path = Path(path)
    y = np.asarray(y, dtype=np.float64)
    if _kind(path) == ".f64":
        path.write_bytes(y.astype("<f8").tobytes())
    else:
        path.write_text("".join(f"{float(v)!r}\n" for v in y))
