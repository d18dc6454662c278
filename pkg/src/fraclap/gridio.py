"""GridFunction serialisation.

CSV: one comment line ``# fraclap-grid v1 dims=<d> sizes=<n1>x<n2> period=<L1>,<L2>``,
a header row ``i0[,i1[,i2]],value``, then one row per sample in row-major order.

Binary (little-endian)::

    b"FRLP"             magic
    u32                 version (1)
    u32                 dims
    u32 * dims          sizes
    f64 * dims          period
    f64 * prod(sizes)   samples, row-major
"""

from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np

from fraclap.spectral import GridFunction

MAGIC = b"FRLP"
VERSION = 1


def _fmt(x: float) -> str:
    return repr(float(x))


def to_csv(f: GridFunction) -> str:
    out = io.StringIO()
    sizes = "x".join(str(k) for k in f.sizes)
    period = ",".join(_fmt(p) for p in f.period)
    out.write(f"# fraclap-grid v{VERSION} dims={f.dims} sizes={sizes} period={period}\n")
    out.write(",".join([f"i{d}" for d in range(f.dims)] + ["value"]) + "\n")
    for index in np.ndindex(*f.sizes):
        out.write(",".join([str(i) for i in index] + [_fmt(f.values[index])]) + "\n")
    return out.getvalue()


def from_csv(text: str) -> GridFunction:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# fraclap-grid"):
        raise ValueError("missing '# fraclap-grid' header line")
    meta = dict(tok.split("=", 1) for tok in lines[0].split()[3:])
    dims = int(meta["dims"])
    sizes = tuple(int(k) for k in meta["sizes"].split("x"))
    period = tuple(float(p) for p in meta["period"].split(","))
    if len(sizes) != dims or len(period) != dims:
        raise ValueError("header dims disagree with sizes/period")
    values = np.full(sizes, np.nan)
    rows = [ln for ln in lines[2:] if ln.strip()]
    if len(rows) != int(np.prod(sizes)):
        raise ValueError(f"expected {int(np.prod(sizes))} rows, found {len(rows)}")
    for row in rows:
        *index, value = row.split(",")
        values[tuple(int(i) for i in index)] = float(value)
    return GridFunction(values, period)


def to_bytes(f: GridFunction) -> bytes:
    head = MAGIC + struct.pack(f"<II{f.dims}I{f.dims}d", VERSION, f.dims, *f.sizes, *f.period)
    return head + np.ascontiguousarray(f.values, dtype="<f8").tobytes()


def from_bytes(blob: bytes) -> GridFunction:
    if blob[:4] != MAGIC:
        raise ValueError("bad magic; not an FRLP grid file")
    version, dims = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise ValueError(f"unsupported FRLP version {version}")
    offset = 12
    sizes = struct.unpack_from(f"<{dims}I", blob, offset)
    offset += 4 * dims
    period = struct.unpack_from(f"<{dims}d", blob, offset)
    offset += 8 * dims
    count = int(np.prod(sizes))
    if len(blob) != offset + 8 * count:
        raise ValueError(f"payload holds {(len(blob) - offset) / 8:g} samples, expected {count}")
    values = np.frombuffer(blob, dtype="<f8", offset=offset, count=count).reshape(sizes)
    return GridFunction(values.astype(float), period)


def save(f: GridFunction, path) -> None:
    path = Path(path)
    if path.suffix == ".csv":
        path.write_text(to_csv(f))
    else:
        path.write_bytes(to_bytes(f))


def load(path) -> GridFunction:
    path = Path(path)
    if path.suffix == ".csv":
        return from_csv(path.read_text())
    return from_bytes(path.read_bytes())
