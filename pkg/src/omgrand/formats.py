"""Plain-text file formats.

DACP file::

    n0=0.01
    avg_power=4
    peak=6
    0 0.0123...
    0.6 0.1646...

Constellation file::

    k=128
    n0=0.01
    avg_power=4
    peak=6
    0 0 0 0.0135 0 0110
    1 0.6 0 0.0235 1 10011
    ...

Columns are ``index re im probability ring_index codeword``; the codeword is
absent until a shaping code has been assigned.  Lines starting with ``#`` are
metadata comments (``# key=value``) and are carried through.
"""
import numpy as np

from .constellation import Constellation, Ring
from .dacp import AmplitudeGrid, DacpDistribution

_FMT = "{:.17g}"


class FormatError(ValueError):
    pass


def _split(lines):
    header, meta, body = {}, {}, []
    for raw in lines:
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            if key:
                meta[key.strip()] = val.strip()
        elif "=" in line and not body:
            key, _, val = line.partition("=")
            header[key.strip()] = val.strip()
        else:
            body.append(line.split())
    return header, meta, body


def _need(header, *keys):
    try:
        return [float(header[k]) for k in keys]
    except KeyError as exc:
        raise FormatError(f"missing header field {exc.args[0]!r}") from None


def write_dacp(path, dist, n0, meta=None):
    lines = [f"# {k}={v}" for k, v in (meta or {}).items()]
    lines += [
        f"n0={_FMT.format(n0)}",
        f"avg_power={_FMT.format(dist.avg_power)}",
        f"peak={_FMT.format(dist.grid.peak)}",
    ]
    lines += [f"{_FMT.format(a)} {_FMT.format(p)}" for a, p in zip(dist.amplitudes, dist.probs)]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_dacp(path):
    """Returns ``(DacpDistribution, n0, meta)``."""
    with open(path) as fh:
        header, meta, body = _split(fh)
    n0, avg_power, peak = _need(header, "n0", "avg_power", "peak")
    if not body or any(len(row) != 2 for row in body):
        raise FormatError("DACP body must be 'amplitude probability' rows")
    data = np.array(body, dtype=np.float64)
    grid = AmplitudeGrid(data[:, 0])
    if abs(grid.peak - peak) > 1e-9 * max(1.0, peak):
        raise FormatError("peak header disagrees with the largest amplitude")
    return DacpDistribution(grid, data[:, 1], avg_power), n0, meta


def write_constellation(path, cons, meta=None):
    words = cons.codewords or [""] * len(cons)
    lines = [f"# {k}={v}" for k, v in (meta or {}).items()]
    lines += [
        f"k={len(cons)}",
        f"n0={_FMT.format(cons.n0)}",
        f"avg_power={_FMT.format(cons.avg_power)}",
        f"peak={_FMT.format(cons.peak_m)}",
    ]
    for i, (x, p, r, w) in enumerate(zip(cons.points, cons.probs, cons.ring_index, words)):
        row = f"{i} {_FMT.format(x.real)} {_FMT.format(x.imag)} {_FMT.format(p)} {r}"
        lines.append(row + (f" {w}" if w else ""))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_constellation(path):
    """Returns ``(Constellation, meta)``; ``cons.codewords`` is None when the column is empty."""
    with open(path) as fh:
        header, meta, body = _split(fh)
    k, n0, avg_power, peak = _need(header, "k", "n0", "avg_power", "peak")
    if len(body) != int(k):
        raise FormatError(f"header says k={int(k)} but {len(body)} points follow")
    widths = {len(row) for row in body}
    if not widths <= {5, 6} or len(widths) != 1:
        raise FormatError("constellation rows need 5 or 6 columns, consistently")
    idx = np.array([int(row[0]) for row in body])
    if not np.array_equal(idx, np.arange(len(body))):
        raise FormatError("point indices must run 0..k-1 in order")
    pts = np.array([float(r[1]) + 1j * float(r[2]) for r in body])
    probs = np.array([float(r[3]) for r in body])
    ring_idx = np.array([int(r[4]) for r in body])
    words = [r[5] for r in body] if widths == {6} else None
    rings = []
    for j in range(ring_idx.max() + 1):
        members = pts[ring_idx == j]
        amp = float(np.abs(members).mean())
        count = members.size
        off = 0.0 if amp == 0 else float(np.mod(np.angle(members[0]), 2 * np.pi / count))
        rings.append(Ring(amp, count, off))
    cons = Constellation(pts, probs, ring_idx, rings, peak_m=peak, n0=n0, avg_power=avg_power,
                         codewords=words)
    return cons, meta
