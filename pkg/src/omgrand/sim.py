"""Monte Carlo link simulation and BER/SER sweeps.

Every frame draws its randomness from its own counter-based stream keyed by
``(seed, snr index, frame index)``, and frames are grouped into fixed batches
whose results are folded in batch order.  The stop rule is only checked at
batch boundaries, so a sweep's output depends on the seed alone, not on how
batches were spread over worker processes.
"""
import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
import math

import numpy as np

from . import framing, kernels
from .channel import DomainError
from .demod import candidate_csr
from .qam import BITS_PER_SYMBOL, QamGrid, qam_decide, qam_modulate
from .shaping import ShapingCode

SCHEMES = ("om-grand", "om-nocorrect", "qam128")
WORKERS_ENV = "OMGRAND_WORKERS"
BATCH_BITS = 1 << 17
QAM_FRAME_SYMBOLS = 1024
_AUX_STREAM = 2 ** 32 - 1


def default_workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


@dataclass
class FrameCounts:
    frames: int = 0
    symbols: int = 0
    bits: int = 0
    symbol_errors: int = 0
    bit_errors: int = 0
    indel_events: int = 0
    corrections_attempted: int = 0
    corrections_succeeded: int = 0

    def __iadd__(self, other):
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))
        return self


@dataclass
class SimRecord:
    es_n0_db: float
    eb_n0_db: float
    frames: int
    symbols: int
    bits: int
    symbol_errors: int
    bit_errors: int
    indel_events: int
    corrections_attempted: int
    corrections_succeeded: int
    ser: float
    ber: float

    @classmethod
    def from_counts(cls, es_n0_db, eb_n0_db, c):
        return cls(
            float(es_n0_db), float(eb_n0_db), c.frames, c.symbols, c.bits, c.symbol_errors,
            c.bit_errors, c.indel_events, c.corrections_attempted, c.corrections_succeeded,
            c.symbol_errors / c.symbols if c.symbols else 0.0,
            c.bit_errors / c.bits if c.bits else 0.0,
        )

    @property
    def ber_stderr(self):
        return math.sqrt(max(self.ber * (1 - self.ber), 0.0) / self.bits) if self.bits else math.inf


@dataclass
class SweepConfig:
    scheme: str
    snr_db: list
    constellation: str = None
    snr_kind: str = "es"  # "es" or "eb"
    min_bit_errors: int = 100
    max_bits: int = 10 ** 8
    seed: int = 0
    workers: int = field(default_factory=default_workers)
    a_param: float = None  # None: tune over a_grid
    a_grid: tuple = framing.DEFAULT_A_GRID
    tune_bits: int = 10 ** 6
    indel_trials: int = 10 ** 6

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {self.scheme!r}")
        if self.snr_kind not in ("es", "eb"):
            raise DomainError("snr_kind must be 'es' or 'eb'")
        self.snr_db = [float(s) for s in np.atleast_1d(self.snr_db)]
        if not self.snr_db:
            raise DomainError("empty SNR list")
        if self.min_bit_errors < 1 or self.max_bits < 1 or self.workers < 1:
            raise DomainError("stop rule and worker count must be positive")
        if self.scheme != "qam128" and not self.constellation:
            raise DomainError(f"scheme {self.scheme} needs a constellation file")


def frame_rng(seed, snr_index, frame_index):
    ss = np.random.SeedSequence([int(seed), int(snr_index), int(frame_index)])
    return np.random.Generator(np.random.Philox(ss))


# --------------------------------------------------------------------------
# Optimal-modulation link
# --------------------------------------------------------------------------

class OmLink:
    """Constellation plus shaping code with the flat arrays the kernels need."""

    def __init__(self, cons, code=None):
        if code is None:
            if not cons.codewords:
                raise DomainError("constellation has no codeword column")
            code = ShapingCode(cons.codewords, cons.probs)
        if len(code) != len(cons):
            raise DomainError("code and constellation sizes differ")
        self.cons = cons
        self.code = code
        self.log_prior = np.log(cons.probs)
        self.cand_ptr, self.cand_idx = candidate_csr(cons)
        self.cw_bits = np.zeros((len(code), code.max_length), dtype=np.uint8)
        for s, w in enumerate(code.codewords):
            self.cw_bits[s, :len(w)] = [int(c) for c in w]

    def transmit(self, msg, msg_off):
        return kernels.shape_frames(msg, msg_off, self.code.children, self.code.symbol_of)

    def receive(self, y, sym_off, tx, msg, msg_off, n0, correct=True):
        """Demodulate frames and count errors against what was sent."""
        code = self.code
        n_bits = int(msg_off[1] - msg_off[0])
        if np.any(np.diff(msg_off) != n_bits):
            raise DomainError("frames in one batch must share the message length")
        raw, sym, status, _ = kernels.receive_frames(
            y, sym_off, self.cons.points, self.log_prior, n0, code.lengths, code.last_one,
            self.cand_ptr, self.cand_idx, n_bits, correct)
        errors, _, _ = kernels.frame_bit_errors(sym, sym_off, self.cw_bits, code.lengths,
                                                code.last_one, msg, msg_off)
        n_frames = sym_off.size - 1
        frame_of = np.repeat(np.arange(n_frames), np.diff(sym_off))
        indel = np.bincount(frame_of, weights=code.lengths[raw] != code.lengths[tx],
                            minlength=n_frames) > 0
        attempted = status != kernels.LEN_OK if correct else np.zeros(n_frames, bool)
        return FrameCounts(
            frames=n_frames, symbols=int(tx.size), bits=int(msg.size),
            symbol_errors=int(np.count_nonzero(raw != tx)), bit_errors=int(errors.sum()),
            indel_events=int(indel.sum()), corrections_attempted=int(attempted.sum()),
            corrections_succeeded=int(np.count_nonzero(status == kernels.LEN_CORRECTED)),
        )


def _noise(rng, size, n0):
    g = rng.standard_normal((size, 2))
    return np.sqrt(n0 / 2) * (g[:, 0] + 1j * g[:, 1])


def om_batch(link, n_bits, n0, rngs, correct=True):
    """Simulate one frame per generator in ``rngs``."""
    msgs = [rng.integers(0, 2, n_bits, dtype=np.uint8) for rng in rngs]
    msg = np.concatenate(msgs)
    msg_off = np.arange(len(rngs) + 1, dtype=np.int64) * n_bits
    tx, sym_off = link.transmit(msg, msg_off)
    x = link.cons.points[tx]
    noise = np.concatenate([_noise(rng, int(sym_off[f + 1] - sym_off[f]), n0)
                            for f, rng in enumerate(rngs)])
    return link.receive(x + noise, sym_off, tx, msg, msg_off, n0, correct)


def run_frame(plan, cons, code, n0, rng, correct=True, link=None):
    """One end-to-end frame of ``plan.n_bits`` uniform message bits."""
    link = link or OmLink(cons, code)
    return om_batch(link, plan.n_bits, n0, [np.random.default_rng(rng)], correct)


def receive_frame(samples, tx_symbols, message, cons, code, n0, correct=True):
    """Error counts for one frame of given samples (transmitted symbols and message known)."""
    link = OmLink(cons, code)
    tx = np.asarray(tx_symbols, dtype=np.int64)
    msg = np.asarray(message, dtype=np.uint8)
    return link.receive(np.asarray(samples, dtype=np.complex128), np.array([0, tx.size]), tx,
                        msg, np.array([0, msg.size]), n0, correct)


def qam_batch(grid, n_symbols, n0, rngs):
    msg = np.concatenate([rng.integers(0, 2, n_symbols * BITS_PER_SYMBOL, dtype=np.uint8)
                          for rng in rngs])
    x = qam_modulate(msg, grid)
    noise = np.concatenate([_noise(rng, n_symbols, n0) for rng in rngs])
    weights = 1 << np.arange(BITS_PER_SYMBOL - 1, -1, -1)
    tx = msg.reshape(-1, BITS_PER_SYMBOL) @ weights
    rx = qam_decide(x + noise, grid)
    diff = np.bitwise_xor(tx, rx)
    bit_err = int(np.unpackbits(diff.astype(np.uint8)[:, None], axis=1).sum())
    return FrameCounts(frames=len(rngs), symbols=int(x.size), bits=int(msg.size),
                       symbol_errors=int(np.count_nonzero(diff)), bit_errors=bit_err)


# --------------------------------------------------------------------------
# Batched point runner
# --------------------------------------------------------------------------

@dataclass
class _PointJob:
    scheme: str
    seed: int
    snr_index: int
    n0: float
    frame_bits: int
    link: object = None
    grid: object = None

    @property
    def frames_per_batch(self):
        return max(1, BATCH_BITS // self.frame_bits)

    def run_batch(self, b):
        per = self.frames_per_batch
        rngs = [frame_rng(self.seed, self.snr_index, b * per + i) for i in range(per)]
        if self.scheme == "qam128":
            return qam_batch(self.grid, self.frame_bits // BITS_PER_SYMBOL, self.n0, rngs)
        return om_batch(self.link, self.frame_bits, self.n0, rngs,
                        correct=self.scheme == "om-grand")


def _run_batch(job, b):
    return job.run_batch(b)


def run_point(job, min_bit_errors, max_bits, pool=None, workers=1):
    """Fold batches in order until the stop rule holds at a batch boundary."""
    total = FrameCounts()
    b = 0
    done = lambda: total.bit_errors >= min_bit_errors or total.bits >= max_bits  # noqa: E731
    while not done():
        if pool is None:
            total += job.run_batch(b)
            b += 1
            continue
        futures = [pool.submit(_run_batch, job, b + i) for i in range(workers)]
        # results past the stopping batch are discarded so output is schedule-independent
        for fut in futures:
            counts = fut.result()
            if not done():
                total += counts
        b += workers
    return total


def simulate_plan_ber(plan, cons, code, budget_bits, seed, correct=True):
    """BER of ``plan`` measured over about ``budget_bits`` message bits."""
    link = OmLink(cons, code)
    job = _PointJob("om-grand" if correct else "om-nocorrect", seed, _AUX_STREAM,
                    framing.n0_for(cons, plan.es_n0), plan.n_bits, link=link)
    c = run_point(job, math.inf, budget_bits)
    return c.bit_errors / c.bits


# --------------------------------------------------------------------------
# Sweeps
# --------------------------------------------------------------------------

def plan_point(link, snr_db, snr_kind, a_param, seed, snr_index, a_grid=framing.DEFAULT_A_GRID,
               tune_bits=10 ** 6, indel_trials=10 ** 6):
    """FramePlan at one SNR.

    For an Es/N0 target, ``a`` is tuned at that Es/N0.  For an Eb/N0 target,
    each candidate ``a`` gets its own Es/N0 by fixed-point iteration (the
    padding overhead depends on N_s) and is scored by BER there; equal BERs
    go to the higher rate.
    """
    cons, code = link.cons, link.code
    aux = np.random.SeedSequence([int(seed), int(snr_index), _AUX_STREAM])

    cache = {}

    def p_indel(es):
        key = round(float(framing.db(es)), 3)
        if key not in cache:
            cache[key] = framing.estimate_p_indel(cons, code, es, trials=indel_trials,
                                                  rng=np.random.default_rng(aux)).p
        return cache[key]

    target = framing.undb(snr_db)
    if snr_kind == "es":
        p = p_indel(target)
        a = a_param
        if a is None:
            a, _ = framing.tune_a(cons, code, target, a_grid, tune_bits, p_indel=p, seed=seed)
        return framing.make_plan(cons, code, target, p, a)

    def eb_plan(a):
        es = target * cons.entropy_bits
        for _ in range(8):
            plan = framing.make_plan(cons, code, es, p_indel(es), a)
            new_es = target * cons.entropy_bits / (1 + 1 / plan.n_symbols)
            if abs(framing.db(new_es) - framing.db(es)) < 1e-4:
                break
            es = new_es
        return plan

    if a_param is not None:
        return eb_plan(a_param)
    best = None
    for a in sorted(a_grid):
        plan = eb_plan(a)
        key = (simulate_plan_ber(plan, cons, code, tune_bits, seed), -plan.rate)
        if best is None or key < best[0]:
            best = (key, plan)
    return best[1]


def plan_sweep(config, link):
    """FramePlans for every SNR point of an OM ``config``, as ``run_sweep`` would make them."""
    return [plan_point(link, s, config.snr_kind, config.a_param, config.seed, i, config.a_grid,
                       config.tune_bits, config.indel_trials)
            for i, s in enumerate(config.snr_db)]


def run_sweep(config, link=None, out=None, plans=None):
    """Run every SNR point of ``config``; optionally write CSV to ``out``.

    ``plans`` reuses FramePlans from an earlier sweep (one per SNR point)
    instead of planning again.  Returns ``(records, meta)``.
    """
    if plans is not None and len(plans) != len(config.snr_db):
        raise DomainError("need one plan per SNR point")
    meta = {
        "scheme": config.scheme, "seed": config.seed, "workers": config.workers,
        "stop_rule": f"min_bit_errors={config.min_bit_errors} max_bits={config.max_bits}",
        "snr_kind": config.snr_kind,
    }
    if config.scheme != "qam128":
        if link is None:
            from .formats import read_constellation

            cons, cmeta = read_constellation(config.constellation)
            link = OmLink(cons)
            if cmeta.get("converged", "true").lower() == "false":
                meta["design_converged"] = "false"
        meta["constellation"] = config.constellation
    grid = QamGrid(1.0)
    records, used = [], []
    pool = ProcessPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        for i, s in enumerate(config.snr_db):
            if config.scheme == "qam128":
                eb = framing.undb(s) if config.snr_kind == "eb" else framing.undb(s) / BITS_PER_SYMBOL
                job = _PointJob("qam128", config.seed, i, grid.n0_for_eb_n0(eb),
                                QAM_FRAME_SYMBOLS * BITS_PER_SYMBOL, grid=grid)
                es_db, eb_db = framing.db(eb * BITS_PER_SYMBOL), framing.db(eb)
            else:
                plan = plans[i] if plans is not None else plan_point(
                    link, s, config.snr_kind, config.a_param, config.seed, i, config.a_grid,
                    config.tune_bits, config.indel_trials)
                used.append(plan)
                job = _PointJob(config.scheme, config.seed, i, framing.n0_for(link.cons, plan.es_n0),
                                plan.n_bits, link=link)
                es_db, eb_db = plan.es_n0_db, plan.eb_n0_db
            counts = run_point(job, config.min_bit_errors, config.max_bits, pool, config.workers)
            records.append(SimRecord.from_counts(es_db, eb_db, counts))
    finally:
        if pool is not None:
            pool.shutdown()
    for i, plan in enumerate(used):
        meta[f"plan{i}"] = (f"es_n0_db={plan.es_n0_db:.6f} p_indel={plan.p_indel:.6g} "
                            f"a={plan.a_param:g} n_symbols={plan.n_symbols} "
                            f"n_bits={plan.n_bits} floored={plan.floored}")
    if out is not None:
        write_csv(out, records, meta)
    return records, meta


def records_to_csv(records, meta=None):
    buf = io.StringIO()
    for k, v in (meta or {}).items():
        buf.write(f"# {k}={v}\n")
    names = [f.name for f in fields(SimRecord)]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for r in records:
        row = asdict(r)
        w.writerow([repr(float(row[n])) if isinstance(row[n], float) else row[n] for n in names])
    return buf.getvalue()


def write_csv(path, records, meta=None):
    """Write atomically: the CSV appears complete or not at all."""
    text = records_to_csv(records, meta)
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def read_csv(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    meta = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k] = v
        else:
            body.append(line)
    rows = list(csv.DictReader(body))
    ints = {f.name for f in fields(SimRecord) if f.type in (int, "int")}
    recs = [SimRecord(**{k: int(v) if k in ints else float(v) for k, v in r.items()}) for r in rows]
    return recs, meta
