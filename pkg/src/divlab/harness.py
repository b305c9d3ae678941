"""Experiment runner: config merging, checkpoints, atomic CSV emission.

Every command validates its parameters before any compute, writes its
output atomically (temp file + rename), and where the computation is
segment-structured, persists progress to a checkpoint after segment
boundaries.  Checkpoints are bound to a hash of the computation
parameters (thread count and paths excluded), so a resume can only
continue the exact same computation; mismatches are refused, never
silently restarted.
"""

import hashlib
import math
import os
import pickle
import struct
import sys
import time
from dataclasses import dataclass, fields

import numpy as np

from . import aggregates, arith, ensemble, kernels, primestats
from .arith import DEFAULT_SEGMENT_SIZE
from .errors import DataCorruptionError, ParameterError

CHECKPOINT_MAGIC = b"DVL1"
CHECKPOINT_VERSION = 1

# outer-prime indices folded into one checkpointable step of `classes`
CLASS_BATCH = 256

EULER_GAMMA = float(np.euler_gamma)

PRIMESTATS_HEADER = ["experiment", "x", "z", "u", "a", "B", "alpha", "beta",
                     "value", "predicted", "ratio"]
MC_HEADER = ["experiment", "v", "z", "x", "r", "samples", "seed",
             "estimate", "stderr", "reference"]
TOTALS_HEADER = ["x", "sum_tau_phi", "sum_tau_lambda", "ratio",
                 "exponent_phi", "exponent_lambda"]
PARTITION_HEADER = ["x", "A", "k", "omega", "class", "count", "sum_tau_lambda"]
CLASS_SUMS_HEADER = ["x", "v", "z", "V_M", "W_M", "W_M_prime"]
LEMMA41_HEADER = ["x", "y", "lhs", "rhs", "envelope", "ratio"]


@dataclass
class ExperimentConfig:
    """Merged parameters for one command run.

    threads, out, and checkpoint are execution details; everything
    else defines the computation and enters the checkpoint hash.
    """

    command: str
    x: int = None
    z: float = None
    a: float = None
    r: float = None
    v: int = None
    B_max: int = None
    u: tuple = None
    samples: int = None
    seed: int = None
    y: float = None
    A: float = None
    alpha: float = None
    beta: float = None
    mode: str = None
    snapshots: tuple = None
    q: tuple = None
    out: str = None
    threads: int = 1
    segment_size: int = DEFAULT_SEGMENT_SIZE
    checkpoint: str = None
    stop_after: int = None


_NON_HASH_FIELDS = {"out", "threads", "checkpoint", "stop_after"}


def config_digest(cfg):
    """sha256 over the computation-defining parameters, canonically printed."""
    items = []
    for f in sorted(f.name for f in fields(ExperimentConfig)):
        if f in _NON_HASH_FIELDS:
            continue
        items.append("%s=%r" % (f, getattr(cfg, f)))
    return hashlib.sha256("\n".join(items).encode("utf-8")).digest()


def fmt_field(v):
    """CSV field: 17 significant digits for reals, empty for missing."""
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _atomic_write(path, data):
    tmp = path + ".tmp"
    mode = "wb" if isinstance(data, bytes) else "w"
    kw = {} if isinstance(data, bytes) else {"encoding": "utf-8", "newline": "\n"}
    with open(tmp, mode, **kw) as fh:
        fh.write(data)
    os.replace(tmp, path)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(fmt_field(c) for c in row) for row in rows)
    _atomic_write(path, "\n".join(lines) + "\n")


def save_checkpoint(path, digest, state):
    payload = (CHECKPOINT_MAGIC + struct.pack("<I", CHECKPOINT_VERSION)
               + digest + pickle.dumps(state, protocol=4))
    _atomic_write(path, payload)


def load_checkpoint(path, digest):
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 40 or data[:4] != CHECKPOINT_MAGIC:
        raise DataCorruptionError("not a divlab checkpoint: %s" % path)
    (version,) = struct.unpack("<I", data[4:8])
    if version != CHECKPOINT_VERSION:
        raise DataCorruptionError(
            "checkpoint version %d unsupported (want %d)"
            % (version, CHECKPOINT_VERSION)
        )
    if data[8:40] != digest:
        raise DataCorruptionError(
            "checkpoint %s belongs to a different configuration; "
            "refusing to resume" % path
        )
    try:
        return pickle.loads(data[40:])
    except Exception as exc:
        raise DataCorruptionError("checkpoint payload corrupt: %s" % exc)


class _Stop(Exception):
    """Graceful early stop after --stop-after-segments checkpoints."""


class Runner:
    """Per-run checkpoint and progress bookkeeping."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.digest = config_digest(cfg)
        self.ticks = 0

    def load_state(self, initial):
        if self.cfg.checkpoint and os.path.exists(self.cfg.checkpoint):
            state = load_checkpoint(self.cfg.checkpoint, self.digest)
            print("%s: resuming from %s" % (self.cfg.command, self.cfg.checkpoint),
                  file=sys.stderr)
            return state
        return initial

    def tick(self, state, label):
        print("%s: %s done" % (self.cfg.command, label), file=sys.stderr)
        self.ticks += 1
        if self.cfg.checkpoint:
            save_checkpoint(self.cfg.checkpoint, self.digest, state)
        if self.cfg.stop_after is not None and self.ticks >= self.cfg.stop_after:
            raise _Stop()

    def done(self):
        if self.cfg.checkpoint and os.path.exists(self.cfg.checkpoint):
            os.remove(self.cfg.checkpoint)


def _req(cfg, name):
    v = getattr(cfg, name)
    if v is None:
        raise ParameterError("missing required parameter: %s" % name)
    return v


def _build_table(cfg, x):
    t, _hi = primestats._ensure_table(x, None, cfg.threads, cfg.segment_size)
    return t


def _run_sieve(cfg, run):
    x = _req(cfg, "x")
    out = _req(cfg, "out")
    t = arith.build_spf_table(2, int(x) + 1, threads=cfg.threads,
                              segment_size=cfg.segment_size)
    arith.save_spf(t, out)
    return None


def _run_totals(cfg, run):
    x = int(_req(cfg, "x"))
    snaps = [int(s) for s in cfg.snapshots] if cfg.snapshots else \
        [10 ** e for e in range(1, 19) if 10 ** e <= x]
    if not snaps or snaps[-1] != x:
        snaps.append(x)
    if snaps != sorted(set(snaps)) or snaps[0] < 1 or snaps[-1] > x:
        raise ParameterError("snapshots must increase and lie in [1, x]")
    t = _build_table(cfg, x)
    state = run.load_state({"next": 1, "si": 0, "sp": 0, "sl": 0, "rows": []})
    while state["si"] < len(snaps):
        snap = snaps[state["si"]]
        for lo, b, (dp, dl, _bd, _bc) in aggregates.totals_segments(
            snap, t=t, threads=cfg.threads, segment_size=cfg.segment_size,
            start=state["next"], stop=snap + 1,
        ):
            state["sp"] += dp
            state["sl"] += dl
            state["next"] = b
            run.tick(state, "segment [%d, %d)" % (lo, b))
        state["rows"].append((snap, state["sp"], state["sl"]))
        state["si"] += 1
        state["next"] = snap + 1
    rows = []
    for xx, sp, sl in state["rows"]:
        rows.append((xx, sp, sl, sl / sp,
                     aggregates.growth_exponent(sp, xx),
                     aggregates.growth_exponent(sl, xx)))
    return TOTALS_HEADER, rows


def _run_rz(cfg, run):
    x = int(_req(cfg, "x"))
    z = float(_req(cfg, "z"))
    u = int(cfg.u[0]) if cfg.u else 1
    if (cfg.alpha is None) != (cfg.beta is None):
        raise ParameterError("alpha and beta must be given together")
    t = _build_table(cfg, x)
    state = run.load_state({"next": 2, "r": 0, "s_parts": []})
    for lo, b, r, s in primestats.rs_segments(
        x, z, u=u, t=t, threads=cfg.threads, segment_size=cfg.segment_size,
        start=state["next"],
    ):
        state["r"] += r
        state["s_parts"].append(s)
        state["next"] = b
        run.tick(state, "segment [%d, %d)" % (lo, b))
    rows = [
        ("rz", x, z, u, None, None, None, None, state["r"], None, None),
        ("sz", x, z, u, None, None, None, None, math.fsum(state["s_parts"]),
         None, None),
    ]
    if cfg.alpha is not None:
        val = primestats.slice_s_sum(x, z, cfg.alpha, cfg.beta, u=u, t=t,
                                     threads=cfg.threads,
                                     segment_size=cfg.segment_size)
        rows.append(("s_slice", x, z, u, None, None, cfg.alpha, cfg.beta,
                     val, None, None))
    return PRIMESTATS_HEADER, rows


def _run_poisson(cfg, run):
    x = int(_req(cfg, "x"))
    z = float(cfg.z) if cfg.z is not None else math.log(x)
    a = float(cfg.a) if cfg.a is not None else 2.0
    b_max = int(cfg.B_max) if cfg.B_max is not None else 2
    t = _build_table(cfg, x)
    state = run.load_state({
        "phase": 0, "next": 2,
        "rp": [0] * (b_max + 2),
        "sp": [[] for _ in range(b_max + 2)],
        "r2": 0,
    })
    if state["phase"] == 0:
        for lo, b, r_parts, s_parts in primestats.profile_segments(
            x, z, a, b_max, t=t, threads=cfg.threads,
            segment_size=cfg.segment_size, start=state["next"],
        ):
            for i in range(b_max + 2):
                state["rp"][i] += r_parts[i]
                state["sp"][i].append(s_parts[i])
            state["next"] = b
            run.tick(state, "profile segment [%d, %d)" % (lo, b))
        state["phase"] = 1
        state["next"] = 2
    for lo, b, r, _s in primestats.rs_segments(
        x, z ** a, t=t, threads=cfg.threads, segment_size=cfg.segment_size,
        start=state["next"],
    ):
        state["r2"] += r
        state["next"] = b
        run.tick(state, "threshold-z^a segment [%d, %d)" % (lo, b))
    r_total = sum(state["rp"])
    s_total = math.fsum(math.fsum(p) for p in state["sp"])
    rows = []
    lam = 2 * math.log(a)
    for B in range(b_max + 1):
        shape = lam ** B / (math.factorial(B) * a * a)
        rb = state["rp"][B]
        sb = math.fsum(state["sp"][B])
        pr_r = shape * r_total
        pr_s = shape * s_total
        rows.append(("poisson_r", x, z, None, a, B, None, None, rb, pr_r,
                     rb / pr_r if pr_r else None))
        rows.append(("poisson_s", x, z, None, a, B, None, None, sb, pr_s,
                     sb / pr_s if pr_s else None))
    rows.append(("poisson_r_tail", x, z, None, a, b_max + 1, None, None,
                 state["rp"][b_max + 1], None, None))
    rows.append(("rz", x, z, 1, None, None, None, None, r_total, None, None))
    rows.append(("rz", x, z ** a, 1, None, None, None, None, state["r2"],
                 None, None))
    law = state["r2"] / r_total
    rows.append(("rough_ratio", x, z, None, a, None, None, None, law,
                 1.0 / a, law * a))
    return PRIMESTATS_HEADER, rows


def _run_partition(cfg, run):
    x = int(_req(cfg, "x"))
    A = float(cfg.A) if cfg.A is not None else 11.0
    params = aggregates.partition_params(x, A)
    t = _build_table(cfg, x)
    state = run.load_state({"next": 1, "acc": [0] * 6})
    for lo, b, got in aggregates.partition_segments(
        x, params, t=t, threads=cfg.threads, segment_size=cfg.segment_size,
        start=state["next"],
    ):
        for i in range(6):
            state["acc"][i] += got[i]
        state["next"] = b
        run.tick(state, "segment [%d, %d)" % (lo, b))
    rows = [
        (params.x, params.A, params.k, params.omega_threshold,
         cls + 1, state["acc"][2 * cls], state["acc"][2 * cls + 1])
        for cls in range(3)
    ]
    return PARTITION_HEADER, rows


def _run_classes(cfg, run):
    x = int(_req(cfg, "x"))
    mode = cfg.mode or "sums"
    if mode not in ("sums", "tau2"):
        raise ParameterError("mode must be 'sums' or 'tau2', got %r" % (mode,))
    lnx = math.log(x)
    z = float(cfg.z) if cfg.z is not None else math.sqrt(lnx)
    t = _build_table(cfg, x)
    if mode == "tau2":
        state = run.load_state({"next": 1, "pz": [], "pz2": []})
        for lo, b, (pz, pz2) in aggregates.tau2_segments(
            x, z, t=t, threads=cfg.threads, segment_size=cfg.segment_size,
            start=state["next"],
        ):
            state["pz"].append(pz)
            state["pz2"].append(pz2)
            state["next"] = b
            run.tick(state, "segment [%d, %d)" % (lo, b))
        sum_z = math.fsum(state["pz"])
        sum_z2 = math.fsum(state["pz2"])
        shape = math.exp(2 * math.sqrt(2) * math.exp(-EULER_GAMMA / 2)
                         * math.sqrt(lnx / math.log(lnx)))
        rows = [
            ("tau2_z", x, z, None, None, None, None, None, sum_z, shape,
             sum_z / shape),
            ("tau2_z2", x, z * z, None, None, None, None, None, sum_z2,
             None, None),
        ]
        return PRIMESTATS_HEADER, rows
    # asymptotic-regime defaults: z = sqrt(ln x), v = floor(c sqrt(ln x/lnln x))
    if cfg.v is not None:
        v = int(cfg.v)
    else:
        c = math.sqrt(2) * math.exp(-EULER_GAMMA / 2)
        v = max(1, int(c * math.sqrt(lnx / math.log(lnx))))
    params = aggregates.ClassParams(x=float(x), v=v, z=z)
    tables = aggregates._class_tables(x, z, t)
    # per-outer partials are kept whole so the final fsum matches
    # aggregates.class_sums bit for bit regardless of where a resume cut in
    state = run.load_state({"oi": 0, "vp": [], "wp": [], "wpp": []})
    scan = aggregates.class_sums_scan(params, t=t, start_index=state["oi"],
                                      tables=tables)
    for oi, vp, wp, wpp in scan:
        state["vp"].append(vp)
        state["wp"].append(wp)
        state["wpp"].append(wpp)
        state["oi"] = oi + 1
        if (oi + 1) % CLASS_BATCH == 0:
            run.tick(state, "outer primes to index %d" % (oi + 1))
    row = (x, v, z, math.fsum(state["vp"]), math.fsum(state["wp"]),
           math.fsum(state["wpp"]))
    return CLASS_SUMS_HEADER, [row]


def _run_lemma41(cfg, run):
    x = int(_req(cfg, "x"))
    y = float(_req(cfg, "y"))
    if not 2 <= y <= x:
        raise ParameterError("need 2 <= y <= x, got y=%r x=%d" % (y, x))
    t = _build_table(cfg, x)
    m = int(x // y)
    state = run.load_state({"phase": 0, "next": 1, "lhs_parts": [], "rhs": 0})
    if state["phase"] == 0:
        for lo, b, part in aggregates.tau_phi_over_n_segments(
            m, t=t, threads=cfg.threads, segment_size=cfg.segment_size,
            start=state["next"],
        ):
            state["lhs_parts"].append(part)
            state["next"] = b
            run.tick(state, "small-n segment [%d, %d)" % (lo, b))
        state["phase"] = 1
        state["next"] = 1
    for lo, b, (dp, _dl, _bd, _bc) in aggregates.totals_segments(
        x, t=t, threads=cfg.threads, segment_size=cfg.segment_size,
        start=state["next"], stop=x + 1,
    ):
        state["rhs"] += dp
        state["next"] = b
        run.tick(state, "full-sum segment [%d, %d)" % (lo, b))
    lhs = math.fsum(state["lhs_parts"])
    env = math.log(x) ** 5 / x * state["rhs"]
    row = (x, y, lhs, state["rhs"], env, lhs / env)
    return LEMMA41_HEADER, [row]


def _run_simplex(cfg, run):
    v = int(_req(cfg, "v"))
    r = float(cfg.r) if cfg.r is not None else ensemble.cube_side(v)
    count = ensemble.cube_count(v, r)
    bound = 1.0 / (math.factorial(v) * r ** v)
    rows = [
        ("cube_side", v, None, None, r, None, None, r, None, None),
        ("cube_count", v, None, None, r, None, None, count, None, bound),
    ]
    return MC_HEADER, rows


def _run_sfrak(cfg, run):
    x = int(_req(cfg, "x"))
    z = float(_req(cfg, "z"))
    r = float(_req(cfg, "r"))
    v = int(_req(cfg, "v"))
    t = _build_table(cfg, x)
    if cfg.u:
        u = [int(ui) for ui in cfg.u]
        val = ensemble.s_frak_cong(v, x, z, r, u, t=t, threads=cfg.threads,
                                   segment_size=cfg.segment_size)
        name = "sfrak_cong_" + "_".join(str(ui) for ui in u)
    else:
        table = ensemble.build_slice_table(x, z, r, t=t, threads=cfg.threads,
                                           segment_size=cfg.segment_size)
        val = ensemble.s_frak(v, table)
        name = "sfrak"
    return MC_HEADER, [(name, v, z, x, r, None, None, val, None, None)]


def _run_mc(cfg, run):
    x = int(_req(cfg, "x"))
    z = float(_req(cfg, "z"))
    r = float(_req(cfg, "r"))
    v = int(_req(cfg, "v"))
    n = int(_req(cfg, "samples"))
    seed = int(_req(cfg, "seed"))
    t = _build_table(cfg, x)
    table = ensemble.build_slice_table(x, z, r, keep_primes=True, t=t,
                                       threads=cfg.threads,
                                       segment_size=cfg.segment_size)
    samples = ensemble.sample_tuples(table, v, n, seed)
    rep = ensemble.restriction_report(samples, z, t, table)
    if rep.low_precision:
        print("mc: fewer than 1000 samples, intervals are wide",
              file=sys.stderr)
    ratio, ratio_se = ensemble.u_over_s_estimate(samples, z, t)
    rows = [
        ("loss_r1", v, z, x, r, n, seed, rep.loss_r1, rep.stderr_r1, None),
        ("loss_r2", v, z, x, r, n, seed, rep.loss_r2, rep.stderr_r2, None),
        ("loss_r3", v, z, x, r, n, seed, rep.loss_r3, rep.stderr_r3, None),
        ("s0", v, z, x, r, n, seed, rep.s0, None, rep.total),
        ("u_over_s", v, z, x, r, n, seed, ratio, ratio_se, None),
    ]
    if cfg.q:
        qs = [int(qq) for qq in cfg.q]
        xq = ensemble.xq_histogram(samples, qs, z)
        for qq in qs:
            emp, ref = xq.per_q[qq]
            for k in range(v + 1):
                rows.append(("xq_q%d_k%d" % (qq, k), v, z, x, r, n, seed,
                             float(emp.get(k, 0.0)), None, ref[k]))
    return MC_HEADER, rows


def constants_table():
    """The reference constants, each as (name, value)."""
    g = EULER_GAMMA
    e_g = math.exp(-g)
    e_g2 = math.exp(-g / 2)
    return [
        ("gamma", g),
        ("exp_neg_gamma", e_g),
        ("exp_neg_half_gamma", e_g2),
        ("b1_old", e_g2 / 7),
        ("b1_new", 2 * e_g2),
        ("b2", 2 * math.sqrt(2) * e_g2),
    ]


def _run_constants(cfg, run):
    text = "".join("%s = %s\n" % (name, format(val, ".15g"))
                   for name, val in constants_table())
    if cfg.out:
        _atomic_write(cfg.out, text)
    else:
        sys.stdout.write(text)
    return None


_COMMANDS = {
    "sieve": _run_sieve,
    "totals": _run_totals,
    "rz": _run_rz,
    "poisson": _run_poisson,
    "simplex": _run_simplex,
    "sfrak": _run_sfrak,
    "mc": _run_mc,
    "partition": _run_partition,
    "classes": _run_classes,
    "lemma41": _run_lemma41,
    "constants": _run_constants,
}

_NO_OUT_OK = {"constants"}

# Commands that save and resume segment state; the rest run atomically,
# so an interrupted run writes nothing and a plain rerun is the resume.
CHECKPOINT_COMMANDS = frozenset(
    {"totals", "rz", "poisson", "partition", "classes", "lemma41"}
)


def run(cfg):
    """Execute one command; returns the process exit code."""
    if cfg.command not in _COMMANDS:
        raise ParameterError("unknown command: %s" % cfg.command)
    if cfg.threads < 1:
        raise ParameterError("threads must be >= 1, got %d" % cfg.threads)
    if cfg.segment_size < 1024:
        raise ParameterError("segment size must be >= 1024, got %d"
                             % cfg.segment_size)
    if cfg.command not in _NO_OUT_OK:
        _req(cfg, "out")
    if cfg.checkpoint and cfg.command not in CHECKPOINT_COMMANDS:
        print("%s: runs atomically, checkpoint ignored" % cfg.command,
              file=sys.stderr)
    runner = Runner(cfg)
    t0 = time.perf_counter()
    try:
        result = _COMMANDS[cfg.command](cfg, runner)
    except _Stop:
        print("%s: stopped after %d segments; rerun the same command to "
              "resume from %s" % (cfg.command, runner.ticks, cfg.checkpoint),
              file=sys.stderr)
        return 0
    if result is not None:
        header, rows = result
        out = _req(cfg, "out")
        write_csv(out, header, rows)
    runner.done()
    # wall time goes to stderr, never into the CSV: output files must be
    # byte-identical across runs and thread counts
    print("%s: wall time %.2f s" % (cfg.command, time.perf_counter() - t0),
          file=sys.stderr)
    return 0
