"""Experiment orchestration: training phase, free-run prediction, metrics."""

from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import _kernels
from .config import ExperimentConfig
from .learners import (SIGN, FilterBank, LearnerOutput, RlsState, composite_lms_step,
                       composite_rls_step, rls_force_step)
from .reservoir import EsnModel, NumericalError, ReservoirState, build_esn, reservoir_step
from .rng import SeededRng
from .signals import mackey_glass

log = logging.getLogger(__name__)

N_WEIGHT_SAMPLES = 10
N_NODE_SAMPLES = 3
RUN_COLUMNS = (["step", "phase", "f", "z", "e", "w_norm"]
               + [f"w_{i}" for i in range(N_WEIGHT_SAMPLES)]
               + [f"node_{i}" for i in range(N_NODE_SAMPLES)])
SUMMARY_COLUMNS = ["seed", "method", "train_mse", "predict_mse", "converge_step", "diverged"]
CONVERGENCE_TOL = 1e-3


@dataclass
class RunRecord:
    config: ExperimentConfig
    f: np.ndarray
    z: np.ndarray
    e: np.ndarray
    w_norm: np.ndarray
    w_samples: np.ndarray
    nodes: np.ndarray
    weight_indices: np.ndarray
    node_indices: np.ndarray
    train_mse: float
    predict_mse: float | None
    duration: float
    diverged_at: int | None = None
    model: EsnModel | None = field(default=None, repr=False)
    final_state: ReservoirState | None = field(default=None, repr=False)
    backend: str = "numpy"

    @property
    def train_steps(self) -> int:
        return self.config.train_steps

    @property
    def diverged(self) -> bool:
        return self.diverged_at is not None

    def phase(self, k: int) -> str:
        return "train" if k < self.config.train_steps else "predict"


class StepInfo(NamedTuple):
    """What the numpy backend hands to an observer after each step."""

    k: int
    phase: str
    state: ReservoirState
    output: LearnerOutput | None
    rls_prev: RlsState | None
    rls: RlsState | None
    bank: FilterBank | None
    w_out: np.ndarray


def mse(trace_a, trace_b) -> float:
    a = np.asarray(trace_a, dtype=np.float64)
    b = np.asarray(trace_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("mse of empty traces")
    return float(np.mean((a - b) ** 2))


def sample_indices(config: ExperimentConfig) -> tuple[np.ndarray, np.ndarray]:
    """Weight and node indices to trace, drawn from the run's seed."""
    gen = SeededRng(config.seed).substream("samples")
    n = config.n_neurons
    w_idx = np.sort(gen.choice(n, N_WEIGHT_SAMPLES, replace=n < N_WEIGHT_SAMPLES))
    node_idx = np.sort(gen.choice(n, N_NODE_SAMPLES, replace=n < N_NODE_SAMPLES))
    return w_idx.astype(np.int64), node_idx.astype(np.int64)


def resolve_backend(backend: str = "auto") -> str:
    if backend == "auto":
        return "numba" if _kernels.NUMBA_ENABLED else "numpy"
    if backend == "numba" and not _kernels.HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    return backend


def run_experiment(config: ExperimentConfig, backend: str = "auto",
                   observer: Callable[[StepInfo], None] | None = None) -> RunRecord:
    """Train online for ``train_steps``, then free-run for ``predict_steps``.

    During training the target drives the input and the learner updates
    the readout each step; the output fed back is computed with the
    updated weights.  Afterwards the weights are frozen and the output
    is fed back (and, in self-feedback mode, also used as input).

    A run whose output goes non-finite is not an error: the record comes
    back with ``diverged_at`` set and NaN metrics.
    """
    backend = "numpy" if observer is not None else resolve_backend(backend)
    t0 = time.perf_counter()
    total = config.train_steps + config.predict_steps
    f = mackey_glass(total, config.mgs_tau, config.mgs_init, skip=config.washout_steps)
    model = build_esn(config)
    w_idx, node_idx = sample_indices(config)

    z = np.full(total, np.nan)
    e = np.full(total, np.nan)
    w_norm = np.full(total, np.nan)
    w_samples = np.full((total, w_idx.size), np.nan)
    nodes = np.full((total, node_idx.size), np.nan)
    traces = (z, e, w_norm, w_samples, nodes)

    if backend == "numba":
        diverged, state = _run_numba(config, model, f, w_idx, node_idx, traces)
    else:
        # a blow-up is detected and reported below; the overflow chatter is noise
        with np.errstate(over="ignore", invalid="ignore"):
            diverged, state = _run_numpy(config, model, f, w_idx, node_idx, traces, observer)

    T = config.train_steps
    if diverged is not None:
        log.warning("run diverged at step %d (method=%s seed=%d)", diverged, config.method,
                    config.seed)
        train_mse = float("nan")
        predict_mse = float("nan") if config.predict_steps else None
    else:
        train_mse = mse(z[:T], f[:T]) if T else float("nan")
        predict_mse = mse(z[T:], f[T:]) if config.predict_steps else None
    return RunRecord(config, f, z, e, w_norm, w_samples, nodes, w_idx, node_idx,
                     train_mse, predict_mse, time.perf_counter() - t0, diverged,
                     model, state, backend)


def _run_numba(config, model, f, w_idx, node_idx, traces):
    n = model.n
    w = model.W_out.copy()
    x = np.zeros(n)
    r = np.zeros(n)
    code = _kernels.METHOD_CODES[config.method]
    signed_beta = SIGN[config.composite_sign] * config.composite_gain
    res = _kernels.run_loop(
        model.W.indptr, model.W.indices, model.W.data, model.W_in, model.W_fb, f,
        config.train_steps, code, config.leak_rate, config.leak_uses_current_x,
        config.rls_init, signed_beta, config.filter_const, config.lms_rate,
        config.autonomous_input == "self-feedback", w_idx, node_idx, *traces, w, x, r)
    model.W_out = w
    z = traces[0]
    last = res if res >= 0 else f.size - 1
    state = ReservoirState(x, r, float(z[last]) if f.size else 0.0, last + 1)
    return (None if res < 0 else int(res)), state


def _run_numpy(config, model, f, w_idx, node_idx, traces, observer):
    z_tr, e_tr, wn_tr, ws_tr, nd_tr = traces
    n = model.n
    T = config.train_steps
    self_feedback = config.autonomous_input == "self-feedback"
    rls = RlsState.initial(n, config.rls_init) if config.method != "composite-lms" else None
    bank = (FilterBank.zeros(n, config.filter_const)
            if config.method != "rls-force" else None)
    state = ReservoirState.zeros(n)
    w = model.W_out
    z = 0.0
    for k in range(f.size):
        fk = float(f[k])
        u = fk if (k < T or not self_feedback) else z
        try:
            state = reservoir_step(model, state, u, z)
        except NumericalError:
            model.W_out = w
            return k, state
        out = None
        rls_prev = rls
        if k < T:
            if config.method == "rls-force":
                out = rls_force_step(w, rls, state.r, fk)
            elif config.method == "composite-rls":
                out = composite_rls_step(w, rls, bank, state.r, fk, config.composite_gain,
                                         config.composite_sign)
            else:
                out = composite_lms_step(w, bank, state.r, fk, config.composite_gain,
                                         config.lms_rate, config.composite_sign)
            w = out.W_out_new
            rls = out.rls if out.rls is not None else rls
            bank = out.bank if out.bank is not None else bank
        z = float(state.r @ w)
        e_tr[k] = out.e_prior if out is not None else z - fk
        z_tr[k] = z
        nrm = float(np.sqrt(w @ w))
        wn_tr[k] = nrm
        ws_tr[k] = w[w_idx]
        nd_tr[k] = state.r[node_idx]
        if observer is not None:
            observer(StepInfo(k, "train" if k < T else "predict", state, out, rls_prev, rls,
                              bank, w))
        if not (np.isfinite(z) and np.isfinite(nrm)):
            model.W_out = w
            return k, state
    model.W_out = w
    state = ReservoirState(state.x, state.r, z, state.k)
    return None, state


def convergence_step(record: RunRecord | np.ndarray, rel_tol: float = CONVERGENCE_TOL,
                     window: int = 100) -> int | None:
    """Earliest training step after which ||W_out|| has settled.

    Settled means every later ``window``-step span changes the norm by
    less than ``rel_tol`` relative to its starting value:
    ``|n[j+window] - n[j]| < rel_tol * |n[j]|`` for all ``j >= k``.
    Returns None if the last span still moves.
    """
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    if isinstance(record, RunRecord):
        norms = record.w_norm[:record.train_steps]
    else:
        norms = np.asarray(record, dtype=np.float64)
    if norms.size <= window:
        return 0 if norms.size else None
    start, end = norms[:-window], norms[window:]
    delta = np.abs(end - start)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(delta == 0.0, 0.0, delta / np.abs(start))
    bad = np.flatnonzero(~(rel < rel_tol))
    if bad.size == 0:
        return 0
    if bad[-1] == rel.size - 1:
        return None
    return int(bad[-1] + 1)


@dataclass
class MethodStats:
    method: str
    n_runs: int
    n_diverged: int
    train_median: float
    train_min: float
    train_max: float
    predict_median: float
    predict_min: float
    predict_max: float


@dataclass
class SweepResult:
    records: list[RunRecord]
    stats: dict[str, MethodStats]


def _run_one(args):
    config, backend = args
    return run_experiment(config, backend)


def aggregate(records: list[RunRecord]) -> dict[str, MethodStats]:
    stats = {}
    for method in dict.fromkeys(r.config.method for r in records):
        rs = [r for r in records if r.config.method == method]
        ok = [r for r in rs if not r.diverged]
        tr = np.array([r.train_mse for r in ok], dtype=np.float64)
        pr = np.array([r.predict_mse for r in ok if r.predict_mse is not None], dtype=np.float64)

        def s(a, fn):
            return float(fn(a)) if a.size else float("nan")

        stats[method] = MethodStats(method, len(rs), len(rs) - len(ok),
                                    s(tr, np.median), s(tr, np.min), s(tr, np.max),
                                    s(pr, np.median), s(pr, np.min), s(pr, np.max))
    return stats


def seed_sweep(config: ExperimentConfig, seeds, methods=None, jobs: int = 1,
               backend: str = "auto") -> SweepResult:
    """Independent runs over ``seeds`` (and optionally several methods)."""
    seeds = list(seeds)
    if not seeds:
        raise ValueError("seed list is empty")
    methods = list(methods) if methods else [config.method]
    configs = [config.replace(seed=s, method=m) for m in methods for s in seeds]
    backend = resolve_backend(backend)
    if jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            records = list(ex.map(_run_one, [(c, backend) for c in configs]))
    else:
        records = [run_experiment(c, backend) for c in configs]
    return SweepResult(records, aggregate(records))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_run_csv(record: RunRecord, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUN_COLUMNS)
        for k in range(record.f.size):
            w.writerow([k, record.phase(k)]
                       + [_fmt(v) for v in (record.f[k], record.z[k], record.e[k],
                                            record.w_norm[k])]
                       + [_fmt(v) for v in record.w_samples[k]]
                       + [_fmt(v) for v in record.nodes[k]])


def read_run_csv(path) -> dict[str, np.ndarray]:
    """Columns of a CSV as arrays; non-numeric columns stay as strings."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    out = {}
    for j, name in enumerate(header):
        col = [row[j] for row in body]
        if name == "step":
            out[name] = np.array(col, dtype=np.int64)
            continue
        try:
            out[name] = np.array([float(v) if v else np.nan for v in col])
        except ValueError:
            out[name] = np.array(col)
    return out


def summary_row(record: RunRecord) -> list[str]:
    return [str(record.config.seed), record.config.method, _fmt(record.train_mse),
            _fmt(record.predict_mse), _fmt(convergence_step(record)),
            "true" if record.diverged else "false"]


def write_summary_csv(records, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for r in records:
            w.writerow(summary_row(r))
