"""Fixed chaotic reservoir: construction, state update and readout."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .config import ExperimentConfig
from .rng import SeededRng

SNAPSHOT_VERSION = 1


class NumericalError(ArithmeticError):
    """Non-finite value in the dynamics; ``step`` is the offending index."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class DimensionError(ValueError):
    pass


@dataclass
class SparseMatrix:
    """Square CSR matrix; built from (row, col, value) triplets."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    _csr: sparse.csr_array | None = field(default=None, repr=False, compare=False)
    _dense: np.ndarray | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_triplets(cls, n, rows, cols, values) -> "SparseMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if rows.size and (rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n):
            raise DimensionError(f"triplet index out of range for N={n}")
        if not np.all(np.isfinite(values)) or np.any(values == 0):
            raise ValueError("sparse values must be finite and nonzero")
        flat = rows * n + cols
        if np.unique(flat).size != flat.size:
            raise ValueError("duplicate (row, col) triplet")
        order = np.argsort(flat, kind="stable")
        rows, cols, values = rows[order], cols[order], values[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        return cls(n, indptr, cols, values)

    @classmethod
    def from_dense(cls, dense) -> "SparseMatrix":
        dense = np.asarray(dense, dtype=np.float64)
        rows, cols = np.nonzero(dense)
        return cls.from_triplets(dense.shape[0], rows, cols, dense[rows, cols])

    def triplets(self):
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        return rows, self.indices.copy(), self.data.copy()

    @property
    def nnz(self) -> int:
        return int(self.data.size)

    def csr(self) -> sparse.csr_array:
        if self._csr is None:
            self._csr = sparse.csr_array((self.data, self.indices, self.indptr),
                                         shape=(self.n, self.n))
        return self._csr

    def to_dense(self) -> np.ndarray:
        return self.csr().toarray()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        if self.n <= 32:
            if self._dense is None:
                self._dense = self.to_dense()
            return self._dense @ x
        return self.csr() @ x


@dataclass
class EsnModel:
    W: SparseMatrix
    W_in: np.ndarray
    W_fb: np.ndarray
    W_out: np.ndarray
    connectivity: float
    chaos_factor: float
    leak_rate: float
    leak_uses_current_x: bool = False

    @property
    def n(self) -> int:
        return self.W.n


@dataclass
class ReservoirState:
    x: np.ndarray
    r: np.ndarray
    z_prev: float = 0.0
    k: int = 0

    @classmethod
    def zeros(cls, n: int) -> "ReservoirState":
        return cls(np.zeros(n), np.zeros(n), 0.0, 0)


def build_esn(config: ExperimentConfig, rng: SeededRng | None = None) -> EsnModel:
    """Sparse uniform W scaled by g, uniform input/feedback weights, zero readout."""
    rng = rng or SeededRng(config.seed)
    n, p, g = config.n_neurons, config.connectivity, config.chaos_factor

    gen = rng.substream("W")
    mask = gen.random((n, n)) < p
    vals = gen.uniform(-0.5, 0.5, size=(n, n))
    # a draw of exactly 0.0 would vanish from the sparse pattern
    mask &= vals != 0.0
    rows, cols = np.nonzero(mask)
    W = SparseMatrix.from_triplets(n, rows, cols, g * vals[rows, cols])

    W_in = rng.substream("W_in").uniform(-1.0, 1.0, size=n)
    W_fb = rng.substream("W_fb").uniform(-1.0, 1.0, size=n)
    return EsnModel(W, W_in, W_fb, np.zeros(n), p, g, config.leak_rate,
                    config.leak_uses_current_x)


def reservoir_step(model: EsnModel, state: ReservoirState, u: float,
                   z_prev: float | None = None) -> ReservoirState:
    """One update of x (tanh network) and r (leaky activation).

    By default r is leaked toward the previous x; with
    ``model.leak_uses_current_x`` it uses the freshly computed x.
    """
    if z_prev is None:
        z_prev = state.z_prev
    if state.x.shape != (model.n,):
        raise DimensionError(f"state has length {state.x.shape}, model N={model.n}")
    x = np.tanh(model.W_in * u + model.W.matvec(state.x) + model.W_fb * z_prev)
    a = model.leak_rate
    src = x if model.leak_uses_current_x else state.x
    r = (1.0 - a) * state.r + a * src
    k = state.k + 1
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(r))):
        raise NumericalError("non-finite reservoir state", k)
    return ReservoirState(x, r, float(z_prev), k)


def readout(model: EsnModel, r: np.ndarray) -> float:
    if r.shape != model.W_out.shape:
        raise DimensionError(f"activation length {r.shape} != readout length {model.W_out.shape}")
    return float(r @ model.W_out)


def spectral_diagnostic(model: EsnModel | SparseMatrix | np.ndarray, tol: float = 1e-3,
                        max_iter: int = 64000, seed: int = 0) -> float | None:
    """Spectral radius of W by power iteration.

    Random reservoirs have many eigenvalues of nearly maximal modulus,
    often a complex pair on top, so the iterate never settles on an
    eigenvector.  The norm growth still does: the estimate is the mean
    log-growth of ``||W^m v||`` over the second half of ``m`` iterations,
    doubling ``m`` until two estimates agree within ``tol``.  Returns None
    if that has not happened by ``max_iter`` products.
    """
    W = model.W if isinstance(model, EsnModel) else model
    if isinstance(W, SparseMatrix):
        mv, n = W.matvec, W.n
    else:
        W = np.asarray(W, dtype=np.float64)
        mv, n = W.__matmul__, W.shape[0]
    v = np.random.default_rng(seed).standard_normal(n)
    v /= np.linalg.norm(v)
    logs = [0.0]
    m, prev = 256, None
    while m <= max_iter:
        while len(logs) <= m:
            v = mv(v)
            nrm = np.linalg.norm(v)
            if nrm == 0.0:
                return 0.0
            logs.append(logs[-1] + np.log(nrm))
            v /= nrm
        est = float(np.exp((logs[m] - logs[m // 2]) / (m - m // 2)))
        if prev is not None and abs(est - prev) <= tol * est:
            return est
        prev, m = est, 2 * m
    return None


def save_model(path, model: EsnModel, state: ReservoirState | None = None) -> None:
    """Write a versioned ``.npz`` snapshot; see README for the layout."""
    rows, cols, vals = model.W.triplets()
    arrays = dict(
        format_version=np.int64(SNAPSHOT_VERSION),
        n=np.int64(model.n),
        connectivity=np.float64(model.connectivity),
        chaos_factor=np.float64(model.chaos_factor),
        leak_rate=np.float64(model.leak_rate),
        leak_uses_current_x=np.bool_(model.leak_uses_current_x),
        W_rows=rows, W_cols=cols, W_vals=vals,
        W_in=model.W_in, W_fb=model.W_fb, W_out=model.W_out,
    )
    if state is not None:
        arrays.update(state_x=state.x, state_r=state.r,
                      state_z=np.float64(state.z_prev), state_k=np.int64(state.k))
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_model(path) -> tuple[EsnModel, ReservoirState | None]:
    with np.load(path) as d:
        version = int(d["format_version"])
        if version != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        n = int(d["n"])
        W = SparseMatrix.from_triplets(n, d["W_rows"], d["W_cols"], d["W_vals"])
        model = EsnModel(W, d["W_in"].copy(), d["W_fb"].copy(), d["W_out"].copy(),
                         float(d["connectivity"]), float(d["chaos_factor"]),
                         float(d["leak_rate"]), bool(d["leak_uses_current_x"]))
        state = None
        if "state_x" in d:
            state = ReservoirState(d["state_x"].copy(), d["state_r"].copy(),
                                   float(d["state_z"]), int(d["state_k"]))
    return model, state
