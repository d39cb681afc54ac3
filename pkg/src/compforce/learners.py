"""Online readout training rules.

Three rules update the readout ``w`` from the activation ``r(k)`` and the
target ``f(k)``:

* ``rls_force_step``: recursive least squares FORCE update,
  ``w <- w - e * P r`` with the rank-1 update of ``P``.
* ``composite_rls_step``: the RLS update plus a filtered regression error
  ``E = Omega w - Y`` built from exponentially weighted ``r r^T`` and
  ``r f``.
* ``composite_lms_step``: the same composite error with a scalar rate in
  place of ``P``.

All functions return new state objects and leave their inputs untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .reservoir import DimensionError, NumericalError

# composite_sign -> multiplier on beta*P E in  w <- w - (e P r + sign * beta P E)
SIGN = {"paper": -1.0, "gradient": 1.0}


@dataclass(frozen=True)
class RlsState:
    P: np.ndarray
    a: float

    @classmethod
    def initial(cls, n: int, a: float) -> "RlsState":
        return cls(np.eye(n) / a, float(a))


@dataclass(frozen=True)
class FilterBank:
    """Exponentially filtered ``r r^T`` (``Omega``) and ``r f`` (``Y``)."""

    Omega: np.ndarray
    Y: np.ndarray
    lam: float

    @classmethod
    def zeros(cls, n: int, lam: float) -> "FilterBank":
        if not 0.0 < lam <= 1.0:
            raise ValueError(f"filter constant must lie in (0, 1], got {lam}")
        return cls(np.zeros((n, n)), np.zeros(n), float(lam))


@dataclass(frozen=True)
class LearnerOutput:
    W_out_new: np.ndarray
    e_prior: float
    e_posterior: float
    E_norm: float = 0.0
    rls: RlsState | None = None
    bank: FilterBank | None = None


def _check_len(r, w):
    if r.shape != w.shape:
        raise DimensionError(f"length mismatch: r {r.shape} vs w {w.shape}")


def prior_error(r: np.ndarray, w_out: np.ndarray, f: float) -> float:
    """Output error before the update, ``r^T w - f``."""
    _check_len(r, w_out)
    return float(r @ w_out) - f


def rls_update_P(state: RlsState, r: np.ndarray) -> RlsState:
    P = state.P
    Pr = P @ r
    denom = 1.0 + r @ Pr
    if not np.isfinite(denom):
        raise NumericalError("non-finite RLS denominator")
    P = P - np.outer(Pr, Pr) / denom
    return RlsState(0.5 * (P + P.T), state.a)


def rls_force_step(w_out: np.ndarray, rls: RlsState, r: np.ndarray, f: float) -> LearnerOutput:
    e = prior_error(r, w_out, f)
    rls = rls_update_P(rls, r)
    w = w_out - e * (rls.P @ r)
    return LearnerOutput(w, e, float(r @ w) - f, 0.0, rls=rls)


def filter_update(bank: FilterBank, r: np.ndarray, f: float) -> FilterBank:
    lam = bank.lam
    Omega = (1.0 - lam) * bank.Omega + lam * np.outer(r, r)
    Y = (1.0 - lam) * bank.Y + lam * f * r
    return FilterBank(Omega, Y, lam)


def generalized_error(bank: FilterBank, w_out: np.ndarray) -> np.ndarray:
    """``E = Omega w - Y``, evaluated with the weights passed in."""
    if bank.Y.shape != w_out.shape:
        raise DimensionError(f"filter bank length {bank.Y.shape} vs w {w_out.shape}")
    return bank.Omega @ w_out - bank.Y


def composite_rls_step(w_out: np.ndarray, rls: RlsState, bank: FilterBank, r: np.ndarray,
                       f: float, beta: float, sign: str = "paper") -> LearnerOutput:
    """RLS step with the filtered regression error added to the correction.

    ``sign="paper"`` gives ``w - P (e r - beta E)``; ``sign="gradient"``
    gives ``w - P (e r + beta E)``, which descends the filtered error.
    With ``beta == 0`` the result is bit-identical to ``rls_force_step``.
    """
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    e = prior_error(r, w_out, f)
    bank = filter_update(bank, r, f)
    E = generalized_error(bank, w_out)
    rls = rls_update_P(rls, r)
    step = e * (rls.P @ r)
    if beta != 0.0:
        step = step + (SIGN[sign] * beta) * (rls.P @ E)
    w = w_out - step
    return LearnerOutput(w, e, float(r @ w) - f, float(np.linalg.norm(E)), rls=rls, bank=bank)


def composite_lms_step(w_out: np.ndarray, bank: FilterBank, r: np.ndarray, f: float,
                       beta: float, eta: float, sign: str = "paper") -> LearnerOutput:
    """Composite delta rule: the RLS composite update with ``P`` replaced by ``eta``."""
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    e = prior_error(r, w_out, f)
    bank = filter_update(bank, r, f)
    E = generalized_error(bank, w_out)
    step = e * r
    if beta != 0.0:
        step = step + (SIGN[sign] * beta) * E
    w = w_out - eta * step
    return LearnerOutput(w, e, float(r @ w) - f, float(np.linalg.norm(E)), bank=bank)
