"""Compiled training/prediction loop.

``run_loop`` fuses reservoir update, learner update and trace recording
into one numba function.  It mirrors the step-by-step numpy path in
``harness`` operation for operation; results agree to rounding, not
bitwise, because BLAS and the explicit loops sum in different orders.

Set ``COMPFORCE_DISABLE_NUMBA=1`` to force the numpy path (or when numba
is not installed).
"""

from __future__ import annotations

import os

import numpy as np

METHOD_CODES = {"rls-force": 0, "composite-rls": 1, "composite-lms": 2}

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

HAVE_NUMBA = numba is not None
NUMBA_ENABLED = HAVE_NUMBA and os.environ.get("COMPFORCE_DISABLE_NUMBA", "").lower() not in (
    "1", "true", "yes")


def _njit(fn):
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, fastmath=False, nogil=True)(fn)


@_njit
def _symv(P, v, out):
    n = v.shape[0]
    for i in range(n):
        s = 0.0
        for j in range(n):
            s += P[i, j] * v[j]
        out[i] = s


@_njit
def run_loop(indptr, indices, data, w_in, w_fb, f, train_steps, method, leak_rate,
             leak_current, rls_init, signed_beta, lam, eta, self_feedback,
             w_idx, node_idx, z_tr, e_tr, wnorm_tr, wsamp_tr, node_tr,
             w, x, r):
    """Run all ``len(f)`` steps in place; returns the diverged step or -1.

    ``w``, ``x`` and ``r`` hold the initial readout and state on entry and
    the final ones on return.  ``signed_beta`` already carries the sign
    convention; 0 disables the composite term exactly.
    """
    n = w.shape[0]
    total = f.shape[0]
    P = np.zeros((n, n))
    for i in range(n):
        P[i, i] = 1.0 / rls_init
    Omega = np.zeros((n, n))
    Y = np.zeros(n)
    E = np.zeros(n)
    Pr = np.zeros(n)
    PE = np.zeros(n)
    x_new = np.zeros(n)
    z = 0.0
    a = leak_rate

    for k in range(total):
        fk = f[k]
        if k < train_steps or not self_feedback:
            u = fk
        else:
            u = z
        for i in range(n):
            s = 0.0
            for jj in range(indptr[i], indptr[i + 1]):
                s += data[jj] * x[indices[jj]]
            x_new[i] = np.tanh(w_in[i] * u + s + w_fb[i] * z)
        for i in range(n):
            src = x_new[i] if leak_current else x[i]
            r[i] = (1.0 - a) * r[i] + a * src
            x[i] = x_new[i]

        if k < train_steps:
            e = 0.0
            for i in range(n):
                e += r[i] * w[i]
            e = e - fk
            if method == 1 or method == 2:
                for i in range(n):
                    for j in range(n):
                        Omega[i, j] = (1.0 - lam) * Omega[i, j] + lam * (r[i] * r[j])
                    Y[i] = (1.0 - lam) * Y[i] + lam * fk * r[i]
                _symv(Omega, w, E)
                for i in range(n):
                    E[i] = E[i] - Y[i]
            if method == 0 or method == 1:
                _symv(P, r, Pr)
                denom = 1.0
                for i in range(n):
                    denom += r[i] * Pr[i]
                for i in range(n):
                    for j in range(n):
                        P[i, j] = P[i, j] - (Pr[i] * Pr[j]) / denom
                for i in range(n):
                    for j in range(i + 1, n):
                        s = 0.5 * (P[i, j] + P[j, i])
                        P[i, j] = s
                        P[j, i] = s
                _symv(P, r, Pr)
                if method == 1 and signed_beta != 0.0:
                    _symv(P, E, PE)
                    for i in range(n):
                        w[i] = w[i] - (e * Pr[i] + signed_beta * PE[i])
                else:
                    for i in range(n):
                        w[i] = w[i] - e * Pr[i]
            else:
                if signed_beta != 0.0:
                    for i in range(n):
                        w[i] = w[i] - eta * (e * r[i] + signed_beta * E[i])
                else:
                    for i in range(n):
                        w[i] = w[i] - eta * (e * r[i])

        z = 0.0
        for i in range(n):
            z += r[i] * w[i]
        if k < train_steps:
            e_tr[k] = e
        else:
            e_tr[k] = z - fk
        z_tr[k] = z
        nrm = 0.0
        for i in range(n):
            nrm += w[i] * w[i]
        wnorm_tr[k] = np.sqrt(nrm)
        for j in range(w_idx.shape[0]):
            wsamp_tr[k, j] = w[w_idx[j]]
        for j in range(node_idx.shape[0]):
            node_tr[k, j] = r[node_idx[j]]
        if not np.isfinite(z) or not np.isfinite(nrm):
            return k
    return -1
