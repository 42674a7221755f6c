"""Covariance of the driven linear flow and whitened direction norms.

The Gramian used everywhere is the stochastic-convolution covariance

    Q_t = int_0^t e^{sA} Q e^{sA*} ds,

which matches the law of the zero-start linear diffusion (the transposed
orientation that sometimes appears in display form is singular on the
worked 2-D example, so this orientation is used throughout).

Two representations coexist:

* the assembled n x n matrix, computed by the Van Loan block-exponential
  identity (fast, accurate at moderate t);
* a scaled factorization G_hat = D_t^{-1} B' Q_t B D_t^{-1}, where B is the
  Kalman reference basis and D_t carries the per-block exponents
  t^{(2h+1)/2}.  G_hat stays well conditioned as t -> 0, which is what
  makes whitened norms and sampling factors accurate deep into the
  small-time regime where the raw matrix has eigenvalues far below
  machine precision relative to its trace.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularGramian
from .kalman import KalmanDecomposition
from .operators import OperatorSpec, matrix_exp

__all__ = [
    "Gramian",
    "gramian",
    "gramian_quadrature",
    "whitened_direction_norm",
    "block_exp_norm",
    "TMIN",
]

# below this time the toolkit refuses whitened norms rather than clamp
TMIN = 1e-4

_EPS = np.finfo(float).eps


def _van_loan(spec: OperatorSpec, t: float) -> np.ndarray:
    n = spec.n
    H = np.zeros((2 * n, 2 * n))
    H[:n, :n] = spec.A
    H[:n, n:] = spec.Q
    H[n:, n:] = -spec.A.T
    E = matrix_exp(H, t)
    Qt = E[:n, n:] @ E[:n, :n].T
    return 0.5 * (Qt + Qt.T)


def _gl_nodes(a, b, m):
    x, w = np.polynomial.legendre.leggauss(m)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def gramian_quadrature(spec: OperatorSpec, t: float, rel_tol=1e-12) -> np.ndarray:
    """Independent oracle: adaptive Gauss-Legendre on the raw integrand."""
    if t <= 0.0:
        raise ValueError("t must be positive")

    def integral(m):
        nodes, weights = _gl_nodes(0.0, t, m)
        acc = np.zeros((spec.n, spec.n))
        for s, w in zip(nodes, weights):
            Es = matrix_exp(spec.A, s)
            acc += w * (Es @ spec.Q @ Es.T)
        return acc

    m = 16
    prev = integral(m)
    for _ in range(10):
        m *= 2
        cur = integral(m)
        if np.abs(cur - prev).max() <= rel_tol * max(np.abs(cur).max(), 1e-300):
            return 0.5 * (cur + cur.T)
        prev = cur
    return 0.5 * (prev + prev.T)


def _scaled_gramian(spec: OperatorSpec, dec: KalmanDecomposition, t: float):
    """G_hat and the per-coordinate exponent vector (2h+1)/2."""
    exps = np.empty(spec.n)
    for h, b in enumerate(dec.blocks):
        for i in b.index_set:
            exps[i - 1] = (2 * h + 1) / 2.0
    dinv = t ** (-exps)
    p = spec.p_tilde
    root = spec.Q_sqrt[:, :p]
    # G_hat = int_0^1 t * [D^{-1} B' e^{tuA} Q^{1/2}] [..]' du, panelized GL
    panels = int(min(64, max(1, np.ceil(t * np.linalg.norm(spec.A, 2)))))
    acc = np.zeros((spec.n, spec.n))
    for j in range(panels):
        nodes, weights = _gl_nodes(j / panels, (j + 1) / panels, 24)
        for u, w in zip(nodes, weights):
            C = dinv[:, None] * (dec.basis.T @ matrix_exp(spec.A, t * u) @ root)
            acc += (w * t) * (C @ C.T)
    return 0.5 * (acc + acc.T), exps


@dataclass(frozen=True)
class Gramian:
    """Q_t with both the assembled matrix and the scaled factorization."""

    t: float
    matrix: np.ndarray
    eig: tuple  # (clamped eigenvalues, eigenvectors) of the matrix
    dec: KalmanDecomposition
    scaled: np.ndarray  # G_hat in the reference basis
    scaled_eig: tuple  # (raw eigenvalues, eigenvectors) of G_hat
    exponents: np.ndarray  # per reference coordinate, (2h+1)/2

    @property
    def floor(self):
        return max(_EPS * float(np.trace(self.scaled)), 1e-14)

    @property
    def min_eig_pre_clamp(self):
        return float(self.scaled_eig[0][0])

    def _checked_scaled_eig(self):
        vals, vecs = self.scaled_eig
        if vals[0] < self.floor or self.t < TMIN:
            raise SingularGramian(
                f"scaled Gramian eigenvalue {vals[0]:.3e} below floor at t={self.t:g}"
            )
        return vals, vecs

    def whitened_norm(self, v) -> float:
        """|Q_t^{-1/2} v| via the scaled factorization."""
        vals, vecs = self._checked_scaled_eig()
        w = (self.dec.basis.T @ np.asarray(v, dtype=float)) * self.t ** (-self.exponents)
        return float(np.linalg.norm((vecs.T @ w) / np.sqrt(vals)))

    def sqrt_factor(self) -> np.ndarray:
        """S with S S' = Q_t, accurate blockwise down to small t."""
        vals, vecs = self.scaled_eig
        vals = np.maximum(vals, 0.0)
        S_ref = (self.t**self.exponents)[:, None] * (vecs * np.sqrt(vals))
        return self.dec.basis @ S_ref

    def block_sqrt_norm(self, h: int) -> float:
        """Operator norm of E_h Q_t^{1/2}."""
        S = self.sqrt_factor()
        idx = [i - 1 for i in self.dec.blocks[h].index_set]
        rows = self.dec.basis.T @ S
        return float(np.linalg.svd(rows[idx, :], compute_uv=False)[0])


def gramian(spec: OperatorSpec, t: float, dec: KalmanDecomposition | None = None) -> Gramian:
    """Q_t by the Van Loan identity plus the scaled quadrature factorization."""
    if t <= 0.0:
        raise ValueError("t must be positive")
    if dec is None:
        dec = spec.decomposition()
    matrix = _van_loan(spec, t)
    vals, vecs = np.linalg.eigh(matrix)
    floor = max(_EPS * float(np.trace(matrix)), 1e-14)
    scaled, exps = _scaled_gramian(spec, dec, t)
    svals, svecs = np.linalg.eigh(scaled)
    return Gramian(
        t=float(t),
        matrix=matrix,
        eig=(np.maximum(vals, floor), vecs),
        dec=dec,
        scaled=scaled,
        scaled_eig=(svals, svecs),
        exponents=exps,
    )


def whitened_direction_norm(
    spec: OperatorSpec,
    dec: KalmanDecomposition,
    t: float,
    i: int,
    gram: Gramian | None = None,
) -> float:
    """|Q_t^{-1/2} e^{tA} e_i| for the 1-based coordinate i."""
    if gram is None:
        gram = gramian(spec, t, dec)
    v = matrix_exp(spec.A, t)[:, i - 1]
    return gram.whitened_norm(v)


def block_exp_norm(spec: OperatorSpec, dec: KalmanDecomposition, s: float, h: int, h_from: int) -> float:
    """Operator norm of E_h e^{sA} E_{h_from}."""
    U = dec.blocks[h].basis
    V = dec.blocks[h_from].basis
    M = U.T @ matrix_exp(spec.A, s) @ V
    return float(np.linalg.svd(M, compute_uv=False)[0])
