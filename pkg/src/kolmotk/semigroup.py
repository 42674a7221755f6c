"""Monte Carlo evaluation of the diffusion semigroup, its spatial
derivatives, and the probabilistic elliptic/parabolic solvers.

P_t f(x) is estimated either directly, as the mean of f over endpoints of
the full path, or by Girsanov reweighting, as the mean of f over linear
endpoints weighted with the exponential martingale density.  Derivatives
use common-random-number finite differences: every shifted start rides the
same Brownian increments, so the difference quotient variance stays
bounded as the step shrinks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularGramian
from .gramian import TMIN, gramian
from .holder import ScalarField
from .operators import OperatorSpec, matrix_exp
from .simulate import simulate_endpoints

__all__ = [
    "MCEstimate",
    "QuadratureScheme",
    "evaluate",
    "derivative_estimate",
    "solve_elliptic",
    "solve_parabolic",
    "ou_cosine_expectation",
    "elliptic_cosine_oracle_field",
    "parabolic_cosine_oracle",
    "default_steps",
]


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    n_paths: int
    seed: int
    method: str

    def combined_stderr(self, other: "MCEstimate") -> float:
        return math.hypot(self.stderr, other.stderr)


def default_steps(t: float) -> int:
    return max(32, int(math.ceil(t / 1e-3)))


def _mean_stderr(values):
    values = np.asarray(values, dtype=float)
    n = values.size
    mean = float(values.mean())
    if n < 2:
        return mean, 0.0
    return mean, float(values.std(ddof=1) / math.sqrt(n))


def evaluate(
    spec: OperatorSpec,
    f: ScalarField,
    t: float,
    x,
    budget: int,
    seed: int,
    method: str = "direct",
    steps: int | None = None,
    path_offset: int = 0,
    threads: int = 1,
) -> MCEstimate:
    """Monte Carlo estimate of P_t f(x)."""
    if budget < 2:
        raise ValueError("budget >= 2")
    if t < TMIN:
        raise SingularGramian(f"t={t:g} below the minimum semigroup scale {TMIN:g}")
    if method not in ("direct", "girsanov"):
        raise ValueError(f"unknown method {method!r}")
    steps = default_steps(t) if steps is None else steps
    Z, X, logphi = simulate_endpoints(
        spec, np.asarray(x, dtype=float), t, steps, seed, budget,
        path_offset=path_offset, threads=threads,
    )
    if method == "direct":
        values = f(X[0])
    else:
        values = f(Z[0]) * np.exp(logphi[0])
    mean, stderr = _mean_stderr(values)
    return MCEstimate(mean=mean, stderr=stderr, n_paths=budget, seed=int(seed), method=method)


# --- derivatives ------------------------------------------------------------

_STENCILS = {
    1: ((-1, -0.5), (1, 0.5)),
    2: ((-1, 1.0), (0, -2.0), (1, 1.0)),
    3: ((-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)),
}


def _default_eps(spec: OperatorSpec, t: float, coord: int) -> float:
    h = spec.decomposition().block_of_coordinate(coord)
    return max(1e-3, t ** (h + 0.5) / 10.0)


def derivative_estimate(
    spec: OperatorSpec,
    f: ScalarField,
    t: float,
    x,
    multi_index,
    budget: int,
    seed: int,
    eps: float | None = None,
    method: str = "fd",
    steps: int | None = None,
    threads: int = 1,
) -> MCEstimate:
    """Spatial derivative of P_t f at x for a multi-index of 1-based
    coordinates, order at most 3.

    ``fd``: central differences with shared noise across the shifted
    starts.  ``pathwise``: first order only, E[<grad f(X_t), eta_i>] using
    the variation flow (requires ``f.grad``).
    """
    multi_index = tuple(int(i) for i in multi_index)
    if not (1 <= len(multi_index) <= 3):
        raise ValueError("multi-index order must be 1..3")
    if t < TMIN:
        raise SingularGramian(f"t={t:g} below the minimum semigroup scale {TMIN:g}")
    steps = default_steps(t) if steps is None else steps
    x = np.asarray(x, dtype=float)
    n = spec.n

    if method == "pathwise":
        if len(multi_index) != 1:
            raise ValueError("pathwise estimator supports first derivatives only")
        if f.grad is None:
            raise ValueError("pathwise estimator needs a field gradient")
        _, X, _, eta = simulate_endpoints(
            spec, x, t, steps, seed, budget, threads=threads, with_variation=True
        )
        col = eta[0][:, :, multi_index[0] - 1]
        values = np.einsum("pn,pn->p", f.grad(X[0]), col)
        mean, stderr = _mean_stderr(values)
        return MCEstimate(mean, stderr, budget, int(seed), "pathwise")

    # group repeated coordinates into per-coordinate derivative orders
    orders: dict[int, int] = {}
    for i in multi_index:
        orders[i] = orders.get(i, 0) + 1
    # tensor-product stencil over the involved coordinates
    points = [(np.zeros(n), 1.0)]
    for coord, order in sorted(orders.items()):
        e = eps if eps is not None else _default_eps(spec, t, coord)
        new = []
        for shift, weight in points:
            for off, w in _STENCILS[order]:
                sh = shift.copy()
                sh[coord - 1] += off * e
                new.append((sh, weight * w / e**order))
        points = new
    starts = np.stack([x + sh for sh, _ in points])
    weights = np.array([w for _, w in points])
    _, X, _ = simulate_endpoints(spec, starts, t, steps, seed, budget, threads=threads)
    values = np.tensordot(weights, f(X), axes=(0, 0))
    mean, stderr = _mean_stderr(values)
    return MCEstimate(mean, stderr, budget, int(seed), "fd")


# --- quadrature schemes and solvers ----------------------------------------


@dataclass(frozen=True)
class QuadratureScheme:
    """Composite Gauss-Legendre layout in time for the resolvent integral."""

    t_min: float
    t_max: float
    panels: np.ndarray  # increasing boundaries, panels[0] == t_min
    nodes_per_panel: int
    paths_per_node: int
    tail_bound: float

    @classmethod
    def build(
        cls,
        lam: float,
        f_sup: float,
        tol: float = 1e-4,
        nodes_per_panel: int = 6,
        paths_per_node: int = 1000,
        t_min: float = TMIN,
        panels_per_decade: int = 2,
    ):
        """Log-spaced panels from t_min to a tail-bounded horizon."""
        if lam <= 0.0:
            raise ValueError("lambda must be positive")
        t_max = max(1.0, math.log(max(f_sup, tol) / (lam * tol)) / lam)
        n_panels = max(1, int(math.ceil(panels_per_decade * math.log10(t_max / t_min))))
        bounds = np.geomspace(t_min, t_max, n_panels + 1)
        tail = math.exp(-lam * t_max) / lam * f_sup
        return cls(
            t_min=t_min,
            t_max=float(t_max),
            panels=bounds,
            nodes_per_panel=nodes_per_panel,
            paths_per_node=paths_per_node,
            tail_bound=tail,
        )

    def nodes(self):
        xg, wg = np.polynomial.legendre.leggauss(self.nodes_per_panel)
        ts, ws = [], []
        for a, b in zip(self.panels[:-1], self.panels[1:]):
            half = 0.5 * (b - a)
            ts.append(a + half * (xg + 1.0))
            ws.append(half * wg)
        return np.concatenate(ts), np.concatenate(ws)


def solve_elliptic(
    spec: OperatorSpec,
    f: ScalarField,
    lam: float,
    x,
    scheme: QuadratureScheme,
    seed: int,
    threads: int = 1,
) -> MCEstimate:
    """u(x) = int_0^inf e^{-lam t} P_t f(x) dt by node-wise Monte Carlo.

    The [0, t_min] head uses P_t f ~ f(x); the tail beyond t_max is
    dropped (bounded by ``scheme.tail_bound``).
    """
    x = np.asarray(x, dtype=float)
    head = float(f(x[None, :])[0]) * (1.0 - math.exp(-lam * scheme.t_min)) / lam
    ts, ws = scheme.nodes()
    total = head
    var = 0.0
    n_paths = 0
    for j, (t, w) in enumerate(zip(ts, ws)):
        est = evaluate(
            spec, f, float(t), x, scheme.paths_per_node, seed,
            path_offset=j * scheme.paths_per_node, threads=threads,
        )
        coeff = w * math.exp(-lam * t)
        total += coeff * est.mean
        var += (coeff * est.stderr) ** 2
        n_paths += est.n_paths
    return MCEstimate(total, math.sqrt(var), n_paths, int(seed), "elliptic")


def solve_parabolic(
    spec: OperatorSpec,
    g: ScalarField,
    H,
    t: float,
    x,
    scheme: QuadratureScheme,
    seed: int,
    threads: int = 1,
) -> MCEstimate:
    """v(t, x) = P_t g(x) + int_0^t P_{t-s} H(s, .)(x) ds.

    ``H`` maps a time s to a ScalarField (pass None for H == 0).  Inner
    semigroup times are floored at the minimum scale: on (t - t_min, t]
    the integrand is approximated by H(t, x).
    """
    x = np.asarray(x, dtype=float)
    if t <= scheme.t_min:
        raise ValueError(f"t must exceed the minimum scale {scheme.t_min:g}")
    est = evaluate(spec, g, t, x, scheme.paths_per_node, seed, threads=threads)
    total = est.mean
    var = est.stderr**2
    n_paths = est.n_paths
    if H is not None:
        xg, wg = np.polynomial.legendre.leggauss(scheme.nodes_per_panel * 2)
        half = 0.5 * (t - scheme.t_min)
        ss = half * (xg + 1.0)
        ws = half * wg
        for j, (s, w) in enumerate(zip(ss, ws)):
            field = H(float(s))
            inner = evaluate(
                spec, field, float(t - s), x, scheme.paths_per_node, seed,
                path_offset=(j + 1) * scheme.paths_per_node, threads=threads,
            )
            total += w * inner.mean
            var += (w * inner.stderr) ** 2
            n_paths += inner.n_paths
        total += float(H(t)(x[None, :])[0]) * scheme.t_min
    return MCEstimate(total, math.sqrt(var), n_paths, int(seed), "parabolic")


# --- closed-form oracles for the zero-drift case ----------------------------


def ou_cosine_expectation(spec: OperatorSpec, w, t: float, x, amplitude: float = 1.0) -> float:
    """P_t [a cos(<w, .>)](x) for F == 0:  a e^{-<Q_t w, w>/2} cos(<w, e^{tA} x>)."""
    if not spec.F.is_zero:
        raise ValueError("oracle requires zero nonlinear drift")
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    Qt = gramian(spec, t).matrix
    return amplitude * math.exp(-0.5 * float(w @ Qt @ w)) * math.cos(float(w @ matrix_exp(spec.A, t) @ x))


def _cosine_quadrature_terms(spec, w, lam, scheme):
    ts, ws = scheme.nodes()
    coeffs = []
    waves = []
    for t, wq in zip(ts, ws):
        Qt = gramian(spec, float(t)).matrix
        coeffs.append(wq * math.exp(-lam * t) * math.exp(-0.5 * float(w @ Qt @ w)))
        waves.append(matrix_exp(spec.A, float(t)).T @ w)
    return np.array(coeffs), np.stack(waves)


def elliptic_cosine_oracle_field(
    spec: OperatorSpec, w, lam: float, scheme: QuadratureScheme, amplitude: float = 1.0,
    box=None,
) -> ScalarField:
    """Deterministic resolvent of a cosine field for F == 0.

    Returns u as a closed-form cosine sum, cheap to evaluate anywhere;
    used as the no-Monte-Carlo pipeline in oracle checks.
    """
    if not spec.F.is_zero:
        raise ValueError("oracle requires zero nonlinear drift")
    w = np.asarray(w, dtype=float)
    coeffs, waves = _cosine_quadrature_terms(spec, w, lam, scheme)
    head = (1.0 - math.exp(-lam * scheme.t_min)) / lam
    all_waves = np.vstack([w[None, :], waves])
    all_coeffs = amplitude * np.concatenate([[head], coeffs])

    def u(x):
        return np.cos(x @ all_waves.T) @ all_coeffs

    f = ScalarField.from_callable(u, spec.n, label=f"resolvent(cos, lam={lam:g})", box=box)
    return f


def parabolic_cosine_oracle(spec: OperatorSpec, w, t: float, x, amplitude: float = 1.0) -> float:
    """Oracle for v = P_t g with g = a cos(<w, .>), H == 0 and F == 0."""
    return ou_cosine_expectation(spec, w, t, x, amplitude=amplitude)
