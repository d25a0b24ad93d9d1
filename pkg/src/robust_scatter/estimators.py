"""Fixed-point solvers for the four scatter M-estimators.

The estimators share one template: a weighted sample covariance whose
weights are a function of the per-sample quadratic forms
d_i = p^{-1} x_i^T Sigma^{-1} x_i evaluated at the estimate itself.

kind  weight w_i      update for Sigma
----  --------------  --------------------------------------------------
ME    u(d_i)          (1/n) sum_i w_i x_i x_i^T
TE    1 / d_i         same, then rescaled to trace p
MRE   u(d_i)          (1/n) sum_i w_i x_i x_i^T / (1+a) + a/(1+a) * I
TRE   1 / d_i         same shrunk update

All four are solved by plain Picard iteration from the identity (or a
caller-supplied SPD start), with the iterate re-symmetrized after every
step. The iteration stops once both the relative Frobenius change between
iterates and the relative residual of the defining equation fall below the
tolerance; non-convergence is reported through the ``converged`` flag
rather than an exception.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ExistenceError
from .model import Dataset, ScatterMatrix

__all__ = [
    "UFunction",
    "rational_u",
    "huber_u",
    "tyler_u",
    "make_ufunction",
    "U_REGISTRY",
    "resolve_u",
    "SolverConfig",
    "ScatterEstimate",
    "tyler",
    "maronna",
    "tyler_regularized",
    "maronna_regularized",
    "interference_h",
    "tyler_objective",
    "check_te_existence",
    "fixed_point_residual",
    "quad_forms",
]

_ZERO_ROW_RTOL = 1e-14


# ---------------------------------------------------------------------------
# weight functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UFunction:
    """A weight function u together with phi(x) = x*u(x), its supremum and
    the unit crossing d0 = phi^{-1}(1) (None when the crossing does not
    exist or is not unique, e.g. for the Tyler case phi == 1)."""

    name: str
    u: Callable[[np.ndarray], np.ndarray]
    phi: Callable[[np.ndarray], np.ndarray]
    phi_inf: float
    d0: Optional[float]

    def require_maronna_admissible(self) -> None:
        """Existence conditions for the unregularized Maronna estimator."""
        if not self.phi_inf > 1.0:
            raise ExistenceError(
                f"u function {self.name!r} has phi_inf = {self.phi_inf:g} <= 1; "
                "the Maronna fixed point need not exist"
            )
        if self.d0 is None:
            raise ExistenceError(f"u function {self.name!r} has no unique unit crossing of phi")


def rational_u() -> UFunction:
    """u(x) = 2/(1+x). phi(x) = 2x/(1+x), phi_inf = 2, phi^{-1}(1) = 1."""
    return UFunction(
        name="rational",
        u=lambda x: 2.0 / (1.0 + np.asarray(x, dtype=float)),
        phi=lambda x: 2.0 * np.asarray(x, dtype=float) / (1.0 + np.asarray(x, dtype=float)),
        phi_inf=2.0,
        d0=1.0,
    )


def huber_u(t: float = 2.0) -> UFunction:
    """Unnormalized Huber weight u(x) = min(1, t/x), u(0) = 1.

    phi(x) = min(x, t), so phi_inf = t and the unit crossing is at 1
    provided t > 1.
    """
    if t <= 0:
        raise ValueError("huber threshold t must be positive")

    def u(x):
        x = np.asarray(x, dtype=float)
        return t / np.maximum(x, t)

    return UFunction(
        name=f"huber:{t:g}",
        u=u,
        phi=lambda x: np.minimum(np.asarray(x, dtype=float), t),
        phi_inf=float(t),
        d0=1.0 if t > 1 else None,
    )


def tyler_u() -> UFunction:
    """u(x) = 1/x, phi == 1: the weight function implicit in TE/TRE."""

    def u(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return 1.0 / x

    return UFunction(
        name="tyler",
        u=u,
        phi=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        phi_inf=1.0,
        d0=None,
    )


def make_ufunction(u: Callable, name: str = "custom", x_hi: float = 1e3) -> UFunction:
    """Wrap a user weight function: derive phi, estimate phi_inf and locate
    the unit crossing d0 = phi^{-1}(1) by bisection with bracket expansion
    (bracket grown from [1e-12, x_hi], crossing resolved to 1e-12)."""

    def phi(x):
        x = np.asarray(x, dtype=float)
        return x * np.asarray(u(x), dtype=float)

    # phi is non-decreasing and bounded; probe far out for its supremum
    phi_inf = float(phi(np.asarray(1e12)))

    lo, hi = 1e-12, float(x_hi)
    expansions = 0
    while phi(np.asarray(hi)) < 1.0 and expansions < 200:
        hi *= 2.0
        expansions += 1
    d0 = None
    if float(phi(np.asarray(lo))) < 1.0 <= float(phi(np.asarray(hi))):
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if float(phi(np.asarray(mid))) < 1.0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-12 * max(1.0, hi):
                break
        d0 = 0.5 * (lo + hi)
    return UFunction(name=name, u=u, phi=phi, phi_inf=phi_inf, d0=d0)


U_REGISTRY = {"rational": rational_u, "huber": huber_u}


def resolve_u(name: str) -> UFunction:
    """Look up a weight function by CLI-style name: 'rational' or 'huber:t'."""
    if ":" in name:
        base, arg = name.split(":", 1)
        if base != "huber":
            raise ValueError(f"unknown u function {name!r}")
        return huber_u(float(arg))
    if name not in U_REGISTRY:
        raise ValueError(f"unknown u function {name!r}; available: rational, huber:t")
    return U_REGISTRY[name]()


# ---------------------------------------------------------------------------
# solver plumbing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    max_iter: int = 500
    init: Optional[ScatterMatrix] = None

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass(frozen=True, eq=False)
class ScatterEstimate:
    """Solver output: the SPD estimate plus the per-sample weights and
    convergence diagnostics. ``residual`` is the relative Frobenius residual
    of the defining fixed-point equation at ``matrix``. ``u`` is the weight
    function for ME/MRE (None for the Tyler kinds)."""

    matrix: ScatterMatrix
    weights: np.ndarray
    kind: str
    alpha: float
    iterations: int
    residual: float
    converged: bool
    u: Optional[UFunction] = None


def quad_forms(x: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """d_i = p^{-1} x_i^T sigma^{-1} x_i for every row of x (one Cholesky)."""
    p = x.shape[1]
    chol = np.linalg.cholesky(sigma)
    z = solve_triangular(chol, x.T, lower=True, check_finite=False)
    return np.einsum("ij,ij->j", z, z) / p


def _weighted_cov(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    return x.T @ (x * w[:, None]) / x.shape[0]


def _relfrob(delta: np.ndarray, ref: np.ndarray) -> float:
    return float(np.linalg.norm(delta) / np.linalg.norm(ref))


def _check_rows(x: np.ndarray, reject_zero: bool) -> None:
    norms = np.linalg.norm(x, axis=1)
    tiny = norms < _ZERO_ROW_RTOL * max(norms.max(), 1e-300)
    if reject_zero and tiny.any():
        raise ExistenceError(
            f"{int(tiny.sum())} sample(s) have (near-)zero norm; "
            "Tyler-type weights are undefined for them"
        )


def _weights_for(kind: str, d: np.ndarray, u: Optional[UFunction]) -> np.ndarray:
    if kind in ("TE", "TRE"):
        return 1.0 / d
    return np.asarray(u.u(d), dtype=float)


def _defining_rhs(kind: str, x: np.ndarray, w: np.ndarray, alpha: float) -> np.ndarray:
    raw = _weighted_cov(x, w)
    if kind in ("MRE", "TRE"):
        p = x.shape[1]
        return raw / (1.0 + alpha) + (alpha / (1.0 + alpha)) * np.eye(p)
    return raw


def _solve(kind: str, data: Dataset, u: Optional[UFunction], alpha: float,
           cfg: Optional[SolverConfig]) -> ScatterEstimate:
    cfg = cfg or SolverConfig()
    x = np.ascontiguousarray(data.samples)
    n, p = x.shape

    if cfg.init is not None:
        if cfg.init.p != p:
            raise ValueError(f"init matrix is {cfg.init.p}x{cfg.init.p}, expected p={p}")
        cfg.init.require_spd("init matrix")
        sigma = np.array(cfg.init.entries, copy=True)
    else:
        sigma = np.eye(p)

    last_delta = math.inf
    converged = False
    updates = 0
    w = np.empty(n)
    residual = math.inf
    try:
        while True:
            d = quad_forms(x, sigma)
            w = _weights_for(kind, d, u)
            rhs = _defining_rhs(kind, x, w, alpha)
            residual = _relfrob(sigma - rhs, sigma)
            if residual <= cfg.tol and last_delta <= cfg.tol:
                converged = True
                break
            if updates >= cfg.max_iter:
                break
            nxt = rhs
            if kind == "TE":
                nxt = p * nxt / np.trace(nxt)
            nxt = (nxt + nxt.T) / 2.0
            last_delta = _relfrob(nxt - sigma, sigma)
            sigma = nxt
            updates += 1
    except np.linalg.LinAlgError as exc:
        raise ExistenceError(
            f"{kind} iteration hit a non-SPD weighted covariance "
            "(data may be rank deficient or the existence condition fails)"
        ) from exc

    return ScatterEstimate(
        matrix=ScatterMatrix(sigma),
        weights=w,
        kind=kind,
        alpha=float(alpha),
        iterations=updates,
        residual=residual,
        converged=converged,
        u=u,
    )


# ---------------------------------------------------------------------------
# public solvers
# ---------------------------------------------------------------------------

def tyler(data: Dataset, cfg: Optional[SolverConfig] = None) -> ScatterEstimate:
    """Tyler's M-estimator: the trace-p solution of
    Sigma = (1/n) sum_i x_i x_i^T / (p^{-1} x_i^T Sigma^{-1} x_i).

    Requires n > p and no zero sample; invariant to per-sample rescaling.
    """
    if data.n <= data.p:
        raise ExistenceError(f"Tyler's estimator needs n > p (got n={data.n}, p={data.p})")
    _check_rows(data.samples, reject_zero=True)
    return _solve("TE", data, None, 0.0, cfg)


def maronna(data: Dataset, u: UFunction, cfg: Optional[SolverConfig] = None) -> ScatterEstimate:
    """Maronna's M-estimator with weight function u (needs phi_inf > 1, n > p)."""
    if data.n <= data.p:
        raise ExistenceError(f"Maronna's estimator needs n > p (got n={data.n}, p={data.p})")
    u.require_maronna_admissible()
    return _solve("ME", data, u, 0.0, cfg)


def tyler_regularized(data: Dataset, alpha: float,
                      cfg: Optional[SolverConfig] = None) -> ScatterEstimate:
    """Regularized Tyler estimator; needs alpha > max(0, p/n - 1) and no zero sample."""
    gamma = data.p / data.n
    if alpha <= max(0.0, gamma - 1.0):
        raise ExistenceError(
            f"TRE needs alpha > max(0, p/n - 1) = {max(0.0, gamma - 1.0):g}, got {alpha:g}"
        )
    _check_rows(data.samples, reject_zero=True)
    return _solve("TRE", data, None, alpha, cfg)


def maronna_regularized(data: Dataset, u: UFunction, alpha: float,
                        cfg: Optional[SolverConfig] = None) -> ScatterEstimate:
    """Regularized Maronna estimator; exists uniquely for any alpha > 0."""
    if alpha <= 0:
        raise ExistenceError(f"MRE needs alpha > 0, got {alpha:g}")
    return _solve("MRE", data, u, alpha, cfg)


# ---------------------------------------------------------------------------
# analysis helpers
# ---------------------------------------------------------------------------

def interference_h(d: np.ndarray, data: Dataset, u: UFunction) -> np.ndarray:
    """h_j(d) = p^{-1} x_j^T ((1/n) sum_i u(d_i) x_i x_i^T)^{-1} x_j.

    The Maronna fixed point in d-space: d solves the estimator equation iff
    h(d) = d. Positive, componentwise monotone and scalable in d.
    """
    d = np.asarray(d, dtype=float)
    if d.shape != (data.n,):
        raise ValueError(f"d must have shape ({data.n},), got {d.shape}")
    if np.any(d <= 0):
        raise ValueError("d must be strictly positive componentwise")
    if data.n <= data.p:
        raise ValueError("interference function needs n > p")
    x = data.samples
    w = np.asarray(u.u(d), dtype=float)
    cov = _weighted_cov(x, w)
    return quad_forms(x, cov)


def tyler_objective(w: np.ndarray, data: Dataset) -> float:
    """-sum_i log w_i + (n/p) log det(sum_i w_i x_i x_i^T) on the simplex
    {w > 0, sum w_i = n}; Tyler's weights minimize it up to normalization."""
    w = np.asarray(w, dtype=float)
    n, p = data.n, data.p
    if w.shape != (n,):
        raise ValueError(f"w must have shape ({n},), got {w.shape}")
    if np.any(w <= 0):
        raise ValueError("weights must be strictly positive")
    if abs(float(w.sum()) - n) > 1e-8:
        raise ValueError(f"weights must sum to n={n} (got {w.sum():.12g})")
    x = data.samples
    m = x.T @ (x * w[:, None])
    sign, logdet = np.linalg.slogdet(m)
    if sign <= 0:
        raise np.linalg.LinAlgError("weighted sum sum_i w_i x_i x_i^T is singular")
    return float(-np.log(w).sum() + (n / p) * logdet)


def check_te_existence(data: Dataset) -> bool:
    """Cheap proxy for the Kent-Tyler existence condition: n > p and the
    sample matrix has full column rank. The full condition quantifies over
    all proper subspaces and is not checked."""
    if data.n <= data.p:
        return False
    return int(np.linalg.matrix_rank(data.samples)) == data.p


def weights_from_matrix(kind: str, data: Dataset, matrix: ScatterMatrix,
                        u: Optional[UFunction] = None) -> np.ndarray:
    """Weights the defining equation of `kind` assigns to `matrix` on `data`."""
    d = quad_forms(data.samples, matrix.entries)
    if kind in ("TE", "TRE"):
        return 1.0 / d
    if u is None:
        raise ValueError(f"kind {kind} needs a u function to recompute weights")
    return np.asarray(u.u(d), dtype=float)


def fixed_point_residual(est: ScatterEstimate, data: Dataset) -> float:
    """Relative Frobenius residual of est.matrix in the defining equation of
    est.kind; zero exactly at a fixed point."""
    if est.matrix.p != data.p:
        raise ValueError(f"estimate is {est.matrix.p}-dimensional but data has p={data.p}")
    w = weights_from_matrix(est.kind, data, est.matrix, est.u)
    rhs = _defining_rhs(est.kind, data.samples, w, est.alpha)
    return _relfrob(est.matrix.entries - rhs, est.matrix.entries)
