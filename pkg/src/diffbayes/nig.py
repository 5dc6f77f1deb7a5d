"""Normal-inverse-gamma machinery for Gaussian linear regression.

The posterior over (theta, sigma^2) of the model y = psi'theta + noise is
carried by two sufficient statistics: an extended information matrix V of
size (n+1) x (n+1) accumulating outer products of [y; psi], and degrees of
freedom nu. The same information can be held in a reparameterized form
(C, theta_hat, lam, nu) where C is the inverse of V's regressor block,
theta_hat the point estimate and lam the residual scalar; in that form the
recursion becomes the familiar inversion-free recursive least squares.

Operations are value-style: they take a statistic and return a new one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateUpdateError,
    InvalidObservationError,
    InvalidParameterError,
    InvalidStatisticsError,
    SingularStatisticsError,
)

COND_LIMIT = 1e12
SM_DENOM_LIMIT = 1e-14


@dataclass(frozen=True)
class Observation:
    """One node's datum at one step: scalar output y, regression vector psi."""

    y: float
    psi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "psi", np.atleast_1d(np.asarray(self.psi, dtype=float)))
        object.__setattr__(self, "y", float(self.y))

    @property
    def z(self) -> np.ndarray:
        """The stacked data vector [y; psi]."""
        return np.concatenate(([self.y], self.psi))


@dataclass(frozen=True)
class NigVForm:
    """Extended information matrix V (size (n+1)^2) and degrees of freedom nu.

    Block layout: v[0, 0] accumulates y^2, v[1:, 0] accumulates psi*y, and
    v[1:, 1:] accumulates psi psi'.
    """

    v: np.ndarray
    nu: float

    def __post_init__(self):
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        object.__setattr__(self, "nu", float(self.nu))

    @property
    def n(self) -> int:
        return self.v.shape[0] - 1

    @property
    def v_y(self) -> float:
        return float(self.v[0, 0])

    @property
    def v_ypsi(self) -> np.ndarray:
        return self.v[1:, 0]

    @property
    def v_psi(self) -> np.ndarray:
        return self.v[1:, 1:]


@dataclass(frozen=True)
class NigCForm:
    """Reparameterized statistics: covariance-like C, point estimate, residual scalar."""

    c: np.ndarray
    theta_hat: np.ndarray
    lam: float
    nu: float

    def __post_init__(self):
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))
        object.__setattr__(self, "theta_hat", np.atleast_1d(np.asarray(self.theta_hat, dtype=float)))
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "nu", float(self.nu))

    @property
    def n(self) -> int:
        return self.c.shape[0]


def _sym(m: np.ndarray) -> np.ndarray:
    """Re-symmetrize against roundoff drift."""
    return (m + m.T) / 2.0


def nig_init(n: int, eps: float = 1e-3, nu0: float | None = None) -> NigVForm:
    """Regularized flat prior: V = eps*I, nu = nu0 (default n + 2).

    eps > 0 keeps the regressor block positive definite from the first
    update onward.
    """
    if n < 1:
        raise InvalidParameterError(f"model order must be >= 1, got {n}")
    if not eps > 0:
        raise InvalidParameterError(f"prior regularization eps must be > 0, got {eps}")
    if nu0 is None:
        nu0 = float(n + 2)
    if not nu0 > 0:
        raise InvalidParameterError(f"prior degrees of freedom must be > 0, got {nu0}")
    return NigVForm(v=eps * np.eye(n + 1), nu=float(nu0))


def bayes_update(s: NigVForm, obs: Observation, weight: float = 1.0) -> NigVForm:
    """Data update: V += weight * [y; psi][y; psi]', nu += weight.

    The unit-weight case is the plain conjugate update; fractional weights
    arise when a datum enters a neighbourhood combination.
    """
    if obs.psi.shape != (s.n,):
        raise InvalidObservationError(
            f"regression vector has dimension {obs.psi.shape[0]}, expected {s.n}"
        )
    z = obs.z
    return NigVForm(v=_sym(s.v + weight * np.outer(z, z)), nu=s.nu + weight)


def _solve_regressor_block(s: NigVForm) -> np.ndarray:
    """theta_hat via a linear solve on the regressor block, with a condition guard."""
    cond = np.linalg.cond(s.v_psi)
    if not cond < COND_LIMIT:
        raise SingularStatisticsError(
            f"regressor block numerically singular (condition estimate {cond:.3e} "
            f">= {COND_LIMIT:.0e}); initialize with eps > 0 or feed richer data"
        )
    return np.linalg.solve(s.v_psi, s.v_ypsi)


def point_estimate_theta(s: NigVForm) -> np.ndarray:
    """Posterior mean of the regression coefficient: solve V_psi theta = V_ypsi."""
    return _solve_regressor_block(s)


def residual_scalar(s: NigVForm) -> float:
    """lam = V_y - V_ypsi' V_psi^{-1} V_ypsi, clamped at zero against roundoff."""
    theta = _solve_regressor_block(s)
    return max(s.v_y - float(s.v_ypsi @ theta), 0.0)


def estimate_noise_variance(s: NigVForm) -> float:
    """Point estimate of the observation-noise variance: lam / nu."""
    if not s.nu > 0:
        raise InvalidParameterError(f"degrees of freedom must be > 0, got {s.nu}")
    return residual_scalar(s) / s.nu


def reparameterize(s: NigVForm) -> NigCForm:
    """Decompose V into (C, theta_hat, lam), carrying nu over.

    C is the inverse regressor block, theta_hat = C V_ypsi, and lam the
    Schur complement V_y - V_ypsi' C V_ypsi.
    """
    cond = np.linalg.cond(s.v_psi)
    if not cond < COND_LIMIT:
        raise SingularStatisticsError(
            f"regressor block numerically singular (condition estimate {cond:.3e})"
        )
    c = _sym(np.linalg.solve(s.v_psi, np.eye(s.n)))
    theta = c @ s.v_ypsi
    lam = max(s.v_y - float(s.v_ypsi @ theta), 0.0)
    return NigCForm(c=c, theta_hat=theta, lam=lam, nu=s.nu)


def compose(cf: NigCForm) -> NigVForm:
    """Inverse of reparameterize: rebuild the extended information matrix."""
    try:
        np.linalg.cholesky(_sym(cf.c))
    except np.linalg.LinAlgError:
        raise InvalidStatisticsError("C must be symmetric positive definite") from None
    n = cf.n
    v_psi = _sym(np.linalg.solve(cf.c, np.eye(n)))
    v_ypsi = v_psi @ cf.theta_hat
    v_y = cf.lam + float(cf.theta_hat @ v_ypsi)
    v = np.empty((n + 1, n + 1))
    v[0, 0] = v_y
    v[1:, 0] = v_ypsi
    v[0, 1:] = v_ypsi
    v[1:, 1:] = v_psi
    return NigVForm(v=_sym(v), nu=cf.nu)


def sherman_morrison(a_inv: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """(A + u v')^{-1} from A^{-1}: a_inv - (a_inv u)(v' a_inv)/(1 + v' a_inv u)."""
    a_inv = np.asarray(a_inv, dtype=float)
    au = a_inv @ u
    va = v @ a_inv
    denom = 1.0 + float(v @ au)
    if abs(denom) <= SM_DENOM_LIMIT:
        raise DegenerateUpdateError(
            f"rank-one update denominator {denom:.3e} too close to zero"
        )
    return a_inv - np.outer(au, va) / denom


def cform_rank_one_update(cf: NigCForm, obs: Observation, c: float) -> NigCForm:
    """Inversion-free update of the reparameterized statistics by one weighted datum.

    With d = 1 + c psi'C psi and prediction error e = y - psi'theta_hat
    (both using the incoming statistics):

        C         <- C - c (C psi)(C psi)'/d
        theta_hat <- theta_hat + c (C psi) e / d
        lam       <- lam + c e^2 / d
        nu        <- nu + c

    The residual increment is the exact change of the extended-matrix Schur
    complement under V += c [y; psi][y; psi]'.
    """
    if obs.psi.shape != (cf.n,):
        raise InvalidObservationError(
            f"regression vector has dimension {obs.psi.shape[0]}, expected {cf.n}"
        )
    if not 0.0 <= c <= 1.0:
        raise InvalidParameterError(f"data weight must lie in [0, 1], got {c}")
    psi = obs.psi
    cpsi = cf.c @ psi
    denom = 1.0 + c * float(psi @ cpsi)
    err = obs.y - float(psi @ cf.theta_hat)
    new_c = _sym(cf.c - (c / denom) * np.outer(cpsi, cpsi))
    new_theta = cf.theta_hat + (c * err / denom) * cpsi
    new_lam = cf.lam + c * err * err / denom
    return NigCForm(c=new_c, theta_hat=new_theta, lam=new_lam, nu=cf.nu + c)


def vform_to_text(s: NigVForm) -> str:
    """Serialize: one-line `n nu` header, then the matrix rows (row-major)."""
    lines = [f"{s.n} {s.nu:.17g}"]
    for row in s.v:
        lines.append(" ".join(f"{x:.17g}" for x in row))
    return "\n".join(lines) + "\n"


def vform_from_text(text: str) -> NigVForm:
    """Parse the vform_to_text format."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InvalidStatisticsError("empty statistic dump")
    header = lines[0].split()
    if len(header) != 2:
        raise InvalidStatisticsError(f"bad header {lines[0]!r}, expected `n nu`")
    n = int(header[0])
    nu = float(header[1])
    rows = [[float(x) for x in ln.split()] for ln in lines[1 : n + 2]]
    v = np.array(rows, dtype=float)
    if v.shape != (n + 1, n + 1):
        raise InvalidStatisticsError(f"matrix block has shape {v.shape}, expected {(n + 1, n + 1)}")
    return NigVForm(v=v, nu=nu)
