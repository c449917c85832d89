"""
Information-form Gaussians: the currency of every GBP message and belief.

A Gaussian is stored as (eta, lam) = (Lambda @ mu, Sigma^-1). Products are additions.
Single Gaussians go through InfoGaussian; the engine works on stacks of blocks
(eta (n, d), lam (n, d, d)) with the *_stacked helpers below.
"""
from __future__ import annotations
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from src.config import GBP_CONFIG
from src.errors import DimensionMismatchError, NonInvertibleError

MAX_CONDITION = float(GBP_CONFIG["max_condition"])

@dataclass(frozen=True, eq=False)
class InfoGaussian:
    eta: np.ndarray
    lam: np.ndarray

    def __post_init__(self) -> None:
        eta = np.array(self.eta, dtype=float).reshape(-1)
        lam = np.array(self.lam, dtype=float)

        if lam.ndim != 2 or lam.shape != (eta.size, eta.size):
            raise DimensionMismatchError(
                f"eta has length {eta.size} but lam has shape {lam.shape}"
            )

        lam = 0.5 * (lam + lam.T)
        eta.setflags(write=False)
        lam.setflags(write=False)

        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "lam", lam)

    @property
    def d(self) -> int:
        return int(self.eta.size)

    @classmethod
    def vacuous(cls, d: int) -> "InfoGaussian":
        return cls(np.zeros(d), np.zeros((d, d)))

    def is_vacuous(self) -> bool:
        return not (np.any(self.eta) or np.any(self.lam))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.eta)) and np.all(np.isfinite(self.lam)))

    def __repr__(self) -> str:
        return f"InfoGaussian(d={self.d}, eta={self.eta.tolist()})"


def _check_condition(lam: np.ndarray, *, max_condition: float, what: str) -> None:
    if not np.all(np.isfinite(lam)):
        raise NonInvertibleError(f"{what}: non-finite precision")

    eig = np.linalg.eigvalsh(lam)
    lo, hi = float(eig[0]), float(eig[-1])

    if lo <= 0.0:
        raise NonInvertibleError(f"{what}: precision not positive definite (min eig={lo:.3e})", condition=np.inf)

    cond = hi / lo
    if cond > max_condition:
        raise NonInvertibleError(f"{what}: condition number {cond:.3e} > {max_condition:.1e}", condition=cond)

def to_moments(
    g: InfoGaussian,
    *, max_condition: float=MAX_CONDITION
) -> tuple[np.ndarray, np.ndarray]:
    """
    Returns (mean, covariance). Raises NonInvertibleError for singular or
    ill-conditioned precision.
    """
    _check_condition(g.lam, max_condition=max_condition, what="to_moments")
    try:
        factor = scipy.linalg.cho_factor(g.lam, lower=True, check_finite=False)
    except np.linalg.LinAlgError as e:
        raise NonInvertibleError(f"to_moments: Cholesky failed ({e})") from e

    sol = scipy.linalg.cho_solve(factor, np.column_stack([g.eta, np.eye(g.d)]), check_finite=False)
    mean = sol[:, 0]
    cov = 0.5 * (sol[:, 1:] + sol[:, 1:].T)
    return mean, cov

def damp(new: np.ndarray, old: np.ndarray, beta: float) -> np.ndarray:
    """(1 - beta) new + beta old; beta = 0 returns `new` untouched."""
    if beta <= 0.0:
        return new
    return (1.0 - beta) * new + beta * old

# stacked blocks

def spd_mask(
    lam: np.ndarray,
    *, max_condition: float=MAX_CONDITION
) -> np.ndarray:
    """
    Per-block mask over a stack of precision matrices: finite, positive definite and
    within the condition bound. Same test as to_moments, one LAPACK call per stack.
    """
    lam = np.asarray(lam, dtype=float)
    ok = np.all(np.isfinite(lam), axis=(-2, -1))
    if not np.any(ok):
        return ok

    eig = np.linalg.eigvalsh(lam[ok])
    lo, hi = eig[:, 0], eig[:, -1]
    ok[ok] = (lo > 0.0) & (hi <= max_condition * lo)
    return ok

def solve_stacked(lam: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """lam[i]^-1 rhs[i] for (n, d, d) against (n, d) or (n, d, k)."""
    if rhs.ndim == lam.ndim - 1:
        return np.linalg.solve(lam, rhs[..., None])[..., 0]
    return np.linalg.solve(lam, rhs)

def marginalize(
    eta_keep: np.ndarray,
    eta_drop: np.ndarray,
    lam_keep: np.ndarray,
    lam_cross: np.ndarray,
    lam_drop: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """
    Schur complement of fixed-size blocks, row by row:

        eta = eta_keep - lam_cross lam_drop^-1 eta_drop
        lam = lam_keep - lam_cross lam_drop^-1 lam_cross^T

    Shapes: eta_keep (n, a), eta_drop (n, b), lam_keep (n, a, a), lam_cross (n, a, b),
    lam_drop (n, b, b). lam_drop must already have passed spd_mask.
    """
    rhs = np.concatenate([np.swapaxes(lam_cross, -1, -2), eta_drop[..., None]], axis=-1)
    sol = solve_stacked(lam_drop, rhs)

    lam = lam_keep - lam_cross @ sol[..., :-1]
    lam = 0.5 * (lam + np.swapaxes(lam, -1, -2))
    eta = eta_keep - (lam_cross @ sol[..., -1:])[..., 0]
    return eta, lam
