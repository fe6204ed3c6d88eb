"""Truncated symmetric Toeplitz systems ``T h = s`` and their conditioning."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

__all__ = [
    "ToeplitzSystem",
    "ConditionReport",
    "NotPositiveDefinite",
    "IllConditionedWarning",
    "JitterWarning",
    "solve",
    "levinson",
    "condition_report",
    "spectrum_bounds_check",
]


class NotPositiveDefinite(ArithmeticError):
    """The Toeplitz matrix failed its Cholesky factorization."""


class IllConditionedWarning(RuntimeWarning):
    pass


class JitterWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class ToeplitzSystem:
    t: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        s = np.asarray(self.s, dtype=complex)
        if t.ndim != 1 or t.size < 1 or s.shape != (t.size,):
            raise ValueError("t and s must be 1-D of equal length")
        if not t[0] > 0:
            raise ValueError("t_0 must be positive")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "s", s)

    @property
    def n(self) -> int:
        return self.t.size

    def matrix(self) -> np.ndarray:
        return linalg.toeplitz(self.t)

    def truncate(self, n: int) -> "ToeplitzSystem":
        return ToeplitzSystem(self.t[:n], self.s[:n])


def _cholesky_solve(T: np.ndarray, s: np.ndarray) -> np.ndarray:
    try:
        c = linalg.cho_factor(T, lower=True, check_finite=True)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    # real symmetric matrix: real and imaginary parts share the factor
    rhs = np.column_stack([s.real, s.imag])
    x = linalg.cho_solve(c, rhs)
    return x[:, 0] + 1j * x[:, 1]


def levinson(t: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Levinson recursion for a real symmetric positive-definite Toeplitz system.

    Raises :class:`NotPositiveDefinite` when a prediction-error power
    becomes non-positive.
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=complex)
    n = t.size
    x = np.zeros(n, dtype=complex)
    a = np.zeros(n)  # forward predictor, a[0] = 1
    a[0] = 1.0
    err = t[0]
    x[0] = s[0] / t[0]
    for m in range(1, n):
        # extend predictor to order m
        acc = np.dot(a[:m], t[m:0:-1])
        k = -acc / err
        a[: m + 1] = a[: m + 1] + k * a[m::-1]
        err *= 1 - k * k
        if not err > 0:
            raise NotPositiveDefinite(f"prediction error power non-positive at order {m}")
        # update solution with the backward predictor (reverse of a)
        eps = s[m] - np.dot(t[m:0:-1], x[:m])
        x[: m + 1] = x[: m + 1] + (eps / err) * a[m::-1]
    return x


def solve(sys: ToeplitzSystem, method: str = "cholesky", jitter: bool = False, kappa_upper: Optional[float] = None):
    """Solve ``T^(n) h = s``.

    Parameters
    ----------
    method : {"cholesky", "levinson"}
    jitter : bool
        Add ``1e-12 t_0`` to the diagonal (exploratory use only; warned).
    kappa_upper : float, optional
        Condition-number bound; values above 1e12 trigger
        :class:`IllConditionedWarning`.
    """
    t = sys.t.copy()
    if jitter:
        t[0] += 1e-12 * t[0]
        warnings.warn("diagonal jitter of 1e-12 t_0 added to the Toeplitz system", JitterWarning, stacklevel=2)
    if kappa_upper is not None and kappa_upper > 1e12:
        warnings.warn(f"condition bound {kappa_upper:.3g} exceeds 1e12", IllConditionedWarning, stacklevel=2)
    if method == "cholesky":
        return _cholesky_solve(linalg.toeplitz(t), sys.s)
    if method == "levinson":
        return levinson(t, sys.s)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class ConditionReport:
    kappa_upper: float
    kappa_lower: float
    v: float
    eig_min_bound: float
    eig_max_bound: float
    measured_extremes: Optional[tuple[float, float]] = None

    @property
    def kappa_measured(self) -> Optional[float]:
        if self.measured_extremes is None:
            return None
        lo, hi = self.measured_extremes
        return hi / lo

    def to_dict(self) -> dict:
        d = {
            "kappa_upper": self.kappa_upper,
            "kappa_lower": self.kappa_lower,
            "v": self.v,
            "eig_min_bound": self.eig_min_bound,
            "eig_max_bound": self.eig_max_bound,
        }
        if self.measured_extremes is not None:
            d["eig_min"], d["eig_max"] = self.measured_extremes
            d["kappa_measured"] = self.kappa_measured
        return d


def condition_report(sys: ToeplitzSystem, bounds: tuple[float, float], dense_limit: int = 512) -> ConditionReport:
    """Lower bound ``1 + v/t_0`` and upper bound ``sup/inf`` on ``kappa(T^(n))``."""
    n = sys.n
    if n < 2:
        raise ValueError("condition report needs n >= 2")
    k = np.arange(1, n)
    v = float(np.sqrt(2 * np.sum(sys.t[1:] ** 2 * (n - k)) / n))
    lo, hi = bounds
    measured = None
    if n <= dense_limit:
        ev = linalg.eigvalsh(sys.matrix())
        measured = (float(ev[0]), float(ev[-1]))
    return ConditionReport(hi / lo, 1 + v / sys.t[0], v, lo, hi, measured)


@dataclass(frozen=True)
class BoundsCheck:
    ok: bool
    eig_min: float
    eig_max: float
    lower: float
    upper: float
    tol: float


def spectrum_bounds_check(sys: ToeplitzSystem, bounds: tuple[float, float], tol: Optional[float] = None) -> BoundsCheck:
    """All eigenvalues of ``T^(n)`` within ``[inf - tol, sup + tol]``, ``tol = 1e-8 sup``."""
    if sys.n > 512:
        raise ValueError("dense eigenvalue check limited to n <= 512")
    lo, hi = bounds
    tol = 1e-8 * hi if tol is None else tol
    ev = linalg.eigvalsh(sys.matrix())
    ok = bool(ev[0] >= lo - tol and ev[-1] <= hi + tol)
    return BoundsCheck(ok, float(ev[0]), float(ev[-1]), lo, hi, tol)
