"""Scaling functions that map a scale-free problem onto a square-integrable one.

Multiplying the data by ``f`` (analytic and zero-free in the upper half
plane) turns ``(S_xy, S_yy)`` into ``(conj(f) S_xy, |f|^2 S_yy)``.  The
optimal causal filter of the scaled problem, ``h'``, gives the original
filter as ``h = f h'``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .spectral_model import Asymptotics, SpectralFunction

__all__ = [
    "ScalingFunction",
    "ScaledSpectrum",
    "TransformedProblem",
    "choose_exponents",
    "eval_f",
    "transform",
    "reconstruct_filter",
    "spectrum_extremes",
]


@dataclass(frozen=True)
class ScalingFunction:
    """``f(w) = phase * w^beta * (i w0 + w)^(alpha - beta)``.

    ``w^beta`` takes ``arg w = pi`` on the negative axis, so the branch cut
    lies along the negative imaginary axis and ``f`` is analytic in the
    upper half plane.  ``phase_rad`` sets the unit-modulus prefactor; it
    cancels in the reconstructed filter.
    """

    alpha: float = 0.0
    beta: float = 0.0
    omega_0: float = 1.0
    phase_rad: float = 0.0

    def __post_init__(self):
        if not self.omega_0 > 0:
            raise ValueError("omega_0 must be positive")

    @property
    def phase(self) -> complex:
        return cmath.exp(1j * self.phase_rad)

    @property
    def is_identity(self) -> bool:
        return self.alpha == 0 and self.beta == 0

    def __call__(self, omega):
        return eval_f(self, omega)

    def abs2(self, omega):
        """``|f(w)|^2``, real, without forming complex powers."""
        w = np.abs(np.asarray(omega, dtype=float))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = w ** (2 * self.beta) * (self.omega_0**2 + w**2) ** (self.alpha - self.beta)
        return out

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "omega0": self.omega_0, "phase_rad": self.phase_rad}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalingFunction":
        return cls(float(d["alpha"]), float(d["beta"]), float(d["omega0"]), float(d.get("phase_rad", 0.0)))


def choose_exponents(asym: Asymptotics) -> tuple[float, float]:
    """Half the decay exponents of ``S_yy``: ``(alpha_y / 2, beta_y / 2)``."""
    return asym.alpha_y / 2, asym.beta_y / 2


def eval_f(s: ScalingFunction, omega):
    w = np.asarray(omega, dtype=float)
    if s.beta < 0 and np.any(w == 0):
        raise ValueError("scaling function is singular at w = 0 when beta < 0")
    arg = np.where(w < 0, math.pi, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        mag = np.abs(w) ** s.beta
    lead = mag * np.exp(1j * s.beta * arg)
    if s.beta > 0:
        lead = np.where(w == 0, 0.0, lead)
    out = s.phase * lead * (1j * s.omega_0 + w) ** (s.alpha - s.beta)
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------


class ScaledSpectrum:
    """A spectrum multiplied by ``|f|^2`` (auto) or ``conj(f)`` (cross).

    Evaluated on the whole real line directly, since ``conj(f) S_xy`` is
    conjugate-symmetric only up to a constant phase.
    """

    def __init__(self, base: SpectralFunction, scaling: ScalingFunction):
        self.base = base
        self.scaling = scaling
        self.kind = base.kind
        s = scaling
        if self.kind == "auto":
            self.alpha = base.alpha - 2 * s.alpha
            self.beta = base.beta - 2 * s.beta
        else:
            self.alpha = base.alpha - s.alpha
            self.beta = base.beta - s.beta
        self.support = base.support

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        scalar = w.ndim == 0
        w = np.atleast_1d(w)
        nz = w != 0
        if self.kind == "auto":
            out = np.empty(w.shape, dtype=float)
            out[nz] = self.scaling.abs2(w[nz]) * self.base(w[nz])
            out[~nz] = self.limit_zero()
        else:
            out = np.empty(w.shape, dtype=complex)
            out[nz] = np.conj(eval_f(self.scaling, w[nz])) * self.base(w[nz])
            out[~nz] = self.limit_zero()
        return out[0] if scalar else out

    def _amp_inf(self):
        C, _ = self.base.tail_inf()
        if self.kind == "auto":
            return C
        # conj(f) -> conj(phase) * w^alpha (real positive w) at +inf
        return np.conj(self.scaling.phase) * C

    def _amp_zero(self):
        C, _ = self.base.tail_zero()
        s = self.scaling
        if self.kind == "auto":
            return C * s.omega_0 ** (2 * (s.alpha - s.beta))
        # conj(f) -> conj(phase) * w^beta * (-i w0)^(alpha-beta) at 0+
        return np.conj(s.phase) * C * np.conj((1j * s.omega_0) ** (s.alpha - s.beta))

    def limit_inf(self):
        if abs(self.alpha) < 1e-12:
            return self._amp_inf()
        return 0.0 if self.alpha > 0 else math.inf

    def limit_zero(self):
        if abs(self.beta) < 1e-12:
            return self._amp_zero()
        return 0.0 if self.beta < 0 else math.inf

    @property
    def amp_inf(self) -> float:
        return float(abs(self._amp_inf()))

    @property
    def amp_zero(self) -> float:
        return float(abs(self._amp_zero()))


def _probe_band(support, omega_0):
    lo, hi = support
    lo = lo / 10 if lo > 0 else omega_0 * 1e-6
    hi = hi * 10 if math.isfinite(hi) else omega_0 * 1e6
    return lo, hi


def spectrum_extremes(S, band, n=4096, refine=True, max_refine=50) -> tuple[float, float]:
    """Infimum and supremum of a real even spectrum on ``band`` plus its limits.

    A log grid locates the extremes; ``minimize_scalar`` polishes each
    interior local extremum so the infimum is not overestimated.
    """
    grid = np.geomspace(band[0], band[1], n)
    v = np.asarray(S(grid), dtype=float)
    lo_val, hi_val = float(v.min()), float(v.max())
    if refine:
        lg = np.log(grid)
        for sign in (1.0, -1.0):
            sv = sign * v
            idx = np.flatnonzero((sv[1:-1] <= sv[:-2]) & (sv[1:-1] <= sv[2:])) + 1
            # noisy tabulated data can have thousands of local extrema; polish the deepest
            idx = idx[np.argsort(sv[idx])[:max_refine]]
            for i in idx:
                res = optimize.minimize_scalar(
                    lambda x: sign * float(S(math.exp(x))),
                    bounds=(lg[i - 1], lg[i + 1]),
                    method="bounded",
                    options={"xatol": 1e-12},
                )
                val = sign * res.fun
                lo_val, hi_val = min(lo_val, val), max(hi_val, val)
    for lim in (S.limit_zero(), S.limit_inf()):
        lim = float(np.real(lim))
        lo_val, hi_val = min(lo_val, lim), max(hi_val, lim)
    return lo_val, hi_val


@dataclass(frozen=True)
class TransformedProblem:
    S_xy_prime: ScaledSpectrum
    S_yy_prime: ScaledSpectrum
    scaling: ScalingFunction
    bounds: tuple[float, float]

    @property
    def kappa_upper(self) -> float:
        return self.bounds[1] / self.bounds[0]


def transform(S_xy: SpectralFunction, S_yy: SpectralFunction, s: ScalingFunction) -> TransformedProblem:
    """Scale the data pair and record the range of the scaled ``S_yy``."""
    Sxy_p = ScaledSpectrum(S_xy, s)
    Syy_p = ScaledSpectrum(S_yy, s)
    bounds = spectrum_extremes(Syy_p, _probe_band(S_yy.support, s.omega_0))
    if not bounds[0] > 0:
        raise ValueError(
            f"scaled S_yy is not bounded away from zero (inf = {bounds[0]:.3g}); "
            "check the declared asymptotic exponents"
        )
    if not math.isfinite(bounds[1]):
        raise ValueError("scaled S_yy is unbounded; check the declared asymptotic exponents")
    return TransformedProblem(Sxy_p, Syy_p, s, bounds)


def reconstruct_filter(h_prime, s: ScalingFunction):
    """``h = f h'``; accepts a callable or samples paired with ``omega``."""
    if callable(h_prime):
        return lambda omega: eval_f(s, omega) * h_prime(omega)
    omega, values = h_prime
    return eval_f(s, omega) * np.asarray(values)
