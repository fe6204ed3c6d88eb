"""Finite-bandwidth error budget: basis scale, coefficient errors, ``n_max``."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from .spectral_model import Asymptotics

__all__ = [
    "ErrorBudget",
    "BandWarning",
    "choose_scale",
    "u_cutoffs",
    "delta_t_bound",
    "delta_t_bound_optimal",
    "n_max",
    "delta_s_bound",
    "fit_envelopes",
    "relative_filter_errors",
    "band_limited_toeplitz_coeffs",
    "compute_budget",
]


class BandWarning(RuntimeWarning):
    """The basis scale is not well inside the trusted band."""


def choose_scale(omega_m: float, omega_M: float) -> float:
    """Geometric mean of the band edges, which minimises the coefficient error bound."""
    if not (0 < omega_m < omega_M):
        raise ValueError(f"need 0 < omega_m < omega_M, got ({omega_m}, {omega_M})")
    return math.sqrt(omega_m * omega_M)


def u_cutoffs(omega_m: float, omega_M: float, omega_0: float) -> tuple[float, float]:
    return 2 * math.atan(omega_m / omega_0), 2 * math.atan(omega_M / omega_0)


def delta_t_bound(sup_Syy: float, omega_m: float, omega_M: float, omega_0: float) -> float:
    """Bound on each Toeplitz generator error from discarding data outside the band."""
    if omega_0 / omega_m < 10 or omega_M / omega_0 < 10:
        warnings.warn(
            f"omega_0 = {omega_0:.4g} is within a decade of a band edge ({omega_m:.4g}, {omega_M:.4g})",
            BandWarning,
            stacklevel=2,
        )
    u_m, u_M = u_cutoffs(omega_m, omega_M, omega_0)
    return sup_Syy * (u_m + (math.pi - u_M)) / math.pi


def delta_t_bound_optimal(sup_Syy: float, omega_m: float, omega_M: float) -> float:
    """Small-ratio form of :func:`delta_t_bound` at the geometric-mean scale."""
    return 4 / math.pi * sup_Syy * math.sqrt(omega_m / omega_M)


def n_max(kappa: float, omega_m: float, omega_M: float) -> int:
    if kappa < 1:
        raise ValueError("condition number must be >= 1")
    return max(1, int(math.floor(math.sqrt(omega_M / omega_m) / kappa)))


def delta_s_bound(asym: Asymptotics, u_m: float, u_M: float) -> float:
    """Bound on right-hand-side errors from the power-law envelopes of ``S_xy``.

    With ``b = beta_x - beta_y/2`` and ``a = alpha_x - alpha_y/2`` the two
    cut-off tails contribute ``B u_m^(1-b) / (1-b)`` and
    ``A (pi - u_M)^a / a``.
    """
    b = asym.beta_x - asym.beta_y / 2
    a = asym.alpha_x - asym.alpha_y / 2
    low = high = 0.0
    if asym.B_x_bar:
        if b >= 1:
            raise ValueError(f"beta_x - beta_y/2 = {b:g} >= 1: low-frequency envelope is not integrable")
        low = asym.B_x_bar * u_m ** (1 - b) / (1 - b)
    if asym.A_x_bar:
        if a <= 0:
            raise ValueError(f"alpha_x - alpha_y/2 = {a:g} <= 0: high-frequency envelope is not integrable")
        high = asym.A_x_bar * (math.pi - u_M) ** a / a
    return (low + high) / math.pi


def fit_envelopes(S_xy_prime, asym: Asymptotics, omega_m: float, omega_M: float, n: int = 256) -> tuple[float, float]:
    """``(A_x_bar, B_x_bar)``: max of ``|S_xy'| |w|^exponent`` over the outer and inner decades."""
    b = asym.beta_x - asym.beta_y / 2
    a = asym.alpha_x - asym.alpha_y / 2
    lo = np.geomspace(omega_m, 10 * omega_m, n)
    hi = np.geomspace(omega_M / 10, omega_M, n)
    B = float(np.max(np.abs(S_xy_prime(lo)) * lo**b))
    A = float(np.max(np.abs(S_xy_prime(hi)) * hi**a))
    return A, B


def relative_filter_errors(
    n: int,
    delta_t: float,
    delta_s: float,
    inf_Syy: float,
    kappa: float,
    s_norm: float,
    omega_m: float,
    omega_M: float,
) -> tuple[float, float, float]:
    """``(rel_err_y, rel_err_x, rel_err_y_kappa)``.

    ``rel_err_y`` is the tighter of ``n dt / inf S_yy`` and the
    condition-number form ``4 n kappa sqrt(w_m/w_M) / pi``, which is
    also returned on its own.
    """
    if not s_norm > 0:
        raise ValueError("right-hand side has zero norm")
    direct = n * delta_t / inf_Syy
    via_kappa = 4 * n * kappa / math.pi * math.sqrt(omega_m / omega_M)
    rel_y = min(direct, via_kappa)
    rel_x = math.sqrt(n) * kappa * delta_s / s_norm
    return rel_y, rel_x, via_kappa


def band_limited_toeplitz_coeffs(S, omega_0: float, band: tuple[float, float], n: int, epsrel=1e-10) -> np.ndarray:
    """``t_k = 2 int_{u_m}^{u_M} cos(k u) S(w0 tan(u/2)) du / 2pi`` for ``k < n``.

    Only data inside ``band`` contribute, as when the spectrum is known on
    a finite band alone.
    """
    u_m, u_M = u_cutoffs(band[0], band[1], omega_0)
    k = np.arange(n)

    def f(u):
        return np.cos(k * u) * float(np.real(S(omega_0 * math.tan(u / 2))))

    # split at decade boundaries in w so peaks are not missed
    edges_w = np.geomspace(band[0], band[1], max(2, int(math.log10(band[1] / band[0]) * 8) + 1))
    edges = 2 * np.arctan(edges_w / omega_0)
    total = np.zeros(n)
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad_vec(f, a, b, epsrel=epsrel, epsabs=1e-15, limit=400)
        total += val
    return total / math.pi


@dataclass(frozen=True)
class ErrorBudget:
    omega_m: float
    omega_M: float
    omega_0: float
    n: int
    kappa: float
    delta_t_bound: float
    delta_s_bound: float
    rel_err_y: float
    rel_err_x: float
    n_max: int
    dominant: str

    def to_dict(self) -> dict:
        return asdict(self)


def compute_budget(
    asym_prime: Asymptotics,
    S_xy_prime,
    bounds: tuple[float, float],
    s: np.ndarray,
    n: int,
    band: tuple[float, float],
    omega_0: float,
    kappa: Optional[float] = None,
) -> ErrorBudget:
    """Assemble the finite-band error budget for a designed filter.

    ``asym_prime`` holds the exponents of the original pair; envelopes are
    fitted on the scaled cross-spectrum.
    """
    omega_m, omega_M = band
    inf_S, sup_S = bounds
    kappa = sup_S / inf_S if kappa is None else kappa
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BandWarning)
        dt = delta_t_bound(sup_S, omega_m, omega_M, omega_0)
    A, B = fit_envelopes(S_xy_prime, asym_prime, omega_m, omega_M)
    env = Asymptotics(
        asym_prime.alpha_x, asym_prime.alpha_y, asym_prime.beta_x, asym_prime.beta_y,
        asym_prime.A_y, asym_prime.B_y, A, B,
    )
    u_m, u_M = u_cutoffs(omega_m, omega_M, omega_0)
    try:
        ds = delta_s_bound(env, u_m, u_M)
    except ValueError:
        ds = math.inf
    rel_y, rel_x, _ = relative_filter_errors(n, dt, ds, inf_S, kappa, float(np.linalg.norm(s)), omega_m, omega_M)
    return ErrorBudget(
        omega_m, omega_M, omega_0, n, kappa, dt, ds, rel_y, rel_x,
        n_max(max(kappa, 1.0), omega_m, omega_M),
        "y" if rel_y >= rel_x else "x",
    )
