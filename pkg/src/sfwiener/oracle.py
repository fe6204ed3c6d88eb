"""Brute-force reference solutions used to check the eigenbasis design.

None of these share code paths with the Toeplitz/eigenbasis pipeline
beyond spectrum evaluation and the scaling function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .basis import discrete_hilbert
from .precondition import ScalingFunction, ScaledSpectrum, eval_f

__all__ = [
    "LatticeProblem",
    "noncausal_filter",
    "lattice_problem",
    "lattice_causal_filter",
    "LatticeFilter",
    "lattice_design",
    "extrapolated_lattice_response",
    "rational_wiener",
    "frequency_lattice_filter",
]


def noncausal_filter(S_xy, S_yy, omega) -> np.ndarray:
    """``S_xy / S_yy``, the unconstrained optimum."""
    syy = np.asarray(S_yy(omega), dtype=float)
    if np.any(syy <= 0) or not np.all(np.isfinite(syy)):
        raise ZeroDivisionError("S_yy must be positive and finite on the grid")
    return np.asarray(S_xy(omega), dtype=complex) / syy


@dataclass(frozen=True)
class LatticeProblem:
    dt: float
    r_yy: np.ndarray  # lags 0..L-1
    r_xy: np.ndarray  # lags 0..L-1

    @property
    def lag_count(self) -> int:
        return self.r_yy.size


def _covariances(S, L: int, dt: float, oversample: int):
    """``r[k] = int_{|w| < pi/dt} S(w) exp(-i w k dt) dw / 2pi`` by a dense DFT.

    The data are treated as band-limited to the lattice Nyquist frequency.
    """
    K = oversample * 2 * L
    j = np.arange(K)
    w = (j - K // 2) * (2 * math.pi / (K * dt))  # [-pi/dt, pi/dt)
    vals = np.asarray(S(w), dtype=complex)
    # sum_j S_j exp(-i w_j k dt) with w_j = (j - K/2) dw
    F = np.fft.fft(vals)[:L]
    k = np.arange(L)
    r = F * np.exp(1j * math.pi * k) / (K * dt)
    return r


def lattice_problem(S_xy, S_yy, L: int, dt: float, oversample: int = 16) -> LatticeProblem:
    r_yy = _covariances(S_yy, L, dt, oversample)
    r_xy = _covariances(S_xy, L, dt, oversample)
    if np.max(np.abs(r_yy.imag)) > 1e-9 * abs(r_yy[0]):
        raise ValueError("autocovariance is not real; S_yy is not even")
    return LatticeProblem(dt, r_yy.real.copy(), r_xy)


def lattice_causal_filter(S_xy, S_yy, L: int, dt: float, oversample: int = 16) -> np.ndarray:
    """Taps ``g[0..L-1]`` solving ``sum_m r_yy[k-m] g[m] = r_xy[k]``, ``k < L``.

    The estimate is ``x_hat[k] = sum_m g[m] y[k-m]`` and its frequency
    response is ``sum_m g[m] exp(i w m dt)``.
    """
    p = lattice_problem(S_xy, S_yy, L, dt, oversample)
    _check_positive_definite(p.r_yy)
    g = linalg.solve_toeplitz(p.r_yy, p.r_xy.real) + 1j * linalg.solve_toeplitz(p.r_yy, p.r_xy.imag)
    return g.real if np.max(np.abs(g.imag)) <= 1e-9 * max(np.max(np.abs(g.real)), 1e-300) else g


def _check_positive_definite(r: np.ndarray) -> None:
    """Durbin recursion: the Toeplitz matrix of ``r`` is positive definite iff
    every reflection coefficient has modulus below one."""
    if not r[0] > 0:
        raise ArithmeticError("lag-0 autocovariance is not positive")
    a = np.zeros(0)  # a[i] multiplies lag i + 1
    err = r[0]
    for m in range(1, r.size):
        k = -(r[m] + a @ r[m - 1: 0: -1]) / err
        if not abs(k) < 1:
            raise ArithmeticError(f"lattice covariance is not positive definite (order {m})")
        a = np.concatenate([a + k * a[::-1], [k]])
        err *= 1 - k * k


@dataclass(frozen=True)
class LatticeFilter:
    """Lattice taps with an optional scaling factor for the response.

    ``response`` treats the taps as samples ``dt * H(m dt)`` of a continuous
    impulse response and weights tap 0 by ``end_weight`` (trapezoid rule at
    the jump ``t = 0``), which removes the leading ``O(dt)`` bias.
    """

    taps: np.ndarray
    dt: float
    scaling: Optional[ScalingFunction] = None
    end_weight: float = 0.5

    def response(self, omega) -> np.ndarray:
        w = np.asarray(omega, dtype=float)
        g = np.array(self.taps, dtype=complex)
        g[0] *= self.end_weight
        m = np.arange(g.size)
        flat_w = w.reshape(-1)
        out = np.empty(flat_w.shape, dtype=complex)
        for i in range(0, flat_w.size, 1024):
            seg = flat_w[i: i + 1024]
            out[i: i + 1024] = np.exp(1j * self.dt * np.outer(seg, m)) @ g
        out = out.reshape(w.shape)
        if self.scaling is not None:
            out = out * eval_f(self.scaling, w)
        return out


def lattice_design(S_xy, S_yy, scaling: Optional[ScalingFunction], L: int, dt: float, oversample: int = 16) -> LatticeFilter:
    """Lattice solution on the scaled data, mapped back by ``h = f h'``.

    Scale-free ``S_yy`` has no finite covariance, so the lattice runs on
    ``(conj(f) S_xy, |f|^2 S_yy)``.
    """
    if scaling is None:
        return LatticeFilter(lattice_causal_filter(S_xy, S_yy, L, dt, oversample), dt, None)
    taps = lattice_causal_filter(ScaledSpectrum(S_xy, scaling), ScaledSpectrum(S_yy, scaling), L, dt, oversample)
    return LatticeFilter(taps, dt, scaling)


def extrapolated_lattice_response(
    S_xy, S_yy, scaling: Optional[ScalingFunction], memory: float, dt: float, omega, oversample: int = 16
) -> np.ndarray:
    """Richardson combination ``2 h(dt/2) - h(dt)`` of two lattice responses.

    The lattice response carries an error linear in ``dt``; the
    combination cancels it, leaving a second-order residual.
    """
    coarse = lattice_design(S_xy, S_yy, scaling, int(round(memory / dt)), dt, oversample)
    fine = lattice_design(S_xy, S_yy, scaling, int(round(2 * memory / dt)), dt / 2, oversample)
    return 2 * fine.response(omega) - coarse.response(omega)


def rational_wiener(omega, a: float = 1.0, c: float = 1.0, noise: float = 1.0, lead_time: float = 0.0) -> np.ndarray:
    """Causal filter for ``S_xx = 2ac / (w^2 + a^2)`` in white noise of level ``noise``.

    Spectral factorisation gives ``h = 2ac / (noise (a + b) (b - i w))``
    with ``b^2 = a^2 + 2ac/noise``; predicting ``tau`` ahead multiplies by
    ``exp(-a tau)``.
    """
    w = np.asarray(omega, dtype=float)
    b = math.sqrt(a * a + 2 * a * c / noise)
    return 2 * a * c / (noise * (a + b) * (b - 1j * w)) * math.exp(-a * lead_time)


def frequency_lattice_filter(S_xy, S_yy, omega: np.ndarray) -> np.ndarray:
    """Causal filter by log-spectral factorisation on a uniform frequency lattice.

    ``S_yy = |Psi|^2`` with ``Psi = exp(P+ log S_yy)`` and
    ``h = [S_xy / conj(Psi)]_+ / Psi``, where ``P+ = (1 + iH)/2`` projects
    onto causal functions and ``H`` is :func:`basis.discrete_hilbert`.
    Accuracy degrades near the lattice ends.
    """
    w = np.asarray(omega, dtype=float)
    L = np.log(np.asarray(S_yy(w), dtype=float))
    Psi = np.exp(0.5 * (L + 1j * discrete_hilbert(L)))
    g = np.asarray(S_xy(w), dtype=complex) / np.conj(Psi)
    g_plus = 0.5 * (g + 1j * discrete_hilbert(g))
    return g_plus / Psi
