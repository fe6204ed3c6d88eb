"""Eigenbasis of the Hilbert transform and its coefficient quadrature.

The causal modes are

    phi_k(w) = (pi w0)^-1/2 / (1 - i w/w0) * ((1 + i w/w0) / (1 - i w/w0))^k

With ``w = w0 tan(u/2)`` the Moebius factor becomes ``exp(i u)``, so inner
products with ``phi_k`` are Fourier coefficients on the circle and every
integral reduces to one FFT.  A function ``g`` on the line maps to

    g~(u) = sqrt(pi w0) exp(-i u/2) sec(u/2) g(w0 tan(u/2)),

which sends ``phi_k`` to ``exp(i k u)`` and preserves inner products.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import signal

__all__ = [
    "BasisConfig",
    "CoefficientSet",
    "UnderResolvedWarning",
    "eval_phi",
    "gram_matrix",
    "u_grid",
    "circle_map_samples",
    "fourier_coeffs",
    "toeplitz_coeffs",
    "rhs_coeffs",
    "compute_coefficients",
    "analyze",
    "synthesize",
    "discrete_hilbert",
]


class UnderResolvedWarning(RuntimeWarning):
    """Right-hand-side coefficients have not decayed within the requested modes."""


@dataclass(frozen=True)
class BasisConfig:
    omega_0: float
    n_modes: int = 100
    quad_points: int = 1 << 16

    def __post_init__(self):
        if not self.omega_0 > 0:
            raise ValueError("omega_0 must be positive")
        if self.n_modes < 1:
            raise ValueError("n_modes must be >= 1")
        q = self.quad_points
        if q < 8 * self.n_modes or q & (q - 1):
            raise ValueError("quad_points must be a power of two and >= 8 * n_modes")

    def with_modes(self, n: int) -> "BasisConfig":
        q = self.quad_points
        while q < 8 * n:
            q *= 2
        return BasisConfig(self.omega_0, n, q)

    def to_dict(self) -> dict:
        return {"omega0": self.omega_0, "n_modes": self.n_modes, "quad_points": self.quad_points}


@dataclass(frozen=True)
class CoefficientSet:
    t: np.ndarray
    s: np.ndarray
    quadrature_error: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "t": [float(x) for x in self.t],
                "s_re": [float(x) for x in np.real(self.s)],
                "s_im": [float(x) for x in np.imag(self.s)],
                "quadrature_error": float(self.quadrature_error),
            }
        )


def eval_phi(k: int, omega, omega_0: float = 1.0):
    x = np.asarray(omega, dtype=float) / omega_0
    z = (1 + 1j * x) / (1 - 1j * x)
    out = (math.pi * omega_0) ** -0.5 / (1 - 1j * x) * z**k
    return complex(out) if np.ndim(out) == 0 else out


def gram_matrix(n: int, omega_0: float = 1.0, quad_points: int = 1024) -> np.ndarray:
    """``<phi_j, phi_k> = int phi_j conj(phi_k) dw`` for ``j, k < n``.

    Computed directly from :func:`eval_phi` with ``w = w0 tan(u/2)`` and the
    midpoint rule in ``u``, which is exact for trigonometric polynomials of
    degree below ``quad_points``.
    """
    u = -math.pi + 2 * math.pi * (np.arange(quad_points) + 0.5) / quad_points
    w = omega_0 * np.tan(u / 2)
    jac = 0.5 * omega_0 / np.cos(u / 2) ** 2
    P = np.array([eval_phi(k, w, omega_0) for k in range(n)])
    return (P * jac) @ P.conj().T * (2 * math.pi / quad_points)


def u_grid(quad_points: int) -> np.ndarray:
    return -math.pi + 2 * math.pi * np.arange(quad_points) / quad_points


def _limit(S, which):
    fn = getattr(S, f"limit_{which}", None)
    return None if fn is None else fn()


def circle_map_samples(S, omega_0: float, quad_points: int, kind: str | None = None) -> np.ndarray:
    """Samples of the mapped function on ``u_j = -pi + 2 pi j / N``.

    ``kind="auto"`` samples ``S(w0 tan(u/2))`` directly (the Toeplitz
    generator); ``kind="cross"`` samples ``g~``.  Plain callables are
    accepted; they are treated as cross-type unless ``kind`` says otherwise.
    """
    kind = kind or getattr(S, "kind", "cross")
    u = u_grid(quad_points)
    inner = u[1:]
    w = omega_0 * np.tan(inner / 2)
    vals = np.asarray(S(w))
    if kind == "auto":
        out = np.empty(quad_points, dtype=float)
        out[1:] = np.real(vals)
        lim = _limit(S, "inf")
        if lim is None or not np.isfinite(lim):
            raise ValueError("auto-spectrum needs a finite w -> inf limit for the u = pi sample")
        out[0] = float(np.real(lim))
        mid = quad_points // 2
        if not np.isfinite(out[mid]):
            raise ValueError("auto-spectrum is not finite at w = 0; precondition first")
        return out
    out = np.empty(quad_points, dtype=complex)
    out[1:] = math.sqrt(math.pi * omega_0) * np.exp(-0.5j * inner) / np.cos(inner / 2) * vals
    mid = quad_points // 2
    if not np.isfinite(out[mid]):
        out[mid] = 0.0
    # u = pi: g~ ~ w g(w) vanishes when g decays faster than 1/w and has a
    # finite two-sided limit when it decays exactly like 1/w
    out[0] = 0.0
    alpha = getattr(S, "alpha", None)
    if alpha is not None and abs(alpha - 1) < 1e-9:
        d = 1e-7
        ue = np.array([math.pi - d, -math.pi + d])
        ge = math.sqrt(math.pi * omega_0) * np.exp(-0.5j * ue) / np.cos(ue / 2) * np.asarray(S(omega_0 * np.tan(ue / 2)))
        if np.all(np.isfinite(ge)):
            out[0] = ge.mean()
    return out


def fourier_coeffs(samples: np.ndarray, kmax: int) -> np.ndarray:
    """``(1/2pi) int exp(-i k u) g(u) du`` for ``k = 0..kmax-1`` on the standard grid."""
    N = samples.size
    F = np.fft.fft(samples)[:kmax] / N
    return F * (-1.0) ** np.arange(kmax)


def _doubling(sample_fn, n_coef, quad_points):
    c1 = fourier_coeffs(sample_fn(quad_points), n_coef)
    c2 = fourier_coeffs(sample_fn(2 * quad_points), n_coef)
    return c2, float(np.max(np.abs(c2 - c1)))


def toeplitz_coeffs(S_yy_prime, cfg: BasisConfig, n: int | None = None) -> tuple[np.ndarray, float]:
    """Generator ``t_0..t_{n-1}`` and its grid-doubling error estimate."""
    n = cfg.n_modes if n is None else n
    c, err = _doubling(lambda N: circle_map_samples(S_yy_prime, cfg.omega_0, N, "auto"), n, cfg.quad_points)
    resid = np.max(np.abs(c.imag))
    if resid > 1e-12 * max(abs(c[0].real), 1.0):
        raise ValueError(f"Toeplitz generator has imaginary residue {resid:.3g}; S_yy is not even")
    return c.real.copy(), err


def rhs_coeffs(
    S_xy_prime, cfg: BasisConfig, n: int | None = None, decay_rtol: float = 1e-3
) -> tuple[np.ndarray, float]:
    """Projections ``s_k = <phi_k, S_xy'>`` for ``k = 0..n-1`` with error estimate.

    Emits :class:`UnderResolvedWarning` when the first discarded coefficient
    is still above both ten quadrature errors and ``decay_rtol`` times the
    largest retained one.
    """
    n = cfg.n_modes if n is None else n
    c, err = _doubling(lambda N: circle_map_samples(S_xy_prime, cfg.omega_0, N, "cross"), n + 1, cfg.quad_points)
    s, nxt = c[:n].copy(), abs(c[n])
    if nxt > max(10 * err, decay_rtol * np.max(np.abs(s))):
        warnings.warn(
            f"|s_{n}| = {nxt:.3g} has not decayed (max |s_k| = {np.max(np.abs(s)):.3g}); "
            "consider more modes or another omega_0",
            UnderResolvedWarning,
            stacklevel=2,
        )
    return s, err


def compute_coefficients(S_yy_prime, S_xy_prime, cfg: BasisConfig) -> CoefficientSet:
    t, et = toeplitz_coeffs(S_yy_prime, cfg)
    s, es = rhs_coeffs(S_xy_prime, cfg)
    return CoefficientSet(t, s, max(et, es))


def analyze(g, cfg: BasisConfig, n: int | None = None) -> np.ndarray:
    """Causal expansion coefficients ``<phi_k, g>`` of a function on the line."""
    n = cfg.n_modes if n is None else n
    return fourier_coeffs(circle_map_samples(g, cfg.omega_0, cfg.quad_points, "cross"), n)


def synthesize(hcoeffs, cfg: BasisConfig, omega) -> np.ndarray:
    """``sum_k h_k phi_k(w)`` by Horner recursion in the unimodular ratio."""
    h = np.asarray(hcoeffs, dtype=complex)
    x = np.asarray(omega, dtype=float) / cfg.omega_0
    z = (1 + 1j * x) / (1 - 1j * x)
    acc = np.zeros(x.shape, dtype=complex)
    for hk in h[::-1]:
        acc = acc * z + hk
    return acc * (math.pi * cfg.omega_0) ** -0.5 / (1 - 1j * x)


def discrete_hilbert(samples) -> np.ndarray:
    """Principal-value Hilbert transform on a uniform frequency lattice.

    ``H[f](w) = PV int f(w') / (pi (w - w')) dw'`` with the odd-offset
    rule: weight ``2 / (pi m)`` for odd lattice offsets ``m``, zero for
    even ones.  The lattice spacing cancels.  Values near the ends see a
    truncated kernel and are not accurate.
    """
    f = np.asarray(samples)
    n = f.size
    m = np.arange(-(n - 1), n)
    kern = np.zeros(m.size)
    odd = (m % 2) != 0
    kern[odd] = 2.0 / (math.pi * m[odd])
    if np.iscomplexobj(f):
        full = signal.fftconvolve(f.real, kern) + 1j * signal.fftconvolve(f.imag, kern)
    else:
        full = signal.fftconvolve(f, kern)
    return full[n - 1: 2 * n - 1]
