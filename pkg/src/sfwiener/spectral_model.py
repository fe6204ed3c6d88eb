"""Spectral data for the causal Wiener problem.

Spectra are two-sided densities in angular frequency, normalised so that
``integral S(w) dw / 2pi`` is the variance.  Every spectrum carries the
power-law exponents that govern it near ``w = 0`` and ``w = inf``; outside
its trusted support it is continued by those power laws, value-matched at
the support edge.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

__all__ = [
    "Asymptotics",
    "SpectralFunction",
    "TabulatedSpectrum",
    "ValidationReport",
    "VarianceEstimate",
    "make_scale_free_example",
    "make_rational_benchmark",
    "add_spectra",
    "as_cross",
    "model_from_config",
    "validate_data",
    "eval_error_spectrum",
    "integrate_error_variance",
    "read_spectrum_csv",
    "write_spectrum_csv",
]

_EXP_TOL = 1e-12


def _is_zero(x: float) -> bool:
    return abs(x) < _EXP_TOL


@dataclass(frozen=True)
class Asymptotics:
    """Power-law exponents and amplitudes of the data pair (S_xy, S_yy).

    ``|S_xy| ~ A_x_bar / |w|^alpha_x`` as ``w -> inf`` and
    ``|S_xy| ~ B_x_bar / |w|^beta_x`` as ``w -> 0``; likewise for ``S_yy``
    with ``A_y``, ``B_y``.
    """

    alpha_x: float
    alpha_y: float
    beta_x: float
    beta_y: float
    A_y: float
    B_y: float
    A_x_bar: float = 0.0
    B_x_bar: float = 0.0

    @classmethod
    def from_pair(cls, S_xy: "SpectralFunction", S_yy: "SpectralFunction") -> "Asymptotics":
        return cls(
            alpha_x=S_xy.alpha,
            alpha_y=S_yy.alpha,
            beta_x=S_xy.beta,
            beta_y=S_yy.beta,
            A_y=S_yy.amp_inf,
            B_y=S_yy.amp_zero,
            A_x_bar=abs(S_xy.amp_inf),
            B_x_bar=abs(S_xy.amp_zero),
        )

    @property
    def integrable_inf(self) -> bool:
        return 2 * self.alpha_x - self.alpha_y > 1

    @property
    def integrable_zero(self) -> bool:
        return 2 * self.beta_x - self.beta_y < 1

    @property
    def strengthened(self) -> bool:
        """Stronger exponent conditions under which the smooth-data rates apply."""
        return (2 * self.alpha_x - self.alpha_y > 2) and (2 * self.beta_x - self.beta_y < 0)


@dataclass(frozen=True)
class SpectralFunction:
    """Evaluable spectrum with declared power-law tails.

    Parameters
    ----------
    kind : {"auto", "cross"}
        Auto-spectra are real and even; cross-spectra obey ``S(-w) = S(w)*``.
    evaluator : callable
        Vectorised map from positive angular frequencies (rad/s) to values.
        Negative frequencies are obtained by symmetry.
    support : (float, float)
        Trusted band ``[w_m, w_M]``.  ``(0, inf)`` means the evaluator is
        valid everywhere.
    alpha, beta : float
        ``|S| ~ |w|^-alpha`` at infinity and ``|S| ~ |w|^-beta`` at zero.
    amp_inf, amp_zero : float
        Declared amplitudes of those tails.  With a finite support the
        value-matched amplitudes are used for evaluation instead.
    """

    kind: str
    evaluator: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float] = (0.0, math.inf)
    alpha: float = 0.0
    beta: float = 0.0
    amp_inf: float = 1.0
    amp_zero: float = 1.0
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("auto", "cross"):
            raise ValueError(f"kind must be 'auto' or 'cross', got {self.kind!r}")
        lo, hi = self.support
        if not (0.0 <= lo < hi):
            raise ValueError(f"invalid support {self.support}")

    # -- tails -----------------------------------------------------------
    def _edge_value(self, w: float) -> complex:
        v = np.asarray(self.evaluator(np.array([w], dtype=float)))[0]
        return v if self.kind == "cross" else float(np.real(v))

    @property
    def has_lower_edge(self) -> bool:
        return self.support[0] > 0

    @property
    def has_upper_edge(self) -> bool:
        return math.isfinite(self.support[1])

    def tail_inf(self) -> tuple[complex, float]:
        """``(C, alpha)`` such that ``S(w) = C * w^-alpha`` beyond the support."""
        if self.has_upper_edge:
            wM = self.support[1]
            return self._edge_value(wM) * wM**self.alpha, self.alpha
        return self.amp_inf, self.alpha

    def tail_zero(self) -> tuple[complex, float]:
        """``(C, beta)`` such that ``S(w) = C * w^-beta`` below the support."""
        if self.has_lower_edge:
            wm = self.support[0]
            return self._edge_value(wm) * wm**self.beta, self.beta
        return self.amp_zero, self.beta

    def limit_inf(self) -> complex:
        C, a = self.tail_inf()
        if _is_zero(a):
            return C
        return 0.0 if a > 0 else math.inf

    def limit_zero(self) -> complex:
        C, b = self.tail_zero()
        if _is_zero(b):
            return C
        return 0.0 if b < 0 else math.inf

    # -- evaluation ------------------------------------------------------
    def _positive(self, w: np.ndarray) -> np.ndarray:
        dtype = complex if self.kind == "cross" else float
        out = np.empty(w.shape, dtype=dtype)
        lo, hi = self.support
        inside = (w >= lo) & (w <= hi)
        if inside.any():
            v = np.asarray(self.evaluator(w[inside]))
            out[inside] = v if self.kind == "cross" else np.real(v)
        above = w > hi
        if above.any():
            C, a = self.tail_inf()
            out[above] = C * w[above] ** (-a)
        below = (w < lo) & (w > 0)
        if below.any():
            C, b = self.tail_zero()
            out[below] = C * w[below] ** (-b)
        zero = w == 0
        if zero.any():
            out[zero] = self.limit_zero()
        return out

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        scalar = w.ndim == 0
        w = np.atleast_1d(w)
        out = self._positive(np.abs(w))
        if self.kind == "cross":
            neg = w < 0
            out[neg] = np.conj(out[neg])
        return out[0] if scalar else out


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def _lorentzian(A: float, gamma: float, omega_c: float):
    def ev(w):
        return A * gamma**2 / ((np.abs(w) - omega_c) ** 2 + gamma**2)

    return ev


def _powerlaw_plus_white(B: float, beta: float, white: float):
    def ev(w):
        w = np.asarray(w, dtype=float)
        return B / w**beta + white

    return ev


def add_spectra(a: SpectralFunction, b: SpectralFunction, name: str = "") -> SpectralFunction:
    """Sum of two spectra of the same kind; tails follow the dominant term."""
    if a.kind != b.kind:
        raise ValueError("cannot add auto and cross spectra")
    lo = max(a.support[0], b.support[0])
    hi = min(a.support[1], b.support[1])

    def dominant(ea, ca, eb, cb, smaller_wins):
        if abs(ea - eb) < _EXP_TOL:
            return ea, ca + cb
        pick_a = (ea < eb) if smaller_wins else (ea > eb)
        return (ea, ca) if pick_a else (eb, cb)

    alpha, amp_inf = dominant(a.alpha, a.amp_inf, b.alpha, b.amp_inf, True)
    beta, amp_zero = dominant(a.beta, a.amp_zero, b.beta, b.amp_zero, False)
    return SpectralFunction(
        kind=a.kind,
        evaluator=lambda w: a.evaluator(w) + b.evaluator(w),
        support=(lo, hi),
        alpha=alpha,
        beta=beta,
        amp_inf=amp_inf,
        amp_zero=amp_zero,
        name=name or f"({a.name}+{b.name})",
    )


def as_cross(S: SpectralFunction, name: str = "") -> SpectralFunction:
    """Reinterpret a real even spectrum as a cross-spectrum (e.g. S_xy = S_xx)."""
    return SpectralFunction(
        kind="cross",
        evaluator=lambda w: np.asarray(S.evaluator(w), dtype=complex),
        support=S.support,
        alpha=S.alpha,
        beta=S.beta,
        amp_inf=S.amp_inf,
        amp_zero=S.amp_zero,
        name=name or S.name,
    )


def lorentzian_peak(A=0.9, gamma=2 * math.pi, omega_c=20 * math.pi, support=(0.0, math.inf)):
    """``A gamma^2 / ((|w| - w_c)^2 + gamma^2)``."""
    return SpectralFunction(
        kind="auto",
        evaluator=_lorentzian(A, gamma, omega_c),
        support=tuple(support),
        alpha=2.0,
        beta=0.0,
        amp_inf=A * gamma**2,
        amp_zero=A * gamma**2 / (omega_c**2 + gamma**2),
        name="lorentzian_peak",
    )


def powerlaw_plus_white(B=5.0, beta=1.8, white=0.01, support=(0.0, math.inf)):
    """``B / |w|^beta + white``."""
    if white <= 0:
        raise ValueError("white floor must be positive")
    return SpectralFunction(
        kind="auto",
        evaluator=_powerlaw_plus_white(B, beta, white),
        support=tuple(support),
        alpha=0.0,
        beta=beta,
        amp_inf=white,
        amp_zero=B if beta > 0 else B + white,
        name="powerlaw_plus_white",
    )


def rational_lorentzian(a=1.0, c=1.0, support=(0.0, math.inf)):
    """``c * 2a / (w^2 + a^2)`` (Ornstein-Uhlenbeck spectrum)."""
    return SpectralFunction(
        kind="auto",
        evaluator=lambda w: c * 2 * a / (np.asarray(w, dtype=float) ** 2 + a**2),
        support=tuple(support),
        alpha=2.0,
        beta=0.0,
        amp_inf=2 * a * c,
        amp_zero=2 * c / a,
        name="rational_lorentzian",
    )


def white(level=1.0, support=(0.0, math.inf)):
    return SpectralFunction(
        kind="auto",
        evaluator=lambda w: np.full(np.shape(w), float(level)),
        support=tuple(support),
        alpha=0.0,
        beta=0.0,
        amp_inf=level,
        amp_zero=level,
        name="white",
    )


_MODELS = {
    "lorentzian_peak": lorentzian_peak,
    "powerlaw_plus_white": powerlaw_plus_white,
    "rational_lorentzian": rational_lorentzian,
    "white": white,
}


def model_from_config(cfg: dict) -> SpectralFunction:
    """Build an analytic spectrum from ``{"model": ..., "params": {...}}``.

    ``{"model": "sum", "terms": [cfg, cfg, ...]}`` adds terms.
    """
    model = cfg.get("model")
    if model == "sum":
        terms = [model_from_config(t) for t in cfg["terms"]]
        out = terms[0]
        for t in terms[1:]:
            out = add_spectra(out, t)
        return out
    if model not in _MODELS:
        raise ValueError(f"unknown spectral model {model!r}; known: {sorted(_MODELS)} or 'sum'")
    params = dict(cfg.get("params", {}))
    if "support" in params:
        params["support"] = tuple(float(x) for x in params["support"])
    return _MODELS[model](**params)


SCALE_FREE_SUPPORT = (2 * math.pi / 1600.0, 512 * math.pi)


def make_scale_free_example(support=SCALE_FREE_SUPPORT):
    """Lorentzian signal in scale-free noise, as in the demonstration experiment.

    Returns ``(S_xx, S_nn, S_yy, S_xy)`` with gamma = 2pi rad/s, A = 0.9,
    w_c = 20pi rad/s and ``S_nn = 5/|w|^1.8 + 0.01``; signal and noise are
    orthogonal so ``S_xy = S_xx``.  The default support is the band resolved
    by a 1600 s record sampled at 512 Hz.
    """
    S_xx = lorentzian_peak(0.9, 2 * math.pi, 20 * math.pi, support)
    S_nn = powerlaw_plus_white(5.0, 1.8, 0.01, support)
    S_yy = add_spectra(S_xx, S_nn, name="S_yy")
    S_xy = as_cross(S_xx, name="S_xy")
    return S_xx, S_nn, S_yy, S_xy


def make_rational_benchmark(a=1.0, noise=1.0, support=(0.0, math.inf)):
    """OU signal ``2a/(w^2+a^2)`` in white noise: ``(S_xx, S_nn, S_yy, S_xy)``."""
    S_xx = rational_lorentzian(a, 1.0, support)
    S_nn = white(noise, support)
    S_yy = add_spectra(S_xx, S_nn, name="S_yy")
    return S_xx, S_nn, S_yy, as_cross(S_xx, name="S_xy")


# ---------------------------------------------------------------------------
# tabulated spectra
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TabulatedSpectrum:
    """Spectral samples on a strictly increasing positive grid (rad/s)."""

    frequencies: np.ndarray
    values: np.ndarray
    kind: str = "auto"

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        v = np.asarray(self.values, dtype=complex if self.kind == "cross" else float)
        if f.ndim != 1 or f.size != v.size or f.size < 2:
            raise ValueError("frequencies and values must be 1-D of equal length >= 2")
        if np.any(f <= 0) or np.any(np.diff(f) <= 0):
            raise ValueError("frequency grid must be positive and strictly increasing")
        if self.kind == "auto" and np.any(v <= 0):
            raise ValueError("auto-spectrum samples must be strictly positive (see floored())")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "values", v)

    @classmethod
    def floored(cls, frequencies, values, eps=1e-6, window=9) -> "TabulatedSpectrum":
        """Auto-spectrum with non-positive bins raised to ``eps`` times the local median."""
        v = np.array(values, dtype=float)
        bad = ~(v > 0)
        if bad.any():
            pos = np.where(v > 0, v, np.nan)
            half = window // 2
            for i in np.flatnonzero(bad):
                seg = pos[max(0, i - half): i + half + 1]
                med = np.nanmedian(seg) if np.isfinite(seg).any() else np.nanmedian(pos)
                v[i] = eps * med
            warnings.warn(f"floored {bad.sum()} non-positive spectral bins", RuntimeWarning)
        return cls(np.asarray(frequencies, dtype=float), v, "auto")

    def interpolate(self, omega) -> np.ndarray:
        w = np.asarray(omega, dtype=float)
        lw = np.log(w)
        lf = np.log(self.frequencies)
        if self.kind == "auto":
            return np.exp(np.interp(lw, lf, np.log(self.values)))
        re = np.interp(lw, lf, self.values.real)
        im = np.interp(lw, lf, self.values.imag)
        return re + 1j * im

    def to_function(self, alpha=None, beta=None, name="tabulated") -> SpectralFunction:
        """Spectral function with power-law continuation beyond the grid.

        Exponents default to the log-log slope over the outermost decade.
        """
        if alpha is None or beta is None:
            from .estimation import fit_asymptotics

            fit = fit_asymptotics(self)
            alpha = fit.alpha if alpha is None else alpha
            beta = fit.beta if beta is None else beta
        f, v = self.frequencies, self.values
        return SpectralFunction(
            kind=self.kind,
            evaluator=self.interpolate,
            support=(float(f[0]), float(f[-1])),
            alpha=float(alpha),
            beta=float(beta),
            amp_inf=abs(v[-1]) * f[-1] ** alpha,
            amp_zero=abs(v[0]) * f[0] ** beta,
            name=name,
        )


def write_spectrum_csv(path, spec: TabulatedSpectrum) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if spec.kind == "cross":
            w.writerow(["omega_rad_s", "re", "im"])
            for f, v in zip(spec.frequencies, spec.values):
                w.writerow([repr(float(f)), repr(float(v.real)), repr(float(v.imag))])
        else:
            w.writerow(["omega_rad_s", "re"])
            for f, v in zip(spec.frequencies, spec.values):
                w.writerow([repr(float(f)), repr(float(v))])


def read_spectrum_csv(path) -> TabulatedSpectrum:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = [h.strip() for h in rows[0]]
    if header[:2] != ["omega_rad_s", "re"]:
        raise ValueError(f"{path}: expected header omega_rad_s,re[,im], got {header}")
    data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
    if len(header) >= 3 and header[2] == "im":
        return TabulatedSpectrum(data[:, 0], data[:, 1] + 1j * data[:, 2], "cross")
    return TabulatedSpectrum.floored(data[:, 0], data[:, 1])


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)  # (name, passed, detail)
    strengthened: bool = False

    def add(self, name, passed, detail=""):
        self.checks.append((name, bool(passed), detail))

    @property
    def ok(self) -> bool:
        return all(p for _, p, _ in self.checks)

    @property
    def failures(self) -> list:
        return [(n, d) for n, p, d in self.checks if not p]

    def summary(self) -> str:
        lines = [f"[{'ok' if p else 'FAIL'}] {n}: {d}" for n, p, d in self.checks]
        lines.append(f"strengthened conditions (smooth-data rates): {self.strengthened}")
        return "\n".join(lines)


def _probe_grid(support, n=4096):
    lo, hi = support
    lo = lo if lo > 0 else 1e-6
    hi = hi if math.isfinite(hi) else 1e6
    return np.geomspace(lo, hi, n)


def _positivity(S: SpectralFunction, n=4096) -> tuple[bool, str]:
    grid = _probe_grid(S.support, n)
    v = S(grid)
    if not np.all(np.isfinite(v)):
        return False, "non-finite values on support"
    if np.any(v <= 0):
        w = grid[np.argmin(v)]
        return False, f"non-positive value at w={w:.6g}"
    # refine local minima between grid points
    lv = np.log(grid)
    idx = np.flatnonzero((v[1:-1] <= v[:-2]) & (v[1:-1] <= v[2:])) + 1
    idx = idx[np.argsort(v[idx])[:50]]
    for i in idx:
        res = optimize.minimize_scalar(
            lambda s: float(S(math.exp(s))), bounds=(lv[i - 1], lv[i + 1]),
            method="bounded", options={"xatol": 1e-13},
        )
        neighbours = max(v[i - 1], v[i + 1])
        # the bounded search resolves x to ~sqrt(eps), so a quadratic zero
        # only reaches ~1e-10 of its neighbours
        if res.fun <= 1e-9 * neighbours:
            return False, f"spectrum vanishes near w={math.exp(res.x):.6g}"
    return True, f"min on support {v.min():.4g}"


def validate_data(S_xy: SpectralFunction, S_yy: SpectralFunction) -> ValidationReport:
    """Check the exponent and positivity conditions; never raises."""
    rep = ValidationReport()
    if S_yy.kind != "auto":
        rep.add("S_yy is an auto-spectrum", False, f"kind={S_yy.kind}")
        return rep
    asym = Asymptotics.from_pair(S_xy, S_yy)
    ainf = 2 * asym.alpha_x - asym.alpha_y
    bzero = 2 * asym.beta_x - asym.beta_y
    rep.add("2*alpha_x - alpha_y > 1", ainf > 1, f"2*{asym.alpha_x:g} - {asym.alpha_y:g} = {ainf:g}")
    rep.add("2*beta_x - beta_y < 1", bzero < 1, f"2*{asym.beta_x:g} - {asym.beta_y:g} = {bzero:g}")
    rep.add("A_y > 0", asym.A_y > 0, f"A_y={asym.A_y:g}")
    rep.add("B_y > 0", asym.B_y > 0, f"B_y={asym.B_y:g}")
    ok, detail = _positivity(S_yy)
    rep.add("S_yy > 0 on support", ok, detail)
    rep.strengthened = asym.strengthened
    return rep


# ---------------------------------------------------------------------------
# error spectrum and variance
# ---------------------------------------------------------------------------

def _h_values(h, omega):
    return np.asarray(h(omega) if callable(h) else np.broadcast_to(h, np.shape(omega)), dtype=complex)


def eval_error_spectrum(h, S_xx, S_xy, S_yy, omega):
    """``S_ee = S_xx + |h|^2 S_yy - 2 Re(conj(h) S_xy)`` at ``omega``."""
    syy = np.asarray(S_yy(omega), dtype=float)
    if np.any(syy <= 0):
        raise ValueError("S_yy must be strictly positive where the error spectrum is evaluated")
    hv = _h_values(h, omega)
    out = np.asarray(S_xx(omega), dtype=float) + np.abs(hv) ** 2 * syy - 2 * np.real(np.conj(hv) * S_xy(omega))
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class VarianceEstimate:
    value: float
    abserr: float
    divergent: bool = False

    def __float__(self):
        return self.value


def _tail_integral(S_edge, S_probe, w_edge, w_probe, upper: bool):
    """Integral of a two-point power law beyond ``w_edge``; ``(value, divergent)``."""
    if S_edge == 0.0:
        return 0.0, False
    if S_edge <= 0 or S_probe <= 0:
        # sign change or cancellation right at the edge: fall back to local slope 0
        p = 0.0
    else:
        p = -math.log(S_probe / S_edge) / math.log(w_probe / w_edge)
    if upper:
        if p <= 1:
            return math.inf, True
        return S_edge * w_edge / (p - 1), False
    if p >= 1:
        return math.inf, True
    return S_edge * w_edge / (1 - p), False


def integrate_error_variance(h, S_xx, S_xy, S_yy, band=None, points=(), epsrel=1e-11):
    """``V = integral S_ee dw / 2pi`` over the whole line.

    Adaptive quadrature (in log-frequency) covers the band; the two tails are
    power laws matched to the error spectrum at the band edges and integrated
    in closed form.
    """
    if band is None:
        lo = max(S.support[0] for S in (S_xx, S_xy, S_yy))
        hi = min(S.support[1] for S in (S_xx, S_xy, S_yy))
        band = (lo if lo > 0 else 1e-8, hi if math.isfinite(hi) else 1e8)
    lo, hi = band

    def two_sided(w):
        w = np.asarray(w, dtype=float)
        return eval_error_spectrum(h, S_xx, S_xy, S_yy, w) + eval_error_spectrum(h, S_xx, S_xy, S_yy, -w)

    def integrand(s):
        w = math.exp(s)
        return float(two_sided(np.array([w]))[0]) * w

    slo, shi = math.log(lo), math.log(hi)
    brk = [math.log(p) for p in points if lo < p < hi]
    decades = np.arange(math.ceil(slo / math.log(10)), math.floor(shi / math.log(10)) + 1) * math.log(10)
    edges = sorted(set([slo, shi, *brk, *[d for d in decades if slo < d < shi]]))
    total, err = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(integrand, a, b, limit=400, epsabs=0.0, epsrel=epsrel)
        total += val
        err += e
    up, div_up = _tail_integral(*two_sided(np.array([hi, 2 * hi])), hi, 2 * hi, upper=True)
    down, div_dn = _tail_integral(*two_sided(np.array([lo, lo / 2])), lo, lo / 2, upper=False)
    total = (total + up + down) / (2 * math.pi)
    return VarianceEstimate(total, err / (2 * math.pi), div_up or div_dn)
