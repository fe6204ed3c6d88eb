"""Self-check suites run by ``sfwiener verify``.

Each suite compares the design pipeline with an independent reference
(analytic quadrature, closed-form factorisation, dense eigensolve or the
lattice Wiener-Hopf solution) and returns a :class:`SuiteResult`.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from . import basis, oracle
from .basis import BasisConfig
from .filter_design import DesignOptions, design
from .precondition import ScalingFunction, choose_exponents, transform
from .spectral_model import SCALE_FREE_SUPPORT, Asymptotics, make_scale_free_example, make_rational_benchmark
from .toeplitz import ToeplitzSystem, condition_report, solve, spectrum_bounds_check

__all__ = ["SuiteResult", "SUITES", "run_suites"]

# scale parameters that resolve each benchmark with ~100 modes
SCALE_FREE_OMEGA_0 = 5.0
RATIONAL_OMEGA_0 = 10.0


@dataclass
class SuiteResult:
    name: str
    passed: bool
    metric: float
    tol: float
    detail: str = ""
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def _scale_free_problem(omega_0=SCALE_FREE_OMEGA_0):
    S_xx, _, S_yy, S_xy = make_scale_free_example()
    a, b = choose_exponents(Asymptotics.from_pair(S_xy, S_yy))
    return S_xx, S_xy, S_yy, transform(S_xy, S_yy, ScalingFunction(a, b, omega_0))


def _rational_problem(omega_0=RATIONAL_OMEGA_0):
    S_xx, _, S_yy, S_xy = make_rational_benchmark()
    return S_xx, S_xy, S_yy, transform(S_xy, S_yy, ScalingFunction(0.0, 0.0, omega_0))


def orthonormality(n: int = 64, tol: float = 1e-10) -> SuiteResult:
    worst = 0.0
    for w0 in (1.0, SCALE_FREE_OMEGA_0):
        G = basis.gram_matrix(n + 1, w0, 1024)
        worst = max(worst, float(np.max(np.abs(G - np.eye(n + 1)))))
    return SuiteResult("orthonormality", worst < tol, worst, tol, f"max |<phi_j,phi_k> - delta_jk|, j,k <= {n}")


def hilbert(tol: float = 1e-3) -> SuiteResult:
    """``H phi_k = -i sgn(k) phi_k`` (``sgn(0) = 1``) on the inner part of a lattice."""
    w = np.arange(-4000.0, 4000.0 + 0.01, 0.02)
    inner = np.abs(w) <= 10.0
    worst = 0.0
    for k in (0, 1, -1, -2):
        p = basis.eval_phi(k, w)
        target = -1j * (1 if k >= 0 else -1) * p
        err = np.max(np.abs(basis.discrete_hilbert(p) - target)[inner]) / np.max(np.abs(p))
        worst = max(worst, float(err))
    return SuiteResult("hilbert", worst < tol, worst, tol, "relative max error for k in {0, 1, -1, -2}, |w| <= 10")


def toeplitz_bounds(n: int = 256, margin: float = 1e-8) -> SuiteResult:
    _, _, _, tp = _scale_free_problem()
    t, _ = basis.toeplitz_coeffs(tp.S_yy_prime, BasisConfig(SCALE_FREE_OMEGA_0, n, 1 << 16))
    sysm = ToeplitzSystem(t, np.ones(n))
    chk = spectrum_bounds_check(sysm, tp.bounds, tol=margin)
    try:
        solve(sysm, "cholesky")
        chol = True
    except ArithmeticError:
        chol = False
    excess = max(tp.bounds[0] - chk.eig_min, chk.eig_max - tp.bounds[1], 0.0)
    return SuiteResult(
        "toeplitz-bounds", chk.ok and chol, excess, margin,
        f"eig in [{chk.eig_min:.6g}, {chk.eig_max:.6g}], bounds [{tp.bounds[0]:.6g}, {tp.bounds[1]:.6g}], cholesky={'ok' if chol else 'failed'}",
    )


def condition_sandwich(ns=(16, 64, 256)) -> SuiteResult:
    bad, details = 0, []
    for label, (_, _, _, tp), w0 in (("scale-free", _scale_free_problem(), SCALE_FREE_OMEGA_0), ("rational", _rational_problem(), RATIONAL_OMEGA_0)):
        t, _ = basis.toeplitz_coeffs(tp.S_yy_prime, BasisConfig(w0, max(ns), 1 << 16))
        for n in ns:
            rep = condition_report(ToeplitzSystem(t[:n], np.ones(n)), tp.bounds)
            ok = rep.kappa_lower <= rep.kappa_measured <= rep.kappa_upper
            bad += not ok
            details.append(f"{label} n={n}: {rep.kappa_lower:.4g} <= {rep.kappa_measured:.4g} <= {rep.kappa_upper:.4g}")
    return SuiteResult("condition-sandwich", bad == 0, float(bad), 0.0, "; ".join(details))


def rational_benchmark(n: int = 100, tol: float = 1e-3) -> SuiteResult:
    _, _, S_yy, S_xy = make_rational_benchmark()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        flt = design(S_xy, S_yy, DesignOptions(n_modes=n, omega_0=RATIONAL_OMEGA_0, diagnostics=False))
    w = np.linspace(-200.0, 200.0, 40001)
    ref = oracle.rational_wiener(w)
    err = float(np.linalg.norm(flt.response(w) - ref) / np.linalg.norm(ref))
    return SuiteResult("rational-benchmark", err < tol, err, tol, f"relative L2 error on [-200, 200] rad/s, n = {n}")


def convergence(n: int = 256) -> SuiteResult:
    details, ok = [], True
    for label, (S_xx, S_xy, S_yy, _), w0 in (
        ("scale-free", _scale_free_problem(), SCALE_FREE_OMEGA_0),
        ("rational", _rational_problem(), RATIONAL_OMEGA_0),
    ):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            flt = design(S_xy, S_yy, DesignOptions(n_modes=n, omega_0=w0), S_xx=S_xx)
        d = flt.diagnostics
        deltas = np.array(d.dyadic_deltas)[np.array(d.ns) <= 128]
        dec = bool(np.all(np.diff(deltas) < 0))
        v = np.array(d.monotone_Veps)
        mono = bool(np.all(np.diff(v) <= 1e-9 * max(1.0, abs(v[0]))))
        ok &= dec and mono
        details.append(f"{label}: deltas decreasing={dec}, V_eps nonincreasing={mono}")
    return SuiteResult("convergence", ok, float(not ok), 0.0, "; ".join(details))


def lattice(n: int = 256, tol: float = 1e-2) -> SuiteResult:
    S_xx, S_xy, S_yy, tp = _scale_free_problem()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        flt = design(S_xy, S_yy, DesignOptions(n_modes=n, omega_0=SCALE_FREE_OMEGA_0, diagnostics=False))
    wm, wM = SCALE_FREE_SUPPORT
    w = np.linspace(wm, wM, 8001)
    ref = oracle.extrapolated_lattice_response(S_xy, S_yy, tp.scaling, 2.0, math.pi / (4 * wM), w)
    err = float(np.linalg.norm(flt.response(w) - ref) / np.linalg.norm(ref))
    return SuiteResult("lattice", err < tol, err, tol, "relative L2 difference vs lattice Wiener-Hopf over the trusted band")


SUITES = {
    "orthonormality": orthonormality,
    "hilbert": hilbert,
    "toeplitz-bounds": toeplitz_bounds,
    "condition-sandwich": condition_sandwich,
    "rational-benchmark": rational_benchmark,
    "convergence": convergence,
    "lattice": lattice,
}


def run_suites(names) -> list[SuiteResult]:
    out = []
    for name in names:
        t0 = time.perf_counter()
        try:
            res = SUITES[name]()
        except Exception as exc:  # a crash is a failure, not an abort
            res = SuiteResult(name, False, math.nan, math.nan, f"{type(exc).__name__}: {exc}")
        res.seconds = time.perf_counter() - t0
        out.append(res)
    return out
