"""Data reduction: echo visibility, dephasing rates, EIT fits and power laws."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import least_squares

from .errors import DegenerateFit, FitFailure, InfiniteDephasing, InvalidArgument
from .lindblad import ScanAxis, Spectrum, ThreeLevelParams, _lineshape, steady_im_rho_ge
from .manybody import EchoCurve

__all__ = [
    "DEFAULT_WINDOW",
    "VisibilityResult",
    "DephasingSource",
    "DephasingPoint",
    "PowerLawFit",
    "EitFitResult",
    "fit_visibility",
    "dephasing_rate",
    "dephasing_point",
    "coherence_from_absorption",
    "fit_eit_spectrum",
    "eit_fit_curve",
    "fit_power_law",
]

# Fraction of [0, tau], centred on tau/2, used for the parabolic fit of the
# echo minimum. 1.0 fits the whole window.
DEFAULT_WINDOW = 0.3

_FIT_TOL = 1e-10
_FIT_MAX_NFEV = 500


@dataclass
class VisibilityResult:
    visibility: float
    coefficients: tuple[float, float, float]
    residual_rms: float
    n_r_zero: float
    n_r_half: float
    raw_visibility: float
    clamped: bool = False
    n_r_zero_source: str = "sample"
    window: float = DEFAULT_WINDOW

    def to_dict(self) -> dict:
        return asdict(self)


def fit_visibility(curve: EchoCurve, window: float = DEFAULT_WINDOW) -> VisibilityResult:
    """Echo visibility ``(N(0) - N(tau/2)) / (N(0) + N(tau/2))``.

    ``N(tau/2)`` comes from a least-squares parabola ``a tau_p^2 + b tau_p + c``
    fitted to the points within ``window * tau / 2`` of the echo centre (at
    least the three nearest points). ``N(0)`` is the sampled value at
    ``tau_p = 0``; if the curve has no such sample, a parabola fitted to the
    whole curve is evaluated at 0 instead. The visibility is clamped to
    ``[0, 1]``, with ``clamped`` set when that happened.
    """
    x, y, tau = curve.tau_p, curve.n_r, curve.tau
    if len(np.unique(x)) < 3:
        raise InvalidArgument("visibility fit needs at least 3 distinct tau_p points")
    if not 0 < window <= 1:
        raise InvalidArgument(f"window must lie in (0, 1], got {window!r}")
    centre = 0.5 * tau
    dist = np.abs(x - centre)
    sel = dist <= window * centre * (1 + 1e-12)
    if sel.sum() < 3:
        sel = np.zeros(len(x), dtype=bool)
        sel[np.argsort(dist, kind="stable")[:3]] = True
    coeffs = np.polyfit(x[sel], y[sel], 2)
    resid = y[sel] - np.polyval(coeffs, x[sel])
    n_half = float(np.polyval(coeffs, centre))

    if abs(x[0]) <= 1e-12 * tau:
        n_zero, source = float(y[0]), "sample"
    else:
        n_zero, source = float(np.polyval(np.polyfit(x, y, 2), 0.0)), "extrapolated"

    denom = n_zero + n_half
    if denom <= 0:
        raise DegenerateFit("N_R(0) + N_R(tau/2) is not positive")
    raw = (n_zero - n_half) / denom
    vis = min(max(raw, 0.0), 1.0)
    return VisibilityResult(
        visibility=vis,
        coefficients=tuple(float(c) for c in coeffs),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        n_r_zero=n_zero,
        n_r_half=n_half,
        raw_visibility=float(raw),
        clamped=vis != raw,
        n_r_zero_source=source,
        window=window,
    )


def dephasing_rate(v: float, tau: float) -> float:
    """Rate ``-ln(V) / tau`` assuming exponential loss of visibility."""
    if not tau > 0:
        raise InvalidArgument(f"tau must be > 0, got {tau!r}")
    if v > 1:
        raise InvalidArgument(f"visibility must be <= 1, got {v!r}")
    if not v > 0:
        raise InfiniteDephasing(f"visibility {v!r} implies infinite dephasing")
    return -math.log(v) / tau


class DephasingSource(str, Enum):
    echo_experimental = "echo_experimental"
    echo_simulated = "echo_simulated"
    eit = "eit"


@dataclass
class DephasingPoint:
    max_nr: float
    gamma_d: float
    source: DephasingSource = DephasingSource.echo_simulated
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.source = DephasingSource(self.source)
        if not self.max_nr > 0:
            raise InvalidArgument(f"max_nr must be > 0, got {self.max_nr!r}")
        if not self.gamma_d >= 0:
            raise InvalidArgument(f"gamma_d must be >= 0, got {self.gamma_d!r}")

    def row(self) -> dict:
        return {"max_nr": self.max_nr, "gamma_d": self.gamma_d, "source": self.source.value}


def dephasing_point(curve: EchoCurve, window: float = DEFAULT_WINDOW) -> tuple[DephasingPoint, VisibilityResult]:
    """Reduce one echo curve to ``(max N_R, gamma_d)`` with ``max N_R = N_R(tau_p=0)``."""
    vis = fit_visibility(curve, window)
    gamma = dephasing_rate(vis.visibility, curve.tau)
    meta = {"tau": curve.tau, "visibility": vis.visibility, "n_atoms": curve.n_atoms}
    return DephasingPoint(vis.n_r_zero, gamma, DephasingSource.echo_simulated, meta), vis


def coherence_from_absorption(n_detuned, n_total, max_nr, omega_p, gamma_eg) -> float:
    """Im(rho_ge) from absorption-image atom numbers.

    ``(omega_p / gamma_eg) * n_detuned / (n_total - max_nr)``; atoms transferred
    to the Rydberg state (``max_nr``) are removed from the reference number.
    """
    if not n_total > max_nr:
        raise InvalidArgument("n_total must exceed max_nr")
    if max_nr < 0 or n_detuned < 0:
        raise InvalidArgument("atom numbers must be nonnegative")
    if not gamma_eg > 0:
        raise InvalidArgument("gamma_eg must be > 0")
    return (omega_p / gamma_eg) * n_detuned / (n_total - max_nr)


@dataclass
class PowerLawFit:
    """``gamma_d = prefactor * max_nr ** exponent``."""

    prefactor: float
    exponent: float
    prefactor_stderr: float
    exponent_stderr: float
    fixed_exponent: bool
    n_points: int
    log_residual_rms: float

    def __call__(self, max_nr):
        return self.prefactor * np.asarray(max_nr, dtype=float) ** self.exponent

    def to_dict(self) -> dict:
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, float) and not math.isfinite(v):
                out[k] = None
        return out


def fit_power_law(points, fixed_exponent: float | None = None) -> PowerLawFit:
    """Least squares on ``(ln max_nr, ln gamma_d)``.

    With ``fixed_exponent`` only the prefactor is fitted. Standard errors come
    from the residual variance; they are ``nan`` when there are no degrees of
    freedom left.
    """
    pts = list(points)
    x = np.array([p.max_nr for p in pts], dtype=float)
    y = np.array([p.gamma_d for p in pts], dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise InvalidArgument("power-law fit needs positive max_nr and gamma_d")
    lx, ly = np.log(x), np.log(y)
    n = len(pts)

    if fixed_exponent is not None:
        if n < 1:
            raise InvalidArgument("need at least one point")
        b = float(fixed_exponent)
        r = ly - b * lx
        ln_a = float(np.mean(r))
        resid = r - ln_a
        dof = n - 1
        s2 = float(resid @ resid) / dof if dof > 0 else math.nan
        se_ln_a = math.sqrt(s2 / n) if dof > 0 else math.nan
        se_b = 0.0
    else:
        if n < 2 or len(np.unique(x)) < 2:
            raise InvalidArgument("need at least two points with distinct max_nr")
        design = np.column_stack([np.ones(n), lx])
        coef, *_ = np.linalg.lstsq(design, ly, rcond=None)
        ln_a, b = float(coef[0]), float(coef[1])
        resid = ly - design @ coef
        dof = n - 2
        if dof > 0:
            s2 = float(resid @ resid) / dof
            cov = s2 * np.linalg.inv(design.T @ design)
            se_ln_a, se_b = math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1])
        else:
            se_ln_a = se_b = math.nan
    a = math.exp(ln_a)
    return PowerLawFit(
        prefactor=a,
        exponent=b,
        prefactor_stderr=a * se_ln_a,
        exponent_stderr=se_b,
        fixed_exponent=fixed_exponent is not None,
        n_points=n,
        log_residual_rms=float(np.sqrt(np.mean(resid**2))),
    )


@dataclass
class EitFitResult:
    gamma_r: float
    delta_offset: float
    amplitude: float
    residual_rms: float
    stage1: dict = field(default_factory=dict)
    at_bounds: list = field(default_factory=list)
    nfev: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _detunings(spec: Spectrum, fixed: ThreeLevelParams, offset):
    """Single-photon probe detuning and two-photon detuning at each grid point."""
    x = spec.detuning
    if spec.scan_axis is ScanAxis.probe_detuning:
        dp = x
        dc = fixed.delta_c + offset
    else:
        dp = np.full_like(x, fixed.delta_p)
        dc = x + offset
    return dp, dc


def _flag_bounds(res, lower, upper, names):
    hit = []
    for name, v, lo, hi in zip(names, res.x, lower, upper):
        span = hi - lo if np.isfinite(hi - lo) else max(1.0, abs(v))
        if abs(v - lo) <= 1e-8 * span or abs(hi - v) <= 1e-8 * span:
            hit.append(name)
    return hit


def fit_eit_spectrum(spec: Spectrum, fixed: ThreeLevelParams, gamma_r_guesses=None) -> EitFitResult:
    """Fit Gamma_r and a two-photon detuning offset to an EIT spectrum.

    Stage 1 fits ``amplitude * lineshape`` (weak-probe formula) with free
    amplitude, ``Gamma_r`` and offset; stage 2 refines the same three
    parameters against the full steady-state solution at ``fixed.omega_p``.

    ``fixed`` supplies ``omega_p``, ``omega_c``, ``gamma_eg``, ``gamma_re``,
    ``gamma_ed`` and the detuning that is not scanned (``delta_c`` for probe
    scans, ``delta_p`` for coupling scans); its ``gamma_rd`` is ignored.
    """
    if len(spec) < 5:
        raise InvalidArgument("EIT fit needs at least 5 spectrum points")
    y = spec.im_rho_ge
    scale = float(np.max(np.abs(y)))
    if scale == 0:
        raise DegenerateFit("spectrum is identically zero")
    unit = fixed.gamma_eg
    yn = y / scale
    span = (spec.detuning[-1] - spec.detuning[0]) / unit

    # stage 1 parameters: (amplitude, gamma_r, offset), detunings in units of gamma_eg
    def model1(theta):
        amp, gr, off = theta
        dp, dc = _detunings(spec, fixed, off * unit)
        num, den = _lineshape(fixed.gamma_e / unit, gr, fixed.omega_c / unit, dp / unit, (dp + dc) / unit)
        return amp * num / den

    x_min = spec.detuning[int(np.argmin(yn))]
    if spec.scan_axis is ScanAxis.probe_detuning:
        off0 = -(x_min + fixed.delta_c) / unit
    else:
        off0 = -(fixed.delta_p + x_min) / unit
    off0 = float(np.clip(off0, -span, span))

    lower1 = [0.0, 0.0, -span]
    upper1 = [np.inf, 20.0, span]
    best = None
    for g0 in gamma_r_guesses or (0.02, 0.1, 0.3, 0.6, 1.0):
        shape0 = model1((1.0, g0, off0))
        amp0 = float(np.max(yn) / max(np.max(shape0), 1e-300))
        res = least_squares(
            lambda th: model1(th) - yn,
            x0=[amp0, g0, off0],
            bounds=(lower1, upper1),
            method="trf",
            xtol=_FIT_TOL,
            ftol=_FIT_TOL,
            max_nfev=_FIT_MAX_NFEV,
        )
        if best is None or res.cost < best.cost:
            best = res
    stage1 = {
        "amplitude": float(best.x[0] * scale),
        "gamma_r": float(best.x[1] * unit),
        "delta_offset": float(best.x[2] * unit),
        "residual_rms": float(np.sqrt(2 * best.cost / len(yn)) * scale),
        "converged": bool(best.status > 0),
        "at_bounds": _flag_bounds(best, lower1, upper1, ["amplitude", "gamma_r", "delta_offset"]),
    }
    if best.status <= 0:
        raise FitFailure("stage-1 line-shape fit did not converge", partial=stage1)

    # stage 2: full steady state at the actual probe Rabi frequency; the
    # amplitude is relative to absolute Im(rho_ge)
    gre = fixed.gamma_re / unit

    def model2(theta):
        amp, gr, off = theta
        dp, dc = _detunings(spec, fixed, off * unit)
        im = steady_im_rho_ge(
            fixed.omega_p / unit, fixed.omega_c / unit, dp / unit, dc / unit,
            1.0 + 0.0 * dp, gre, fixed.gamma_ed / unit, max(gr - gre, 0.0),
        )
        return amp * im / scale

    pert_amp = best.x[0] * scale * unit / fixed.omega_p
    lower2 = [0.0, gre, -span]
    upper2 = [np.inf, 20.0, span]
    x0 = [pert_amp, float(np.clip(best.x[1], gre, 20.0)), best.x[2]]
    res2 = least_squares(
        lambda th: model2(th) - yn,
        x0=x0,
        bounds=(lower2, upper2),
        method="trf",
        xtol=_FIT_TOL,
        ftol=_FIT_TOL,
        max_nfev=_FIT_MAX_NFEV,
    )
    if res2.status <= 0:
        raise FitFailure("stage-2 full-model refinement did not converge", partial=stage1)
    return EitFitResult(
        gamma_r=float(res2.x[1] * unit),
        delta_offset=float(res2.x[2] * unit),
        amplitude=float(res2.x[0]),
        residual_rms=float(np.sqrt(2 * res2.cost / len(yn)) * scale),
        stage1=stage1,
        at_bounds=_flag_bounds(res2, lower2, upper2, ["amplitude", "gamma_r", "delta_offset"]),
        nfev=int(res2.nfev),
    )


def eit_fit_curve(spec: Spectrum, fixed: ThreeLevelParams, result: EitFitResult) -> np.ndarray:
    """Fitted full-model Im(rho_ge) on the grid of ``spec``."""
    dp, dc = _detunings(spec, fixed, result.delta_offset)
    im = steady_im_rho_ge(
        fixed.omega_p, fixed.omega_c, dp, dc, fixed.gamma_eg,
        fixed.gamma_re, fixed.gamma_ed, max(result.gamma_r - fixed.gamma_re, 0.0),
    )
    return result.amplitude * im
