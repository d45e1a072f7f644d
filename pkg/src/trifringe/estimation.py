"""Parameter recovery from interference-fringe data.

The central-peak fringe is fit with the five-parameter model

    counts(s) = A/3 * [3 + 2*lam*(cos(r*(s+p0)) + cos(s+p0)
                                  + cos((1+r)*(s+p0)))] + B

(amplitude scale A, noise mixing lam, phase ratio r, phase offset p0,
flat background B) by damped Gauss-Newton iteration with analytic
Jacobians and a multi-start grid over the phase offset.  Lateral-peak
fringes are fit with a single cosine a + b*cos(w*s + c); the ratio of the
two lateral frequencies gives an independent estimate of r.

Visibility, fidelity and the ceiling visibility are tied to the fitted
mixing weight by the exact identities F = (1 + 8*lam)/9 and
V* = 3*lam/(2 + lam); note V* is not lam itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateScan, EmptySeries, NoConvergence
from .interference import FringeSeries, eq_rate

MAX_ITERATIONS = 500
COST_RTOL = 1e-10
STEP_TOL = 1e-12
N_PHASE_STARTS = 12

CENTRAL_PARAMS = ("lambda", "ratio", "phase_offset", "amplitude", "background")
COSINE_PARAMS = ("offset", "amplitude", "omega", "phase")


@dataclass(frozen=True)
class FitResult:
    """Recovered central-fringe parameters with one-sigma uncertainties."""

    lambda_hat: float
    r_hat: float
    phase_offset: float
    amplitude_scale: float
    background: float
    uncertainties: dict
    residual_rms: float
    converged: bool
    iterations: int
    lambda_clamped: bool = False
    cost: float = 0.0

    def model_values(self, s) -> np.ndarray:
        return central_model(
            np.asarray(s, dtype=float),
            self.lambda_hat,
            self.r_hat,
            self.phase_offset,
            self.amplitude_scale,
            self.background,
        )


@dataclass(frozen=True)
class CosineFit:
    """Single-cosine fit a + b*cos(w*s + c) for a lateral fringe."""

    offset: float
    amplitude: float
    omega: float
    phase: float
    uncertainties: dict
    residual_rms: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class RatioEstimate:
    """Frequency ratio of the right and left lateral fringes."""

    r_hat: float
    sigma: float
    fit_right: CosineFit
    fit_left: CosineFit


@dataclass(frozen=True)
class AnalysisResult:
    """Figures of merit extracted from one fringe scan."""

    v_raw: float
    v_net: float
    f_raw: float
    f_net: float
    v_star: float
    r_hat: float
    lambda_raw: float = float("nan")
    lambda_net: float = float("nan")
    uncertainties: dict = field(default_factory=dict)
    warnings: tuple = ()
    fit_raw: FitResult | None = None
    fit_net: FitResult | None = None
    ratio: RatioEstimate | None = None


def central_model(s, lam, ratio, phase_offset, amplitude, background):
    sp = s + phase_offset
    return amplitude * eq_rate(ratio * sp, sp, lam) + background


def central_jacobian(s, lam, ratio, phase_offset, amplitude, background):
    """Analytic Jacobian, columns ordered as CENTRAL_PARAMS."""
    sp = s + phase_offset
    c1, c2, c3 = np.cos(ratio * sp), np.cos(sp), np.cos((1 + ratio) * sp)
    s1, s2, s3 = np.sin(ratio * sp), np.sin(sp), np.sin((1 + ratio) * sp)
    csum = c1 + c2 + c3
    jac = np.empty((s.size, 5))
    jac[:, 0] = amplitude * (2.0 / 3.0) * csum
    jac[:, 1] = -amplitude * (2.0 * lam / 3.0) * sp * (s1 + s3)
    jac[:, 2] = -amplitude * (2.0 * lam / 3.0) * (ratio * s1 + s2 + (1 + ratio) * s3)
    jac[:, 3] = 1.0 + (2.0 * lam / 3.0) * csum
    jac[:, 4] = np.ones_like(s)
    return jac


def cosine_model(s, offset, amplitude, omega, phase):
    return offset + amplitude * np.cos(omega * s + phase)


def cosine_jacobian(s, offset, amplitude, omega, phase):
    arg = omega * s + phase
    jac = np.empty((s.size, 4))
    jac[:, 0] = 1.0
    jac[:, 1] = np.cos(arg)
    jac[:, 2] = -amplitude * s * np.sin(arg)
    jac[:, 3] = -amplitude * np.sin(arg)
    return jac


def _damped_gauss_newton(residual, jacobian, p0, max_iter=MAX_ITERATIONS):
    """Gauss-Newton with Levenberg-style adaptive damping.

    Returns (params, JtJ at the solution, cost, iterations, converged).
    Convergence: relative cost change below COST_RTOL or step norm below
    STEP_TOL; damping saturating without any acceptable step counts as a
    stationary point.
    """
    p = np.asarray(p0, dtype=float).copy()
    r = residual(p)
    cost = float(r @ r)
    mu = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        jac = jacobian(p)
        grad = jac.T @ r
        hess = jac.T @ jac
        damp = np.diag(hess).copy()
        damp[damp <= 0] = 1.0
        stepped = False
        for _ in range(50):
            try:
                step = np.linalg.solve(hess + mu * np.diag(damp), -grad)
            except np.linalg.LinAlgError:
                step = -np.linalg.pinv(hess + mu * np.diag(damp)) @ grad
            p_new = p + step
            r_new = residual(p_new)
            cost_new = float(r_new @ r_new)
            if cost_new <= cost:
                stepped = True
                break
            mu *= 4.0
            if mu > 1e12:
                break
        if not stepped:
            converged = True
            break
        step_norm = float(np.linalg.norm(step))
        rel_drop = (cost - cost_new) / max(cost, 1e-300)
        p, r, cost = p_new, r_new, cost_new
        mu = max(mu / 8.0, 1e-12)
        if rel_drop < COST_RTOL or step_norm < STEP_TOL * (np.linalg.norm(p) + STEP_TOL):
            converged = True
            break
    jac = jacobian(p)
    return p, jac.T @ jac, cost, it, converged


def _sigmas(hess, cost, n_points, n_params):
    """One-sigma parameter errors from the Gauss-Newton covariance,
    scaled by the residual variance.  Directions the data do not constrain
    (rank-deficient JtJ) get infinite sigma rather than a spurious zero."""
    dof = max(n_points - n_params, 1)
    sigma2 = cost / dof
    eigval, eigvec = np.linalg.eigh(hess)
    tol = max(hess.shape[0] * np.finfo(float).eps * eigval.max(), 1e-300)
    out = np.empty(hess.shape[0])
    for j in range(hess.shape[0]):
        if np.any((eigval < tol) & (np.abs(eigvec[j]) > 1e-12)):
            out[j] = np.inf
        else:
            good = eigval >= tol
            out[j] = np.sqrt(sigma2 * np.sum(eigvec[j, good] ** 2 / eigval[good]))
    return out


def _initial_guesses(series: FringeSeries, init: dict | None):
    vals = series.values
    init = dict(init or {})
    lo, hi = float(vals.min()), float(vals.max())
    v_emp = (hi - lo) / (hi + lo) if hi + lo > 0 else 0.0
    lam0 = init.get("lambda", float(np.clip(2.0 * v_emp / max(3.0 - v_emp, 1e-9), 0.05, 1.0)))
    background0 = init.get("background", 0.0)
    amp0 = init.get("amplitude", max(float(vals.mean()) - background0, 1e-9))
    ratio0 = init.get("ratio", 1.0)
    offsets = (
        [float(init["phase_offset"])]
        if "phase_offset" in init
        else list(np.linspace(0.0, 2.0 * np.pi, N_PHASE_STARTS, endpoint=False))
    )
    return lam0, ratio0, offsets, amp0, background0


def fit_fringe(
    series: FringeSeries,
    init: dict | None = None,
    *,
    fit_background: bool = False,
) -> FitResult:
    """Least-squares fit of the central-peak fringe model.

    ``init`` may pin starting values for any of "lambda", "ratio",
    "phase_offset", "amplitude", "background"; without a phase-offset hint
    a 12-point grid of starts covers the multi-modal landscape and the
    lowest-cost start wins (earliest start on ties).

    The background is frozen at its initial value (default 0) unless
    ``fit_background=True``: the model depends on the amplitude, mixing
    weight and background only through A + B and A * lam, so floating all
    three leaves the mixing weight unidentifiable.  With the background
    frozen, a flat floor in the data folds into a smaller fitted mixing
    weight -- the "raw" reading of uncorrected counts; subtract the floor
    first (:func:`net_series`) for the net reading.
    """
    if len(series) == 0:
        raise EmptySeries("cannot fit an empty series")
    if len(series) < 8:
        raise DegenerateScan("need at least 8 scan points")
    if series.span() < 2.0 * np.pi * (1.0 - 1e-9):
        raise DegenerateScan("scan must span at least one fringe period")

    s = series.phases
    y = series.values
    lam0, ratio0, offsets, amp0, background0 = _initial_guesses(series, init)

    active = np.array([True, True, True, True, bool(fit_background)])
    frozen = np.array([lam0, ratio0, 0.0, amp0, background0])

    def expand(p_active):
        p = frozen.copy()
        p[active] = p_active
        return p

    def residual(p_active):
        return central_model(s, *expand(p_active)) - y

    def jacobian(p_active):
        return central_jacobian(s, *expand(p_active))[:, active]

    best = None
    for p0_start in offsets:
        start = np.array([lam0, ratio0, p0_start, amp0, background0])[active]
        result = _damped_gauss_newton(residual, jacobian, start)
        if best is None or result[2] < best[2] - 1e-30:
            best = result
    p_act, hess, cost, iters, conv = best

    lam_hat, ratio_hat, p0_hat, amp_hat, bg_hat = expand(p_act)
    clamped = not 0.0 <= lam_hat <= 1.0
    lam_hat = float(np.clip(lam_hat, 0.0, 1.0))

    sig_act = _sigmas(hess, cost, len(series), int(active.sum()))
    sigmas = np.zeros(5)
    sigmas[active] = sig_act
    uncertainties = dict(zip(CENTRAL_PARAMS, sigmas))

    return FitResult(
        lambda_hat=lam_hat,
        r_hat=float(ratio_hat),
        phase_offset=float(p0_hat),
        amplitude_scale=float(amp_hat),
        background=float(bg_hat),
        uncertainties=uncertainties,
        residual_rms=float(np.sqrt(cost / len(series))),
        converged=bool(conv),
        iterations=int(iters),
        lambda_clamped=clamped,
        cost=float(cost),
    )


def fit_cosine(series: FringeSeries, init: dict | None = None) -> CosineFit:
    """Fit a + b*cos(w*s + c) to a lateral fringe.

    The frequency start comes from a coarse periodogram unless pinned via
    ``init["omega"]``; phase starts run over a 12-point grid.
    """
    if len(series) == 0:
        raise EmptySeries("cannot fit an empty series")
    if len(series) < 8:
        raise DegenerateScan("need at least 8 scan points")
    s = series.phases
    y = series.values
    init = dict(init or {})

    offset0 = init.get("offset", float(y.mean()))
    amp0 = init.get("amplitude", max((y.max() - y.min()) / 2.0, 1e-9))
    omega0 = init.get("omega", _dominant_frequency(s, y))

    def residual(p):
        return cosine_model(s, *p) - y

    def jacobian(p):
        return cosine_jacobian(s, *p)

    best = None
    for c0 in np.linspace(0.0, 2.0 * np.pi, N_PHASE_STARTS, endpoint=False):
        result = _damped_gauss_newton(residual, jacobian, np.array([offset0, amp0, omega0, c0]))
        if best is None or result[2] < best[2] - 1e-30:
            best = result
    p, hess, cost, iters, conv = best

    # Gauge fixing: amplitude >= 0 and omega >= 0 (signs fold into the phase).
    offset, amp, omega, phase = p
    if amp < 0:
        amp, phase = -amp, phase + np.pi
    if omega < 0:
        omega, phase = -omega, -phase
    sig = _sigmas(hess, cost, len(series), 4)
    return CosineFit(
        offset=float(offset),
        amplitude=float(amp),
        omega=float(omega),
        phase=float(phase % (2.0 * np.pi)),
        uncertainties=dict(zip(COSINE_PARAMS, sig)),
        residual_rms=float(np.sqrt(cost / len(series))),
        converged=bool(conv),
        iterations=int(iters),
    )


def _dominant_frequency(s, y) -> float:
    """Coarse frequency estimate: largest projection amplitude over a
    dense grid of trial frequencies."""
    span = s[-1] - s[0]
    omegas = np.linspace(0.5 * 2.0 * np.pi / span, 3.0, 600)
    yc = y - y.mean()
    power = np.abs(np.exp(-1j * np.outer(omegas, s)) @ yc)
    return float(omegas[int(np.argmax(power))])


def visibility(series: FringeSeries, method: str = "empirical", fit: FitResult | None = None) -> float:
    """Fringe visibility (max - min) / (max + min).

    ``empirical`` uses the extreme sampled values; ``from_fit`` evaluates
    a converged fit's model on a dense grid over the scanned window, which
    is what the reported figures of merit use.
    """
    if len(series) == 0:
        raise EmptySeries("visibility of an empty series")
    if method == "empirical":
        hi, lo = float(series.values.max()), float(series.values.min())
    elif method == "from_fit":
        if fit is None or not fit.converged:
            raise NoConvergence("from_fit visibility needs a converged fit")
        dense = np.linspace(series.phases[0], series.phases[-1], 4001)
        model = fit.model_values(dense)
        hi, lo = float(model.max()), float(model.min())
    else:
        raise ValueError(f"unknown visibility method {method!r}")
    if hi + lo <= 0:
        return 0.0
    return (hi - lo) / (hi + lo)


def fidelity_from_lambda(lam: float) -> float:
    """Fidelity to the maximally entangled state: (1 + 8*lam)/9."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"mixing weight must be in [0, 1], got {lam}")
    return (1.0 + 8.0 * lam) / 9.0


def v_star(lam: float) -> float:
    """Ceiling visibility for a perfectly locked scan: 3*lam/(2 + lam)."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"mixing weight must be in [0, 1], got {lam}")
    return 3.0 * lam / (2.0 + lam)


def estimate_r(left: FringeSeries, right: FringeSeries, init: dict | None = None) -> RatioEstimate:
    """Phase-scan ratio from simultaneous lateral-peak fringes.

    Fits each lateral series to a single cosine and returns
    omega_right / omega_left with first-order error propagation.  Raises
    :class:`NoConvergence` if either fit fails.
    """
    fit_l = fit_cosine(left, init)
    fit_r = fit_cosine(right, init)
    if not (fit_l.converged and fit_r.converged):
        raise NoConvergence("lateral-fringe fit did not converge")
    wl, wr = fit_l.omega, fit_r.omega
    sl, sr = fit_l.uncertainties["omega"], fit_r.uncertainties["omega"]
    r_hat = wr / wl
    sigma = abs(r_hat) * float(np.hypot(sr / wr, sl / wl))
    return RatioEstimate(r_hat=float(r_hat), sigma=sigma, fit_right=fit_r, fit_left=fit_l)


def net_series(series: FringeSeries, accidental) -> FringeSeries:
    """Subtract expected per-point accidental counts, floored at zero."""
    acc = np.broadcast_to(np.asarray(accidental, dtype=float), series.values.shape)
    vals = np.maximum(series.values - acc, 0.0)
    return series.with_values(vals, net=True, accidental_subtracted=float(np.mean(acc)))


def analyze_fringe(
    raw: FringeSeries,
    left: FringeSeries | None = None,
    right: FringeSeries | None = None,
    accidental: float = 0.0,
) -> AnalysisResult:
    """Full raw/net analysis of one central fringe scan.

    Raw quantities come from a background-frozen fit (any accidental floor
    is absorbed into the mixing weight, as for uncorrected data); net
    quantities from a fit to the accidental-subtracted series.  When both
    lateral series are given, the scan ratio is estimated from them and
    used to seed the central fits; a central-fit ratio disagreeing by more
    than 3 sigma is surfaced as a warning.
    """
    warnings = []
    ratio = None
    init = {}
    if left is not None and right is not None:
        ratio = estimate_r(left, right)
        init["ratio"] = ratio.r_hat

    fit_raw_res = _fit_ratio_starts(raw, init, fit_background=False)
    netted = net_series(raw, accidental)
    fit_net_res = _fit_ratio_starts(netted, init, fit_background=False)

    for tag, fit in (("raw", fit_raw_res), ("net", fit_net_res)):
        if not fit.converged:
            warnings.append(f"{tag} fit did not converge")
        if fit.lambda_clamped:
            warnings.append(f"{tag} mixing weight clamped to [0, 1]")

    if ratio is not None and fit_net_res.converged:
        sig = float(np.hypot(ratio.sigma, fit_net_res.uncertainties.get("ratio", 0.0)))
        if sig > 0 and abs(fit_net_res.r_hat - ratio.r_hat) > 3.0 * sig:
            warnings.append(
                "scan-ratio estimates disagree: "
                f"central fit {fit_net_res.r_hat:.5f} vs lateral {ratio.r_hat:.5f}"
            )

    v_raw = visibility(raw, "from_fit", fit_raw_res) if fit_raw_res.converged else visibility(raw)
    v_net = visibility(netted, "from_fit", fit_net_res) if fit_net_res.converged else visibility(netted)
    f_raw = fidelity_from_lambda(fit_raw_res.lambda_hat)
    f_net = fidelity_from_lambda(fit_net_res.lambda_hat)

    sig_lam_raw = fit_raw_res.uncertainties.get("lambda", float("nan"))
    sig_lam_net = fit_net_res.uncertainties.get("lambda", float("nan"))
    uncertainties = {
        "lambda_raw": sig_lam_raw,
        "lambda_net": sig_lam_net,
        "f_raw": 8.0 / 9.0 * sig_lam_raw,
        "f_net": 8.0 / 9.0 * sig_lam_net,
        "v_raw": _visibility_sigma(raw, fit_raw_res),
        "v_net": _visibility_sigma(netted, fit_net_res),
        "r_hat": ratio.sigma if ratio is not None else fit_net_res.uncertainties.get("ratio", float("nan")),
    }

    return AnalysisResult(
        v_raw=v_raw,
        v_net=v_net,
        f_raw=f_raw,
        f_net=f_net,
        v_star=v_star(fit_net_res.lambda_hat),
        r_hat=ratio.r_hat if ratio is not None else fit_net_res.r_hat,
        lambda_raw=fit_raw_res.lambda_hat,
        lambda_net=fit_net_res.lambda_hat,
        uncertainties=uncertainties,
        warnings=tuple(warnings),
        fit_raw=fit_raw_res,
        fit_net=fit_net_res,
        ratio=ratio,
    )


def _fit_ratio_starts(series: FringeSeries, init: dict, fit_background: bool) -> FitResult:
    """Fit with extra starts bracketing the ratio guess.

    On scan grids far from phase zero the cost surface has local minima in
    the ratio spaced 2*pi / <|s|>; starting one mode to either side of the
    lateral-peak estimate and keeping the lowest cost disambiguates them.
    """
    fits = [fit_fringe(series, init=dict(init), fit_background=fit_background)]
    mean_abs = float(np.mean(np.abs(series.phases)))
    if "ratio" in init and mean_abs > 0:
        spacing = 2.0 * np.pi / mean_abs
        for r0 in (init["ratio"] - spacing, init["ratio"] + spacing):
            alt = dict(init)
            alt["ratio"] = r0
            fits.append(fit_fringe(series, init=alt, fit_background=fit_background))
    return min(fits, key=lambda f: f.cost)


def _visibility_sigma(series: FringeSeries, fit: FitResult) -> float:
    """Delta-method sigma of the from-fit visibility, propagating the
    lambda and ratio uncertainties through the model extrema."""
    if not fit.converged:
        return float("nan")
    dense = np.linspace(series.phases[0], series.phases[-1], 4001)

    def vis(lam, ratio):
        m = central_model(dense, lam, ratio, fit.phase_offset, fit.amplitude_scale, fit.background)
        hi, lo = m.max(), m.min()
        return (hi - lo) / (hi + lo) if hi + lo > 0 else 0.0

    total = 0.0
    for sig, step, args in (
        (fit.uncertainties.get("lambda", np.nan), 1e-4, lambda h: vis(min(fit.lambda_hat + h, 1.0), fit.r_hat)),
        (fit.uncertainties.get("ratio", np.nan), 1e-5, lambda h: vis(fit.lambda_hat, fit.r_hat + h)),
    ):
        if not np.isfinite(sig) or sig == 0:
            continue
        slope = (args(step) - args(0.0)) / step
        total += (slope * sig) ** 2
    return float(np.sqrt(total))
