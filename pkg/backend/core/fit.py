"""
Least-squares extraction of atomic rates from transmission traces.

Two line shapes are fitted:

- two-level (control off): t = 1 − Γ₂₁ / (2(γ₂₁ − i(δω_p − δ₀)))
  free parameters Γ₂₁, γ₂₁ and the centre offset δ₀
- EIT (control on): the full weak-probe line with Γ₂₁, γ₂₁ held fixed,
  free parameters γ₃₁, Ω_c and δ₀

The optimiser is a damped Gauss-Newton (Levenberg-Marquardt) iteration with
analytic Jacobians. Complex traces are fitted on stacked real and imaginary
residuals; magnitude-only traces fall back to |t| residuals.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from scipy import linalg
from scipy.integrate import trapezoid

from utils.lineshape import half_width_at_half_depth, local_minima, parabolic_vertex

from .errors import BadTrace, IdentifiabilityWarning, NotConvergedWarning, SimulationError
from .scattering import eit_line

logger = logging.getLogger(__name__)

MIN_TRACE_POINTS = 8
MAX_ITERATIONS = 200
GRADIENT_TOL = 1e-9
UNCERTAINTY_METHOD = "local quadratic estimate"

# Damping schedule
_DAMPING_START = 1e-3
_DAMPING_FACTOR = 3.0
_DAMPING_MIN = 1e-15
_DAMPING_MAX = 1e16
_COST_SLACK = 1e-12

# Depth (1 − |t|²) below which a trace is treated as having no dip.
_FLAT_DEPTH = 1e-9

TWO_LEVEL_PARAMETERS = ("gamma_rel_21", "gamma_deph_21", "center_offset")
EIT_PARAMETERS = ("gamma_deph_31", "omega_c_rabi", "center_offset")


@dataclass(frozen=True, eq=False)
class Trace:
    """
    Measured or synthetic transmission samples.

    Attributes:
        detunings: Probe detunings δω_p (rad/s), strictly increasing
        t: Complex transmission samples; for a magnitude-only trace, |t|
        weights: Optional positive per-point weights
        magnitude_only: True when the samples carry no phase

    Raises:
        BadTrace: On length mismatch, fewer than 8 points, non-increasing
                  detunings, non-finite samples or non-positive weights
    """
    detunings: np.ndarray
    t: np.ndarray
    weights: Optional[np.ndarray] = None
    magnitude_only: bool = False

    def __post_init__(self):
        x = np.asarray(self.detunings, dtype=float).ravel()
        t = np.asarray(self.t, dtype=complex).ravel()
        if x.size != t.size:
            raise BadTrace(f"detunings and samples differ in length ({x.size} vs {t.size})")
        if x.size < MIN_TRACE_POINTS:
            raise BadTrace(f"trace needs at least {MIN_TRACE_POINTS} points, got {x.size}")
        if not np.all(np.diff(x) > 0):
            raise BadTrace("detunings must be strictly increasing")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(t))):
            raise BadTrace("trace contains non-finite values")
        if self.magnitude_only:
            t = np.abs(t).astype(complex)
        object.__setattr__(self, "detunings", x)
        object.__setattr__(self, "t", t)

        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float).ravel()
            if w.size != x.size:
                raise BadTrace(f"weights length {w.size} does not match trace length {x.size}")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise BadTrace("weights must be finite and > 0")
            object.__setattr__(self, "weights", w)

    @classmethod
    def from_magnitude(cls, detunings, magnitude, weights=None) -> "Trace":
        """Trace carrying |t| only."""
        return cls(detunings, np.asarray(magnitude, dtype=float), weights, magnitude_only=True)

    def __len__(self) -> int:
        return self.detunings.size

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.t)

    def normalized_weights(self) -> np.ndarray:
        """Weights rescaled to unit root-mean-square (all ones when absent)."""
        if self.weights is None:
            return np.ones(len(self))
        return self.weights / np.sqrt(np.mean(self.weights ** 2))


@dataclass(frozen=True)
class FitReport:
    """
    Outcome of a line-shape fit.

    ``converged`` is True only when the scaled gradient norm fell below
    GRADIENT_TOL within MAX_ITERATIONS; otherwise ``estimates`` hold the best
    iterate. Uncertainties are 1σ from the local quadratic model at the
    solution.
    """
    model: str
    estimates: dict[str, float]
    uncertainties: dict[str, float]
    fixed: dict[str, float]
    residual_norm: float
    gradient_norm: float
    iterations: int
    converged: bool
    residual_kind: str
    uncertainty_method: str = UNCERTAINTY_METHOD
    warnings: tuple[str, ...] = ()

    def parameters(self) -> dict[str, float]:
        """Estimates and fixed values merged, as accepted by :func:`synthesize_trace`."""
        return {**self.fixed, **self.estimates}

    def as_key_values(self) -> list[str]:
        """Machine-readable ``key=value`` lines."""
        lines = [f"model={self.model}", f"residual_kind={self.residual_kind}"]
        for name, value in self.estimates.items():
            lines.append(f"{name}={value:.12g}")
            lines.append(f"{name}_uncertainty={self.uncertainties.get(name, float('nan')):.12g}")
        for name, value in self.fixed.items():
            lines.append(f"{name}_fixed={value:.12g}")
        lines += [
            f"residual_norm={self.residual_norm:.12g}",
            f"gradient_norm={self.gradient_norm:.12g}",
            f"iterations={self.iterations}",
            f"converged={str(self.converged).lower()}",
            f"uncertainty_method={self.uncertainty_method}",
        ]
        return lines


@dataclass
class _Solution:
    params: np.ndarray
    residual: np.ndarray
    jacobian: np.ndarray
    scales: np.ndarray
    gradient_norm: float
    iterations: int
    converged: bool


ResidualFunction = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


def _levenberg_marquardt(
    evaluate: ResidualFunction,
    p0: np.ndarray,
    scale_floor: float,
    feasible: Callable[[np.ndarray], bool],
) -> _Solution:
    """
    Minimise ½‖r(p)‖² by damped Gauss-Newton steps.

    Parameters are scaled by max(|p|, scale_floor) each iteration; damping
    uses the Marquardt diagonal and is multiplied by 3 on a rejected step
    and divided by 3 on an accepted one. Each step solves the augmented
    system [J·S; √λ·D] s = [−r; 0] by least squares.
    """
    p = np.array(p0, dtype=float)
    r, jac = evaluate(p)
    cost = 0.5 * float(r @ r)
    damping = _DAMPING_START
    n = p.size

    iterations = 0
    converged = False
    gradient_norm = np.inf
    while True:
        scales = np.maximum(np.abs(p), scale_floor)
        scaled_jac = jac * scales
        gradient_norm = float(np.max(np.abs(scaled_jac.T @ r)))
        if gradient_norm <= GRADIENT_TOL:
            converged = True
            break
        if iterations >= MAX_ITERATIONS or damping > _DAMPING_MAX:
            break
        iterations += 1

        diag = np.sqrt(np.maximum(np.sum(scaled_jac ** 2, axis=0), np.finfo(float).tiny))
        system = np.vstack([scaled_jac, np.sqrt(damping) * np.diag(diag)])
        rhs = np.concatenate([-r, np.zeros(n)])
        step = linalg.lstsq(system, rhs)[0]
        candidate = p + scales * step

        if feasible(candidate):
            r_new, jac_new = evaluate(candidate)
            cost_new = 0.5 * float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost * (1.0 + _COST_SLACK):
                p, r, jac, cost = candidate, r_new, jac_new, cost_new
                damping = max(damping / _DAMPING_FACTOR, _DAMPING_MIN)
                continue
        damping *= _DAMPING_FACTOR

    logger.debug("LM stopped after %d iteration(s): cost %.6e, gradient %.3e, damping %.1e",
                 iterations, cost, gradient_norm, damping)
    return _Solution(
        params=p, residual=r, jacobian=jac, scales=np.maximum(np.abs(p), scale_floor),
        gradient_norm=gradient_norm, iterations=iterations, converged=converged,
    )


def _uncertainties(solution: _Solution) -> np.ndarray:
    m, n = solution.jacobian.shape
    scaled_jac = solution.jacobian * solution.scales
    dof = max(m - n, 1)
    variance = float(solution.residual @ solution.residual) / dof
    covariance = variance * linalg.pinv(scaled_jac.T @ scaled_jac)
    return solution.scales * np.sqrt(np.maximum(np.diag(covariance), 0.0))


def _residual_function(model: Callable, trace: Trace) -> ResidualFunction:
    """Wrap a model returning (t, ∂t/∂p) into weighted stacked residuals."""
    w = trace.normalized_weights()

    if trace.magnitude_only:
        data = trace.magnitude

        def evaluate(p):
            t, dt = model(p)
            magnitude = np.abs(t)
            safe = np.where(magnitude > 0, magnitude, 1.0)
            r = w * (magnitude - data)
            jac = w[:, None] * np.real(np.conj(t)[:, None] * dt) / safe[:, None]
            return r, jac
    else:
        data = trace.t

        def evaluate(p):
            t, dt = model(p)
            diff = w * (t - data)
            weighted = w[:, None] * dt
            return np.concatenate([diff.real, diff.imag]), np.vstack([weighted.real, weighted.imag])

    return evaluate


def _two_level_model(x: np.ndarray) -> Callable:
    def model(p):
        gamma_rel, gamma, center = p
        d = 2.0 * (gamma - 1j * (x - center))
        f = gamma_rel / d ** 2
        t = 1.0 - gamma_rel / d
        return t, np.column_stack([-1.0 / d, 2.0 * f, 2j * f])
    return model


def _eit_model(x: np.ndarray, gamma_rel: float, gamma_21: float, delta_c: float) -> Callable:
    def model(p):
        gamma_31, omega_c, center = p
        u = x - center
        v = gamma_31 - 1j * (u + delta_c)
        dressing = omega_c ** 2 / (2.0 * v ** 2)
        d = 2.0 * (gamma_21 - 1j * u) + omega_c ** 2 / (2.0 * v)
        f = gamma_rel / d ** 2
        t = 1.0 - gamma_rel / d
        return t, np.column_stack([-f * dressing, f * omega_c / v, f * (2j - 1j * dressing)])
    return model


def _dip_depth(trace: Trace) -> np.ndarray:
    # 1 − |t|² of the two-level line is a Lorentzian of half width γ₂₁.
    return 1.0 - trace.magnitude ** 2


def _initial_two_level(trace: Trace) -> Optional[np.ndarray]:
    x = trace.detunings
    magnitude = trace.magnitude
    depth = _dip_depth(trace)
    index = int(np.argmin(magnitude))
    if depth[index] < _FLAT_DEPTH:
        return None
    if index == 0 or index == len(trace) - 1:
        raise BadTrace("transmission minimum lies at the edge of the trace; widen the detuning range")

    center, t_min = parabolic_vertex(x, magnitude, index)
    t_min = float(np.clip(t_min, 0.0, 1.0))
    gamma = half_width_at_half_depth(x, depth, index)
    if gamma is None or not gamma > 0:
        gamma = 0.25 * (x[-1] - x[0])
    gamma_rel = 2.0 * gamma * (1.0 - t_min)
    logger.debug("Two-level start: Γ21=%.4e γ21=%.4e δ0=%.4e", gamma_rel, gamma, center)
    return np.array([gamma_rel, gamma, center])


def _report(
    model_name: str,
    names: Sequence[str],
    solution: _Solution,
    trace: Trace,
    fixed: Mapping[str, float],
    estimates_override: Optional[dict] = None,
    notes: Sequence[str] = (),
) -> FitReport:
    sigma = _uncertainties(solution)
    estimates = dict(zip(names, (float(v) for v in solution.params)))
    if estimates_override:
        estimates.update(estimates_override)
    report = FitReport(
        model=model_name,
        estimates=estimates,
        uncertainties=dict(zip(names, (float(s) for s in sigma))),
        fixed=dict(fixed),
        residual_norm=float(np.linalg.norm(solution.residual)),
        gradient_norm=solution.gradient_norm,
        iterations=solution.iterations,
        converged=solution.converged,
        residual_kind="magnitude" if trace.magnitude_only else "complex",
        warnings=tuple(notes),
    )
    if not report.converged:
        message = (f"{model_name} fit stopped after {report.iterations} iteration(s) with "
                   f"gradient norm {report.gradient_norm:.3e} > {GRADIENT_TOL:g}")
        logger.warning(message)
        warnings.warn(message, NotConvergedWarning, stacklevel=3)
    return report


def fit_two_level(trace: Trace) -> FitReport:
    """
    Fit the control-off line shape.

    Args:
        trace: Samples spanning the dip (minimum |t| inside the grid)

    Returns:
        FitReport with gamma_rel_21, gamma_deph_21, center_offset. A trace
        with no dip yields gamma_rel_21 = 0, NaN for the rest and
        converged = False.

    Raises:
        BadTrace: If the minimum lies at the edge of the trace
    """
    start = _initial_two_level(trace)
    if start is None:
        message = "trace shows no transmission dip; gamma_rel_21 set to 0"
        logger.warning(message)
        warnings.warn(message, NotConvergedWarning, stacklevel=2)
        nan = float("nan")
        return FitReport(
            model="two_level",
            estimates={"gamma_rel_21": 0.0, "gamma_deph_21": nan, "center_offset": nan},
            uncertainties={name: nan for name in TWO_LEVEL_PARAMETERS},
            fixed={},
            residual_norm=float(np.linalg.norm(trace.normalized_weights() * (trace.t - 1.0))),
            gradient_norm=nan,
            iterations=0,
            converged=False,
            residual_kind="magnitude" if trace.magnitude_only else "complex",
            warnings=(message,),
        )

    evaluate = _residual_function(_two_level_model(trace.detunings), trace)
    solution = _levenberg_marquardt(
        evaluate, start, scale_floor=start[1],
        feasible=lambda p: p[0] >= 0 and p[1] > 0,
    )
    return _report("two_level", TWO_LEVEL_PARAMETERS, solution, trace, fixed={})


def _initial_eit(trace: Trace, gamma_rel: float, gamma_21: float, delta_c: float) -> np.ndarray:
    x = trace.detunings
    depth = np.clip(_dip_depth(trace), 0.0, None)
    area = trapezoid(depth, x)
    center = float(trapezoid(x * depth, x) / area) if area > 0 else float(x[np.argmin(trace.magnitude)])

    # Control amplitude candidates: dip separation, and the centre value
    # t(δ₀) = 1 − Γ₂₁ / (2γ₂₁ + Ω_c²/(2γ₃₁)) solved for Ω_c at each γ₃₁.
    minima = local_minima(trace.magnitude)
    separation = None
    if minima.size >= 2:
        deepest = np.sort(minima[np.argsort(trace.magnitude[minima], kind="stable")[:2]])
        separation = float(x[deepest[1]] - x[deepest[0]])
    t_center = float(np.interp(center, x, trace.t.real if not trace.magnitude_only else trace.magnitude))

    evaluate = _residual_function(_eit_model(x, gamma_rel, gamma_21, delta_c), trace)
    best, best_cost = None, np.inf
    for gamma_31 in gamma_21 * np.logspace(-2, 2, 41):
        candidates = []
        if separation is not None:
            candidates.append(separation)
        if t_center < 1.0:
            omega_sq = 2.0 * gamma_31 * (gamma_rel / (1.0 - t_center) - 2.0 * gamma_21)
            candidates.append(np.sqrt(omega_sq) if omega_sq > 0 else 0.0)
        for omega_c in candidates or [gamma_21]:
            p = np.array([gamma_31, omega_c, center])
            r, _ = evaluate(p)
            cost = float(r @ r)
            if np.isfinite(cost) and cost < best_cost:
                best, best_cost = p, cost
    logger.debug("EIT start: γ31=%.4e Ωc=%.4e δ0=%.4e", *best)
    return best


def fit_eit(
    trace: Trace,
    known: Mapping[str, float],
    delta_c: float = 0.0,
) -> FitReport:
    """
    Fit γ₃₁, Ω_c and the centre offset with Γ₂₁ and γ₂₁ held fixed.

    Args:
        trace: Spectrum recorded with the control on
        known: ``gamma_rel_21`` and ``gamma_deph_21`` (1/s)
        delta_c: Control detuning during acquisition (rad/s)

    Returns:
        FitReport with gamma_deph_31, omega_c_rabi (≥ 0) and center_offset

    Warns:
        IdentifiabilityWarning: If the fitted Ω_c < γ₃₁/2
    """
    try:
        gamma_rel = float(known["gamma_rel_21"])
        gamma_21 = float(known["gamma_deph_21"])
    except KeyError as exc:
        raise ValueError(f"known must provide {exc.args[0]}") from None
    if not (gamma_rel > 0 and gamma_21 > 0):
        raise ValueError(f"known rates must be > 0, got Γ21={gamma_rel}, γ21={gamma_21}")

    start = _initial_eit(trace, gamma_rel, gamma_21, delta_c)
    evaluate = _residual_function(_eit_model(trace.detunings, gamma_rel, gamma_21, delta_c), trace)
    solution = _levenberg_marquardt(
        evaluate, start, scale_floor=gamma_21,
        feasible=lambda p: p[0] > 0,
    )

    omega_c = abs(float(solution.params[1]))
    gamma_31 = float(solution.params[0])
    notes = []
    if omega_c < gamma_31 / 2.0:
        message = (f"fitted omega_c_rabi {omega_c:.3e} < gamma_deph_31/2 = {gamma_31 / 2:.3e}; "
                   "the transparency window is too shallow to separate gamma_deph_31 and omega_c_rabi")
        notes.append(message)
        logger.warning(message)
        warnings.warn(message, IdentifiabilityWarning, stacklevel=2)

    fixed = {"gamma_rel_21": gamma_rel, "gamma_deph_21": gamma_21}
    if delta_c:
        fixed["delta_c"] = delta_c
    return _report("eit", EIT_PARAMETERS, solution, trace, fixed=fixed,
                   estimates_override={"omega_c_rabi": omega_c}, notes=notes)


def model_transmission(params: Mapping[str, float], detunings: Sequence[float]) -> np.ndarray:
    """
    Weak-probe transmission for a parameter mapping as used in FitReport.

    Keys: gamma_rel_21, gamma_deph_21 (required); gamma_deph_31,
    omega_c_rabi, center_offset, delta_c (default 0).
    """
    x = np.asarray(detunings, dtype=float) - params.get("center_offset", 0.0)
    return eit_line(
        x,
        params["gamma_rel_21"],
        params["gamma_deph_21"],
        params.get("gamma_deph_31", 0.0),
        params.get("omega_c_rabi", 0.0),
        params.get("delta_c", 0.0),
    )


def synthesize_trace(
    params: Mapping[str, float],
    detunings: Sequence[float],
    noise: float = 0.0,
    rng: Optional[np.random.Generator] = None,
    magnitude_only: bool = False,
) -> Trace:
    """
    Model trace with optional Gaussian noise.

    Args:
        params: Parameter mapping (see :func:`model_transmission`)
        detunings: Probe detunings (rad/s)
        noise: Standard deviation added to each quadrature of t (or to |t|)
        rng: Random generator; required when noise > 0
        magnitude_only: Produce a |t| trace
    """
    if noise < 0:
        raise ValueError(f"noise must be >= 0, got {noise}")
    t = model_transmission(params, detunings)
    if magnitude_only:
        t = np.abs(t)
    if noise > 0:
        if rng is None:
            raise ValueError("rng is required when noise > 0")
        if magnitude_only:
            t = t + noise * rng.standard_normal(t.shape)
        else:
            t = t + noise * (rng.standard_normal(t.shape) + 1j * rng.standard_normal(t.shape))
    return Trace(detunings, t, magnitude_only=magnitude_only)


@dataclass(frozen=True)
class BootstrapSummary:
    """Spread of re-fitted estimates over synthetic noisy traces."""
    runs: int
    failures: int
    noise: float
    mean: dict[str, float] = field(default_factory=dict)
    std: dict[str, float] = field(default_factory=dict)


def parametric_bootstrap(
    report: FitReport,
    trace: Trace,
    runs: int,
    rng: np.random.Generator,
    noise: Optional[float] = None,
) -> BootstrapSummary:
    """
    Re-fit ``runs`` synthetic traces drawn around a fitted model.

    Args:
        report: Fit whose parameters generate the synthetic traces
        trace: Original trace (supplies detunings and residual kind)
        runs: Number of synthetic re-fits
        rng: Random generator (seeded by the caller)
        noise: Per-quadrature noise; defaults to the RMS residual of the fit

    Returns:
        Mean and standard deviation of each estimate over successful runs
    """
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    if noise is None:
        count = len(trace) if trace.magnitude_only else 2 * len(trace)
        noise = report.residual_norm / np.sqrt(count)

    params = report.parameters()
    samples = {name: [] for name in report.estimates}
    failures = 0
    for _ in range(runs):
        synthetic = synthesize_trace(params, trace.detunings, noise, rng, trace.magnitude_only)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                if report.model == "eit":
                    refit = fit_eit(synthetic, report.fixed, report.fixed.get("delta_c", 0.0))
                else:
                    refit = fit_two_level(synthetic)
        except SimulationError:
            failures += 1
            continue
        if not refit.converged:
            failures += 1
            continue
        for name, value in refit.estimates.items():
            samples[name].append(value)

    logger.info("Bootstrap: %d run(s), %d failure(s), noise %.3e", runs, failures, noise)
    mean = {k: float(np.mean(v)) if v else float("nan") for k, v in samples.items()}
    std = {k: float(np.std(v, ddof=1)) if len(v) > 1 else float("nan") for k, v in samples.items()}
    return BootstrapSummary(runs=runs, failures=failures, noise=float(noise), mean=mean, std=std)
