"""
FastAPI routes for the simulator API.

Provides REST endpoints for spectra, control maps, extinction curves,
time evolution, line-shape fits and atom diagnostics. Endpoints are plain
functions (FastAPI runs them in its thread pool) because the work is
CPU-bound.
"""

import io
import logging
import math
from typing import Literal, Optional

import numpy as np
from fastapi import APIRouter, File, HTTPException, UploadFile, status

from core import __version__
from core.atom import AtomSpec, basis_state, positivity_caveats, reference_atom, validate_atom
from core.errors import BadTrace, ConfigError, EITError, GridTooCoarse, IoError
from core.experiments import (
    DipSplitting,
    SweepResult,
    contrast,
    dip_splitting,
    extinction_curve,
    sweep_map,
    sweep_probe,
)
from core.fit import FitReport, Trace, fit_eit, fit_two_level
from core.scattering import coupling_to_rate, rate_to_coupling
from core.solver import EvolveConfig, stability_bound, trajectory
from settings import get_settings
from utils.csv_io import read_trace_csv

from .models import (
    AtomInfoResponse,
    EvolveRequest,
    EvolveResponse,
    ExtinctionRequest,
    ExtinctionResponse,
    FitRequest,
    FitResponse,
    HealthResponse,
    MapRequest,
    MapResponse,
    PointError,
    SpectrumRequest,
    SpectrumResponse,
)

logger = logging.getLogger(__name__)

# Create router
router = APIRouter(prefix="/api", tags=["EIT simulator"])


def _http_error(exc: EITError) -> HTTPException:
    """Map a simulator error to an HTTP error carrying its error class."""
    if isinstance(exc, ConfigError):
        code = status.HTTP_400_BAD_REQUEST
    else:
        code = status.HTTP_422_UNPROCESSABLE_ENTITY
    return HTTPException(status_code=code, detail={"error_class": exc.error_class, "message": str(exc)})


def _finite(values) -> list[Optional[float]]:
    """JSON-safe floats: NaN and infinities become null."""
    return [float(v) if math.isfinite(v) else None for v in np.asarray(values, dtype=float).ravel()]


def _point_errors(result: SweepResult) -> list[PointError]:
    return [PointError(index=i, error=r.error) for i, r in enumerate(result.records) if not r.ok]


def _atom_and_drive(request):
    atom = request.atom.to_spec()
    return atom, request.drive.to_spec(atom)


@router.post(
    "/spectrum",
    response_model=SpectrumResponse,
    status_code=status.HTTP_200_OK,
    summary="Probe spectrum",
    description="Complex transmission against probe detuning at fixed control drive",
)
def spectrum(request: SpectrumRequest):
    """
    Compute t(δω_p) for the configured atom and drive.

    When two dips are resolved (control on, resonant control) their refined
    positions are returned as well.
    """
    try:
        atom, drive = _atom_and_drive(request)
        result = sweep_probe(atom, drive, request.grid.delta_p_values(), request.mode)
        dips = None
        if drive.delta_c == 0:
            try:
                found = dip_splitting(result)
            except GridTooCoarse:
                found = None
            if isinstance(found, DipSplitting):
                dips = list(found.positions)
    except EITError as exc:
        raise _http_error(exc)

    t = result.transmission()
    return SpectrumResponse(
        mode=result.mode.value,
        delta_p=result.grid.values1.tolist(),
        re_t=_finite(t.real),
        im_t=_finite(t.imag),
        T=_finite(result.power()),
        dip_positions=dips,
        errors=_point_errors(result),
        version=result.version,
    )


@router.post(
    "/map",
    response_model=MapResponse,
    status_code=status.HTTP_200_OK,
    summary="Control map",
    description="Power transmission over control amplitude and probe detuning",
)
def control_map(request: MapRequest):
    """Compute T(Ω_c, δω_p); rows run along the omega_c axis."""
    try:
        atom, drive = _atom_and_drive(request)
        result = sweep_map(
            atom, drive, request.grid.delta_p_values(), request.grid.omega_c_values(), request.mode,
        )
    except EITError as exc:
        raise _http_error(exc)

    power = result.power()
    return MapResponse(
        mode=result.mode.value,
        delta_p=result.grid.values1.tolist(),
        omega_c=result.grid.values2.tolist(),
        T=[_finite(row) for row in power],
        errors=_point_errors(result),
        version=result.version,
    )


@router.post(
    "/extinction",
    response_model=ExtinctionResponse,
    status_code=status.HTTP_200_OK,
    summary="Extinction curve",
    description="Resonant power transmission against control amplitude, with the ideal-limit curve",
)
def extinction(request: ExtinctionRequest):
    """Compute T(Ω_c) at δω_p = δω_c = 0 and its contrast."""
    try:
        atom, drive = _atom_and_drive(request)
        result = extinction_curve(atom, request.grid.omega_c_values(), request.mode, drive)
        model_contrast = contrast(result)
        ideal_contrast = contrast(result, which="ideal")
    except EITError as exc:
        raise _http_error(exc)

    return ExtinctionResponse(
        mode=result.mode.value,
        omega_c=result.grid.values1.tolist(),
        T=_finite(result.power()),
        T_ideal=_finite(result.ideal),
        contrast=model_contrast,
        contrast_ideal=ideal_contrast,
        errors=_point_errors(result),
        version=result.version,
    )


@router.post(
    "/evolve",
    response_model=EvolveResponse,
    status_code=status.HTTP_200_OK,
    summary="Time evolution",
    description="RK4 evolution of the density matrix from a basis state",
)
def evolve(request: EvolveRequest):
    """Integrate the master equation and return populations and |ρ21|."""
    section = request.evolve
    try:
        atom, drive = _atom_and_drive(request)
        if section.step is None:
            cfg = EvolveConfig.for_system(atom, drive, section.t_final)
        else:
            cfg = EvolveConfig(step=section.step, t_final=section.t_final)
        result = trajectory(atom, drive, basis_state(section.initial_level), cfg, samples=section.samples)
    except EITError as exc:
        raise _http_error(exc)

    return EvolveResponse(
        times=result.times.tolist(),
        populations=result.populations().tolist(),
        abs_rho21=np.abs(result.coherence(2, 1)).tolist(),
        step=cfg.step,
        stability_bound=_finite([stability_bound(atom, drive)])[0],
    )


def _fit_response(report: FitReport) -> FitResponse:
    return FitResponse(
        model=report.model,
        estimates={k: (v if math.isfinite(v) else None) for k, v in report.estimates.items()},
        uncertainties={k: (v if math.isfinite(v) else None) for k, v in report.uncertainties.items()},
        fixed=report.fixed,
        residual_norm=report.residual_norm,
        gradient_norm=report.gradient_norm if math.isfinite(report.gradient_norm) else None,
        iterations=report.iterations,
        converged=report.converged,
        residual_kind=report.residual_kind,
        uncertainty_method=report.uncertainty_method,
        warnings=list(report.warnings),
    )


def _run_fit(trace: Trace, model: str, known: Optional[dict], delta_c: float) -> FitReport:
    if model == "eit":
        try:
            return fit_eit(trace, known or {}, delta_c=delta_c)
        except ValueError as exc:
            if isinstance(exc, EITError):
                raise
            raise ConfigError(str(exc)) from exc
    return fit_two_level(trace)


@router.post(
    "/fit",
    response_model=FitResponse,
    status_code=status.HTTP_200_OK,
    summary="Fit a trace",
    description="Least-squares fit of the two-level or EIT line shape to a JSON trace",
)
def fit(request: FitRequest):
    """Fit complex (re_t, im_t) or magnitude-only (abs_t) samples."""
    try:
        if request.re_t is not None and request.im_t is not None:
            if len(request.re_t) != len(request.im_t):
                raise BadTrace("re_t and im_t differ in length")
            samples = np.asarray(request.re_t) + 1j * np.asarray(request.im_t)
            trace = Trace(request.detunings, samples, request.weights)
        else:
            trace = Trace.from_magnitude(request.detunings, request.abs_t, request.weights)
        report = _run_fit(trace, request.model, request.known, request.delta_c)
    except EITError as exc:
        raise _http_error(exc)
    return _fit_response(report)


@router.post(
    "/fit/upload",
    response_model=FitResponse,
    status_code=status.HTTP_200_OK,
    summary="Fit an uploaded trace CSV",
    description="Same as /fit for a CSV in the spectrum output format",
)
async def fit_upload(
    file: UploadFile = File(description="Trace CSV"),
    model: Literal["two_level", "eit"] = "two_level",
    gamma_rel_21: Optional[float] = None,
    gamma_deph_21: Optional[float] = None,
    delta_c: float = 0.0,
):
    """Parse the upload with the CLI's trace reader, then fit."""
    content = await file.read()
    try:
        trace = read_trace_csv(io.StringIO(content.decode("utf-8")))
        known = None
        if gamma_rel_21 is not None and gamma_deph_21 is not None:
            known = {"gamma_rel_21": gamma_rel_21, "gamma_deph_21": gamma_deph_21}
        elif model == "eit":
            raise ConfigError("the eit model needs gamma_rel_21 and gamma_deph_21 query parameters")
        report = _run_fit(trace, model, known, delta_c)
    except UnicodeDecodeError:
        raise _http_error(IoError("trace upload is not UTF-8 text"))
    except EITError as exc:
        raise _http_error(exc)
    return _fit_response(report)


def _atom_info(atom: AtomSpec) -> AtomInfoResponse:
    coupling = None
    if atom.gamma_rel_21 > 0 and atom.persistent_current > 0:
        coupling = rate_to_coupling(atom.gamma_rel_21, atom.persistent_current, atom.omega21, atom.line_impedance)
    rate = None
    if atom.mutual_inductance > 0 and atom.persistent_current > 0:
        rate = coupling_to_rate(atom.mutual_inductance, atom.persistent_current, atom.omega21, atom.line_impedance)
    return AtomInfoResponse(
        rates=atom.rates,
        defaulted=list(atom.defaulted),
        mutual_inductance_from_gamma_rel_21=coupling,
        gamma_rel_21_from_mutual_inductance=rate,
        radiative_bound_21=atom.gamma_rel_21 / 2,
        radiative_bound_32=(atom.gamma_rel_21 + atom.gamma_rel_32) / 2,
        violations=validate_atom(atom),
        caveats=positivity_caveats(atom),
    )


@router.get(
    "/atom/info",
    response_model=AtomInfoResponse,
    status_code=status.HTTP_200_OK,
    summary="Reference atom diagnostics",
    description="Coupling constants, radiative bounds and defaulted rates of the reference atom",
)
def atom_info():
    """Diagnostics for the reference device."""
    return _atom_info(reference_atom())


@router.get(
    "/health",
    response_model=HealthResponse,
    status_code=status.HTTP_200_OK,
    summary="Health Check",
    description="Check if API is running",
)
def health_check():
    """Simple health check endpoint."""
    return HealthResponse(status="healthy", version=__version__, workers=get_settings().workers)
