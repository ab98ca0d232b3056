"""
API layer for the EIT ladder simulator.
"""

from .models import (
    SpectrumRequest,
    SpectrumResponse,
    MapRequest,
    MapResponse,
    ExtinctionRequest,
    ExtinctionResponse,
    EvolveRequest,
    EvolveResponse,
    FitRequest,
    FitResponse,
    AtomInfoResponse,
    PointError,
    ErrorResponse,
    HealthResponse
)

__all__ = [
    'SpectrumRequest',
    'SpectrumResponse',
    'MapRequest',
    'MapResponse',
    'ExtinctionRequest',
    'ExtinctionResponse',
    'EvolveRequest',
    'EvolveResponse',
    'FitRequest',
    'FitResponse',
    'AtomInfoResponse',
    'PointError',
    'ErrorResponse',
    'HealthResponse',
]
