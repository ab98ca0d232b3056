"""
FastAPI application entry point for the EIT ladder simulator.

Serves spectra, control maps, extinction curves, time evolution and
line-shape fits for a single three-level atom in a transmission line.
"""

import logging

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import RedirectResponse
import uvicorn

from api.routes import router
from core import __version__
from settings import configure_logging, get_settings

settings = get_settings()
configure_logging(settings.log_level)
logger = logging.getLogger(__name__)

# Create FastAPI app
app = FastAPI(
    title="EIT Ladder Simulator API",
    description="""
    Steady-state and time-domain simulation of a single three-level atom
    coupled to an open transmission line.

    ## Features

    * **Spectrum**: Complex probe transmission against probe detuning
    * **Map**: Power transmission over control amplitude and probe detuning
    * **Extinction**: Resonant transmission against control amplitude
    * **Evolve**: RK4 evolution of the density matrix
    * **Fit**: Two-level and EIT line-shape fits to measured traces

    ## Documentation

    - Interactive API docs: `/docs`
    - Alternative docs: `/redoc`
    - Health check: `/api/health`
    """,
    version=__version__,
    license_info={
        "name": "MIT",
        "url": "https://opensource.org/licenses/MIT"
    }
)

# Configure CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=list(settings.cors_origins),
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Include routers
app.include_router(router)


# Root endpoint - redirect to docs
@app.get("/", include_in_schema=False)
async def root():
    """Redirect root to API documentation."""
    return RedirectResponse(url="/docs")


@app.on_event("startup")
async def startup_event():
    logger.info("EIT simulator API %s ready (workers=%d)", __version__, settings.workers)


# Run with uvicorn
if __name__ == "__main__":
    uvicorn.run(
        "main:app",
        host=settings.host,
        port=settings.port,
        reload=True,
        log_level=settings.log_level.lower()
    )
