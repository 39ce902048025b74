"""
FastAPI Web Service for povmix
Exposes count simulation and tail-category classification via HTTP API
"""

import logging
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from povmix import __version__
from povmix.classifier import ClassifierConfig, classify
from povmix.counts import MAX_COUNT
from povmix.distributions import CATALOGUE, law_from_name, sample_poisson_mixture
from povmix.errors import INPUT_ERRORS, NUMERICAL_ERRORS
from povmix.gof import DEFAULT_BOOT
from povmix.gpd import MIN_EXCESSES
from povmix.settings import get_settings

logger = logging.getLogger("povmix.api")

# Bootstrap tests run inside the request; large samples or n_boot are slow
MAX_SIMULATE = 1_000_000


# =============================================================================
# REQUEST / RESPONSE MODELS
# =============================================================================

class ClassifyRequest(BaseModel):
    """Count sample plus decision-tree settings"""
    counts: list[int] = Field(min_length=1)
    quantile: float = Field(default=0.95, gt=0, lt=1)
    alpha: float = Field(default=0.05, gt=0, lt=1)
    n_boot: int = Field(default=DEFAULT_BOOT, ge=1, le=2000)
    min_excesses: int = Field(default=MIN_EXCESSES, ge=1)
    seed: Optional[int] = Field(default=None, ge=0)

    class Config:
        json_schema_extra = {
            "example": {
                "counts": [0, 3, 1, 7, 2, 0, 15, 4],
                "quantile": 0.95,
                "alpha": 0.05,
                "n_boot": 250,
                "seed": 42
            }
        }


class SimulateRequest(BaseModel):
    """Poisson-mixture simulation request"""
    law: str
    params: list[float]
    n: int = Field(default=1000, ge=1, le=MAX_SIMULATE)
    seed: Optional[int] = Field(default=None, ge=0)

    class Config:
        json_schema_extra = {
            "example": {
                "law": "gamma",
                "params": [2, 1],
                "n": 1000,
                "seed": 7
            }
        }


class SimulateResponse(BaseModel):
    law: str
    seed: int
    mean: float
    variance: float
    counts: list[int]


class HealthResponse(BaseModel):
    """Health check response"""
    status: str


# =============================================================================
# FASTAPI APP INITIALIZATION
# =============================================================================

app = FastAPI(
    title="povmix API",
    description="Tail-category classification of overdispersed count data via Poisson mixtures",
    version=__version__
)


# =============================================================================
# UTILITY FUNCTIONS
# =============================================================================

def resolve_seed(seed: Optional[int]) -> int:
    if seed is not None:
        return seed
    return int(np.random.SeedSequence().entropy % 2**63)


def safe_call(fn, *args, **kwargs):
    """
    Run a library call, mapping input errors to 400 and numerical
    failures to 500.
    """
    try:
        return fn(*args, **kwargs)
    except INPUT_ERRORS as e:
        raise HTTPException(status_code=400, detail=str(e))
    except NUMERICAL_ERRORS as e:
        logger.error("numerical failure: %s", e)
        raise HTTPException(status_code=500, detail=f"numerical failure: {e}")


# =============================================================================
# API ENDPOINTS
# =============================================================================

@app.get("/", tags=["Info"])
async def root():
    """Root endpoint - API information"""
    return {
        "service": "povmix API",
        "version": __version__,
        "status": "operational",
        "endpoints": {
            "health": "/health",
            "laws": "/laws",
            "simulate": "/simulate",
            "classify": "/classify"
        }
    }


@app.get("/health", response_model=HealthResponse, tags=["Health"])
async def health_check():
    return HealthResponse(status="ok")


@app.get("/laws", tags=["Info"])
async def laws():
    """Mixing families and their tail categories"""
    return [entry._asdict() for entry in CATALOGUE]


@app.post("/simulate", response_model=SimulateResponse, tags=["Simulation"])
def simulate(request: SimulateRequest):
    """Draw counts from a Poisson mixture."""
    mixing = safe_call(law_from_name, request.law, request.params)
    seed = resolve_seed(request.seed)
    counts = safe_call(sample_poisson_mixture, mixing, request.n, np.random.default_rng(seed))

    return SimulateResponse(
        law=mixing.label,
        seed=seed,
        mean=float(counts.mean()),
        variance=float(counts.var(ddof=1)) if counts.size > 1 else 0.0,
        counts=counts.tolist()
    )


@app.post("/classify", tags=["Classification"])
def classify_counts(request: ClassifyRequest):
    """
    Run the tail decision tree on a count sample.

    Returns the decision trace; every category, unclassified included,
    is a successful response.
    """
    if any(c < 0 for c in request.counts):
        raise HTTPException(status_code=400, detail="counts must be non-negative")
    if any(c > MAX_COUNT for c in request.counts):
        raise HTTPException(status_code=400, detail=f"counts must not exceed {MAX_COUNT}")

    config = ClassifierConfig(
        threshold_p=request.quantile,
        alpha=request.alpha,
        n_boot=request.n_boot,
        min_excesses=request.min_excesses,
        seed=resolve_seed(request.seed)
    )
    _, trace = safe_call(classify, np.asarray(request.counts, dtype=np.int64), config)
    return trace.to_report()


# =============================================================================
# ERROR HANDLERS
# =============================================================================

@app.exception_handler(404)
async def not_found_handler(request, exc):
    return JSONResponse(
        status_code=404,
        content={"error": "Endpoint not found"}
    )


@app.exception_handler(HTTPException)
async def http_error_handler(request, exc):
    return JSONResponse(
        status_code=exc.status_code,
        content={"error": exc.detail}
    )


# =============================================================================
# ENTRY POINT
# =============================================================================

if __name__ == "__main__":
    import uvicorn

    settings = get_settings()
    logging.basicConfig(level=settings.log_level.upper())
    logger.info("Starting povmix API on port %d", settings.port)

    uvicorn.run(
        "main:app",
        host="0.0.0.0",
        port=settings.port,
        reload=False
    )
