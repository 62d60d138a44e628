"""
FastAPI backend for the panel quadrature toolkit
"""

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from contextlib import asynccontextmanager
from pydantic import BaseModel, Field
from typing import Any, Dict, Optional
import logging
import sys
from pathlib import Path

# Add backend to path
sys.path.append(str(Path(__file__).parent))

from config import settings
from exceptions import ConfigurationError, QuadratureError
from services.async_wrapper import async_executor, cleanup_async_resources
from services.demos import bench, demo_parabola
from services.geometry import rho_crit
from services.rootfind import fallback_counter

logger = logging.getLogger(__name__)

MAX_API_GRID_POINTS = 10000


class ParabolaRequest(BaseModel):
    """Small parabola error sweep"""
    k: float = Field(0.25, ge=0.0, description="Curvature parameter of (t, k t^2)")
    n: int = Field(16, ge=2, le=64, description="Gauss-Legendre nodes on the panel")
    scheme: str = Field("ssq", description="direct, ho or ssq")
    mode: str = Field("none", description="none, upsample or upsample-direct")
    grid: str = Field("20x20", description="Grid size WxH")


class BenchRequest(BaseModel):
    """Weight throughput measurement"""
    n: int = Field(16, ge=2, le=32)
    targets: int = Field(500, ge=1, le=100000)
    seed: int = Field(0)
    dim: int = Field(2, ge=2, le=3)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Initialize app on startup"""
    logger.info("Panel quadrature API starting on %s:%d with %d workers",
                settings.app.api_host, settings.app.api_port, settings.app.max_workers)
    yield
    await cleanup_async_resources()


app = FastAPI(
    title="Panel Quadrature",
    description="Singularity swap quadrature for nearly singular line integrals",
    version="1.0.0",
    lifespan=lifespan
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.app.cors_origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


def _to_http(e: Exception) -> HTTPException:
    if isinstance(e, ConfigurationError):
        return HTTPException(status_code=422, detail=e.message)
    if isinstance(e, QuadratureError):
        return HTTPException(status_code=500, detail=e.message)
    return HTTPException(status_code=500, detail=str(e))


@app.get("/")
async def root():
    """Root endpoint"""
    return {
        "name": "Panel Quadrature",
        "status": "running",
        "endpoints": {
            "docs": "/docs",
            "health": "/api/health",
            "config": "/api/config",
            "rho_crit": "/api/rho-crit",
            "parabola": "/api/parabola",
            "bench": "/api/bench",
        }
    }


@app.get("/api/health")
async def health():
    """Liveness plus root-finding fallback counts"""
    return {"status": "ok", "fallbacks": fallback_counter.snapshot()}


@app.get("/api/config")
async def get_config():
    """Effective quadrature defaults"""
    return {
        "quad": settings.quad.model_dump(),
        "demo": {"grid": settings.demo.grid, "seed": settings.demo.seed,
                 "slender_radius": settings.demo.slender_radius},
        "max_workers": settings.app.max_workers,
    }


@app.get("/api/rho-crit")
async def get_rho_crit(
    tol: float = Query(..., description="Target tolerance in (0, 1)"),
    n: int = Query(16, ge=1, le=64, description="Nodes per panel")
):
    """Critical Bernstein radius for a tolerance and node count"""
    try:
        return {"tol": tol, "n": n, "rho_crit": rho_crit(tol, n)}
    except ConfigurationError as e:
        raise _to_http(e)


@app.post("/api/parabola")
async def parabola(request: ParabolaRequest) -> Dict[str, Any]:
    """Error summary of a parabola sweep"""
    try:
        width, height = (int(v) for v in request.grid.lower().split("x"))
    except ValueError:
        raise HTTPException(status_code=422, detail=f"Invalid grid '{request.grid}'")
    if width * height > MAX_API_GRID_POINTS:
        raise HTTPException(status_code=422, detail=f"Grid exceeds {MAX_API_GRID_POINTS} points")
    try:
        result = await async_executor.run_in_thread(
            demo_parabola,
            request.k,
            request.n,
            request.scheme,
            request.grid,
            request.mode,
        )
        return result.summary()
    except ConfigurationError as e:
        raise _to_http(e)
    except Exception as e:
        logger.exception("Parabola sweep failed")
        raise _to_http(e)


@app.post("/api/bench")
async def run_bench(request: BenchRequest) -> Dict[str, Any]:
    """Throughput of root finding plus weight computation"""
    try:
        record = await async_executor.run_in_thread(
            bench, request.n, request.targets, request.seed, request.dim
        )
        return {
            "targets": record.targets,
            "seconds": record.t_weights,
            "rate": record.rate,
            "n": request.n,
            "dim": request.dim,
        }
    except Exception as e:
        raise _to_http(e)


if __name__ == "__main__":
    import uvicorn
    logging.basicConfig(level=settings.app.log_level)
    uvicorn.run(
        "main:app",
        host=settings.app.api_host,
        port=settings.app.api_port,
        reload=False
    )
