"""
FastAPI routes for the product calculus toolkit.
Every route mirrors one CLI subcommand and returns its OutputEnvelope.
"""

from fastapi import APIRouter, Response, status
from loguru import logger

from app import __version__
from app.api.commands import cmd_geomean, cmd_pderiv, cmd_pint, cmd_qdiff, cmd_stokes, cmd_vint, cmd_wedge
from app.config import settings
from app.models import (
    GeomeanRequest,
    HealthResponse,
    OutputEnvelope,
    PderivRequest,
    PintRequest,
    QdiffRequest,
    StokesRequest,
    VintRequest,
    WedgeRequest,
)


# Create router
router = APIRouter(prefix="/api", tags=["calculus"])


def _respond(envelope: OutputEnvelope, response: Response) -> OutputEnvelope:
    """Usage errors map to 422; math and convergence errors keep 200 with status "error"."""
    if envelope.error is not None and envelope.error.exit_code == 1:
        response.status_code = status.HTTP_422_UNPROCESSABLE_ENTITY
    return envelope


@router.get("/health", response_model=HealthResponse)
async def health_check():
    """Health check endpoint."""
    return HealthResponse(
        status="ok",
        version=__version__,
        quad_order=settings.quad_order,
        quad_tolerance=settings.quad_tolerance
    )


@router.post("/pderiv", response_model=OutputEnvelope)
async def pderiv(request: PderivRequest, response: Response):
    """Multiplicative derivative e^{f'/f} at a point."""
    return _respond(cmd_pderiv(request.f, request.x), response)


@router.post("/pint", response_model=OutputEnvelope)
async def pint(request: PintRequest, response: Response):
    """Geometric product integral, complex-valued when signed."""
    envelope = cmd_pint(
        request.f, request.a, request.b, request.signed,
        order=request.order, tol=request.tol, budget=request.budget
    )
    return _respond(envelope, response)


@router.post("/geomean", response_model=OutputEnvelope)
async def geomean(request: GeomeanRequest, response: Response):
    """Geometric mean over an interval."""
    envelope = cmd_geomean(
        request.f, request.a, request.b,
        order=request.order, tol=request.tol, budget=request.budget
    )
    return _respond(envelope, response)


@router.post("/vint", response_model=OutputEnvelope)
async def vint(request: VintRequest, response: Response):
    """Volterra product integral."""
    envelope = cmd_vint(
        request.g, request.a, request.b,
        order=request.order, tol=request.tol, budget=request.budget
    )
    return _respond(envelope, response)


@router.post("/qdiff", response_model=OutputEnvelope)
async def qdiff(request: QdiffRequest, response: Response):
    """q differential of a product form."""
    return _respond(cmd_qdiff(request.form, request.n, request.at), response)


@router.post("/wedge", response_model=OutputEnvelope)
async def wedge(request: WedgeRequest, response: Response):
    """Product wedge of two product forms."""
    return _respond(cmd_wedge(request.left, request.right, request.n, request.at), response)


@router.post("/stokes", response_model=OutputEnvelope)
async def stokes(request: StokesRequest, response: Response):
    """Product Stokes comparison for a form and a chain."""
    logger.info(f"Stokes request for form {request.form!r} on {request.chain!r}")
    envelope = cmd_stokes(
        request.form, request.n, request.chain,
        order=request.order, tol=request.tol, budget=request.budget
    )
    return _respond(envelope, response)
