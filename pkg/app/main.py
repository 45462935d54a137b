"""
Main FastAPI application for the product calculus toolkit.
"""

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from loguru import logger
import sys

from app import __version__
from app.config import settings
from app.api.routes import router


# Configure logger
logger.remove()  # Remove default handler
logger.add(
    sys.stderr,
    level=settings.log_level,
    format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan> - <level>{message}</level>"
)


# Create FastAPI app
app = FastAPI(
    title="Product Calculus Toolkit",
    description="Multiplicative derivatives, product integrals, product forms and the product Stokes theorem",
    version=__version__,
    debug=settings.debug
)


app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


# Include routes
app.include_router(router)


@app.on_event("startup")
async def startup_event():
    """Log the numeric defaults on startup."""
    logger.info("=" * 50)
    logger.info("Starting Product Calculus Toolkit")
    logger.info("=" * 50)
    logger.info(f"Quadrature: {settings.quad_kind}, order {settings.quad_order}, tol {settings.quad_tolerance}")
    logger.info(f"Form sample points: {settings.form_sample_points}")
    logger.info(f"Debug Mode: {settings.debug}")
    logger.info("=" * 50)


@app.get("/")
async def root():
    """Root endpoint."""
    return {
        "message": "Product Calculus Toolkit API",
        "version": __version__,
        "docs": "/docs",
        "health": "/api/health"
    }


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(
        "app.main:app",
        host=settings.api_host,
        port=settings.api_port,
        reload=settings.debug,
        log_level=settings.log_level.lower()
    )
