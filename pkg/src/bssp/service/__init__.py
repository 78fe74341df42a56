"""FastAPI service wrapping the core library.

Run with ``uvicorn bssp.service:app``.  The bundled CLI talks to the same
application in-process, so no running server is required for batch use.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from .routes import router


def create_app() -> FastAPI:
    app = FastAPI(
        title="bssp",
        version=__version__,
        description="Branching-type stationary processes: kernels, criteria, prediction, Hankel inequalities",
    )
    app.include_router(router)

    @app.exception_handler(ValueError)
    async def value_error_handler(_: Request, exc: ValueError) -> JSONResponse:
        # invalid mathematical input (bad measures, non-PSD kernels, ...)
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    return app


app = create_app()

__all__ = ["app", "create_app"]
