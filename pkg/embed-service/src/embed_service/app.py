"""FastAPI application speaking the /embed + /health protocol.

POST /embed  {"texts": [str, ...]} -> {"embeddings": [[float, ...], ...],
                                       "dim": int, "model": str}
GET  /health -> {"status": "ok", "model": str, "dim": int}

Status codes: 400 malformed body or empty batch, 413 oversized batch,
500 encoder failure, 503 while the model is loading.  Order and batch
size are preserved; identical texts yield identical vectors for the
process lifetime.
"""

from __future__ import annotations

from contextlib import asynccontextmanager
from dataclasses import dataclass

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .encoders import load_encoder


@dataclass
class ServiceConfig:
    model: str = "hashed:384"
    host: str = "127.0.0.1"
    port: int = 8090
    max_batch: int = 256
    device: str = "cpu"


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        app.state.encoder = load_encoder(config.model, config.device)
        yield

    app = FastAPI(title="embed-service", lifespan=lifespan)
    app.state.config = config
    app.state.encoder = None

    def _error(status: int, message: str) -> JSONResponse:
        return JSONResponse(status_code=status, content={"error": message})

    @app.get("/health")
    async def health():
        encoder = app.state.encoder
        if encoder is None:
            return _error(503, "model loading")
        return {"status": "ok", "model": config.model, "dim": encoder.dim}

    @app.post("/embed")
    async def embed(request: Request):
        encoder = app.state.encoder
        if encoder is None:
            return _error(503, "model loading")
        try:
            body = await request.json()
        except Exception:
            return _error(400, "body is not valid JSON")
        if not isinstance(body, dict) or "texts" not in body:
            return _error(400, "body must be an object with a 'texts' list")
        texts = body["texts"]
        if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
            return _error(400, "'texts' must be a list of strings")
        if len(texts) == 0:
            return _error(400, "'texts' is empty")
        if len(texts) > config.max_batch:
            return _error(413, f"batch of {len(texts)} exceeds max {config.max_batch}")
        try:
            rows = encoder.encode(texts)
        except Exception as exc:  # encoder failure is a server-side fault
            return _error(500, f"encoder failure: {exc}")
        if rows.shape != (len(texts), encoder.dim):
            return _error(500, "encoder returned a malformed batch")
        return {
            "embeddings": rows.tolist(),
            "dim": encoder.dim,
            "model": config.model,
        }

    return app
