"""Read-only HTTP service over an event store and a benchmark registry.

Every endpoint returns the exact bytes the CLI writes for the same query;
nothing here mutates state. Store trouble (missing or corrupt manifest)
maps to 503 so clients can retry after the next ingest commit.
"""

from __future__ import annotations

from fastapi import FastAPI, Response
from fastapi.responses import JSONResponse

from .bench import BenchmarkRegistry
from .config import GlobalConfig
from .errors import EcoperfError, ManifestCorruptError, UnknownSpecError
from .events import EventStore
from .indices import EventWeightConfig
from .queries import INDEX_IDS, catalog_payload, index_payload, index_results, leaderboard_payload, runs_payload
from .util import is_month, json_bytes


def _json(payload) -> Response:
    return Response(content=json_bytes(payload), media_type="application/json")


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": message})


def create_app(config: GlobalConfig) -> FastAPI:
    app = FastAPI(title="ecoperf", docs_url=None, redoc_url=None)
    weights = EventWeightConfig.from_file(config.weights) if config.weights else None

    def open_store() -> EventStore:
        return EventStore(config.store, create=False)

    @app.get("/healthz")
    def healthz():
        return _json({"status": "ok"})

    @app.get("/v1/benchmarks")
    def benchmarks():
        return _json(catalog_payload())

    @app.get("/v1/benchmarks/{spec_id}/runs")
    def benchmark_runs(spec_id: str):
        registry = BenchmarkRegistry(config.registry, create=False)
        try:
            return _json(runs_payload(registry, spec_id))
        except UnknownSpecError as exc:
            return _error(404, str(exc))

    @app.get("/v1/index/{index_id}")
    def index(index_id: str, month: str = "", entity: str = "repo"):
        if index_id not in INDEX_IDS:
            return _error(404, f"unknown index {index_id!r}; known: {sorted(INDEX_IDS)}")
        if month and not is_month(month):
            return _error(400, f"month={month!r} is not YYYY-MM")
        if entity not in ("repo", "dev", "all"):
            return _error(400, f"entity={entity!r} must be repo, dev, or all")
        try:
            store = open_store()
            results = index_results(store, index_id, month or None, weights, entity_kind=entity)
        except (ManifestCorruptError, OSError) as exc:
            return _error(503, f"store unavailable: {exc}")
        except EcoperfError as exc:
            return _error(400, str(exc))
        return _json(index_payload(results))

    @app.get("/v1/leaderboard/{index_id}")
    def leaderboard(index_id: str, month: str = "", top: str = ""):
        if index_id not in INDEX_IDS:
            return _error(404, f"unknown index {index_id!r}; known: {sorted(INDEX_IDS)}")
        if month and not is_month(month):
            return _error(400, f"month={month!r} is not YYYY-MM")
        top_n: int | None = None
        if top:
            try:
                top_n = int(top)
            except ValueError:
                return _error(400, f"top={top!r} is not an integer")
            if top_n < 1:
                return _error(400, "top must be >= 1")
        try:
            store = open_store()
            payload = leaderboard_payload(store, index_id, month or None, top=top_n, weights=weights)
        except (ManifestCorruptError, OSError) as exc:
            return _error(503, f"store unavailable: {exc}")
        except EcoperfError as exc:
            return _error(400, str(exc))
        return _json(payload)

    return app
