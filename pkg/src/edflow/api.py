"""HTTP JSON API over a running ForecastService.

All timestamps on the wire use the local-clock 'YYYY-MM-DDTHH:MM' format.
When the config sets api_token, requests must carry it in X-API-Token.
"""

from __future__ import annotations

from datetime import datetime
from pathlib import Path

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .forecaster import display_forecast, evaluation_report
from .records import format_timestamp, parse_timestamp
from .service import ACTION_TYPES, ForecastService


class ShiftAction(BaseModel):
    shift_id: str
    timestamp: str
    action_type: str = Field(description=f"one of {ACTION_TYPES}")
    free_text: str = ""
    request_id: str | None = None


def _parse(ts: str, name: str) -> datetime:
    try:
        return parse_timestamp(ts)
    except ValueError:
        raise HTTPException(422, f"{name} must be formatted YYYY-MM-DDTHH:MM")


def create_app(service: ForecastService, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="edflow", docs_url=None, redoc_url=None)

    async def check_token(request: Request):
        token = service.config.api_token
        if token and request.headers.get("X-API-Token") != token:
            raise HTTPException(401, "missing or invalid API token")

    dep = [Depends(check_token)]

    @app.get("/api/v1/forecasts", dependencies=dep)
    def get_forecasts(
        from_: str = Query(alias="from"),
        to: str = Query(),
        target: str | None = Query(default=None),
    ):
        start = _parse(from_, "from")
        end = _parse(to, "to")
        records = service.log.records(start, end, target)
        return [
            dict(
                r.to_doc(),
                display=None if r.predicted is None else display_forecast(r.target, r.predicted),
            )
            for r in records
        ]

    @app.get("/api/v1/actuals", dependencies=dep)
    def get_actuals(from_: str = Query(alias="from"), to: str = Query()):
        start = _parse(from_, "from")
        end = _parse(to, "to")
        if service.now is None:
            raise HTTPException(409, "no ticks processed yet")
        frame = service.frame_through(service.now)
        out = []
        i0 = max(frame.grid.floor(start).ordinal, frame.start) - frame.start
        i1 = min(frame.grid.floor(end).ordinal, frame.end) - frame.start
        for i in range(i0, i1):
            out.append(
                {
                    "timestamp": format_timestamp(frame.tick(i).timestamp),
                    "census": int(frame.census[i]),
                    "arrivals_emergent": int(frame.arrivals[0, i]),
                    "arrivals_urgent": int(frame.arrivals[1, i]),
                    "arrivals_nonurgent": int(frame.arrivals[2, i]),
                }
            )
        return out

    @app.get("/api/v1/health", dependencies=dep)
    def get_health(window_days: int = Query(default=7, ge=1)):
        try:
            return service.health(window_days)
        except ValueError as exc:
            raise HTTPException(409, str(exc))

    @app.get("/api/v1/models", dependencies=dep)
    def get_models():
        deployed = {
            key: {
                "family": tm.family,
                "metrics_on_test": None if tm.metrics_on_test is None else tm.metrics_on_test.as_dict(),
            }
            for key, tm in service.deployed.items()
        }
        return {
            "split_date": service.grid.split_date.isoformat(timespec="minutes"),
            "deployed": deployed,
            "grid": evaluation_report(service.grid),
        }

    @app.post("/api/v1/shift-actions", dependencies=dep)
    def post_shift_action(action: ShiftAction):
        ts = _parse(action.timestamp, "timestamp")
        try:
            stored = service.record_shift_action(
                action.shift_id, ts, action.action_type, action.free_text, action.request_id
            )
        except ValueError as exc:
            raise HTTPException(422, str(exc))
        return JSONResponse(stored, status_code=200 if stored.get("duplicate") else 201)

    @app.get("/api/v1/shift-actions", dependencies=dep)
    def get_shift_actions(from_: str = Query(alias="from"), to: str = Query()):
        return service.actions.query(_parse(from_, "from"), _parse(to, "to"))

    @app.get("/api/v1/staffing", dependencies=dep)
    def get_staffing(at: str = Query()):
        ts = _parse(at, "at")
        return {"at": format_timestamp(ts), "horizons": service.staffing(ts)}

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="dashboard")

    return app
