"""Service configuration: one JSON or TOML file plus derived paths."""

from __future__ import annotations

import json

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

from .monitor import MAE_ALARM_RATIO, PSI_ALARM_THRESHOLD
from .records import parse_timestamp


@dataclass
class ServiceConfig:
    data_dir: Path = Path("edf-data")
    port: int = 8732
    mae_alarm_ratio: float = MAE_ALARM_RATIO
    psi_alarm_threshold: float = PSI_ALARM_THRESHOLD
    api_token: str | None = None
    #: per-target family overrides; unlisted targets deploy the best test-MAE family
    deployed: dict = field(default_factory=dict)
    #: known data-quality exclusion windows; reconciliation inside them fails
    data_gaps: list = field(default_factory=list)  # [(start, end) datetimes]

    @property
    def events_path(self) -> Path:
        return self.data_dir / "events.jsonl"

    @property
    def bundle_path(self) -> Path:
        return self.data_dir / "models" / "bundle.json"

    @property
    def predictions_path(self) -> Path:
        return self.data_dir / "predictions.jsonl"

    @property
    def actions_path(self) -> Path:
        return self.data_dir / "actions.jsonl"

    @classmethod
    def load(cls, path: str | Path) -> "ServiceConfig":
        path = Path(path)
        if path.suffix == ".toml":
            doc = tomllib.loads(path.read_text())
        else:
            doc = json.loads(path.read_text())
        return cls.from_dict(doc, base_dir=path.parent)

    @classmethod
    def from_dict(cls, doc: dict, base_dir: Path = Path(".")) -> "ServiceConfig":
        gaps = [
            (parse_timestamp(a), parse_timestamp(b))
            for a, b in doc.get("data_gaps", [])
        ]
        data_dir = Path(doc.get("data_dir", "edf-data"))
        if not data_dir.is_absolute():
            data_dir = base_dir / data_dir
        return cls(
            data_dir=data_dir,
            port=doc.get("port", 8732),
            mae_alarm_ratio=doc.get("mae_alarm_ratio", MAE_ALARM_RATIO),
            psi_alarm_threshold=doc.get("psi_alarm_threshold", PSI_ALARM_THRESHOLD),
            api_token=doc.get("api_token"),
            deployed=dict(doc.get("deployed", {})),
            data_gaps=gaps,
        )

    def in_gap(self, ts: datetime) -> bool:
        return any(a <= ts < b for a, b in self.data_gaps)
