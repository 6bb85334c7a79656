"""Global configuration shared by the CLI and the HTTP service."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

ENV_VAR = "ECOPERF_CONFIG"

DEFAULT_SEED = 42


@dataclass
class GlobalConfig:
    store: Path
    registry: Path
    weights: Path | None = None
    seed: int = DEFAULT_SEED
    verbosity: str = "info"

    @classmethod
    def load(cls, path: str | Path | None = None) -> "GlobalConfig":
        """Read config JSON from ``path``, $ECOPERF_CONFIG, or defaults."""
        if path is None:
            env = os.environ.get(ENV_VAR)
            path = Path(env) if env else None
        if path is None:
            return cls(store=Path("store").resolve(), registry=Path("registry").resolve())
        obj = json.loads(Path(path).read_text("utf-8"))
        base = Path(path).resolve().parent
        def _resolve(value: str) -> Path:
            p = Path(value)
            return p if p.is_absolute() else (base / p).resolve()
        return cls(
            store=_resolve(obj.get("store", "store")),
            registry=_resolve(obj.get("registry", "registry")),
            weights=_resolve(obj["weights"]) if obj.get("weights") else None,
            seed=int(obj.get("seed", DEFAULT_SEED)),
            verbosity=str(obj.get("verbosity", "info")),
        )
