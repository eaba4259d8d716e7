import json
import os
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

load_dotenv(".env")

OSAD_CONFIG = os.getenv("OSAD_CONFIG", "osad.json")
OSAD_WORKDIR = os.getenv("OSAD_WORKDIR", "artifacts")
OSAD_SEED = int(os.getenv("OSAD_SEED", "7"))
OSAD_RATE_HZ = float(os.getenv("OSAD_RATE_HZ", "200"))
OSAD_PROJECT = os.getenv("OSAD_PROJECT", "osad-toolkit")


def setup_project(project_name: Optional[str] = None) -> None:
    """Route traced stages to one LangSmith project (inert unless LANGSMITH_TRACING is on)."""
    os.environ["LANGSMITH_PROJECT"] = project_name or OSAD_PROJECT


def load_json_config(path: Optional[str]) -> Dict[str, Any]:
    """Read a JSON config file. A missing default file means an empty config."""
    if path is None:
        path, explicit = OSAD_CONFIG, False
    else:
        explicit = True
    p = Path(path)
    if not p.exists():
        if explicit:
            raise FileNotFoundError(f"config file not found: {p}")
        return {}
    with open(p, encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ValueError(f"{p}: top level of a config file must be an object")
    return data


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data: Dict[str, Any], overrides: List[str]) -> Dict[str, Any]:
    """Apply `dotted.key=value` overrides; values are JSON scalars or plain strings."""
    out = json.loads(json.dumps(data))
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ValueError(f"override must look like dotted.key=value, got {item!r}")
        node = out
        parts = key.strip().split(".")
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ValueError(f"override {key!r}: {part!r} is not a section")
            node = child
        node[parts[-1]] = _parse_value(raw.strip())
    return out
