"""CSV/JSON emission, run manifests, and the worker pool.

Numeric outputs carry no timestamps and use repr float formatting, so a rerun
with the same manifest reproduces them byte for byte; wall-clock data lives
only in the manifest itself.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

SCHEMA_VERSION = 1
TOOL_VERSION = "0.1.0"


def canonical_json(payload):
    return json.dumps(payload, sort_keys=True, indent=2, default=_coerce) + "\n"


def _coerce(obj):
    import numpy as np

    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    raise TypeError(f"cannot serialize {type(obj)!r}")


def content_hash(payload):
    return hashlib.sha256(canonical_json(payload).encode()).hexdigest()


def write_json(path, schema, payload):
    body = {"schema": f"uamo-lab/{schema}/v{SCHEMA_VERSION}"}
    body.update(payload)
    with open(path, "w") as fh:
        fh.write(canonical_json(body))
    return path


def write_csv(path, schema, columns, rows):
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema=uamo-lab/{schema}/v{SCHEMA_VERSION}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")
    return path


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


@dataclass
class RunManifest:
    command: list
    config: dict
    seed: int
    version: str = TOOL_VERSION
    input_hashes: dict = field(default_factory=dict)
    started_at: str = ""
    finished_at: str = ""
    outputs: list = field(default_factory=list)

    def start(self):
        self.started_at = datetime.datetime.now(datetime.timezone.utc).isoformat()
        self.input_hashes["config"] = content_hash(self.config)
        return self

    def finish(self, outputs):
        self.finished_at = datetime.datetime.now(datetime.timezone.utc).isoformat()
        self.outputs = list(outputs)
        return self

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(canonical_json({
                "command": self.command,
                "config": self.config,
                "seed": self.seed,
                "version": self.version,
                "input_hashes": self.input_hashes,
                "started_at": self.started_at,
                "finished_at": self.finished_at,
                "outputs": self.outputs,
            }))
        return path


def thread_count(requested=None):
    if requested:
        return max(int(requested), 1)
    env = os.environ.get("UAMO_LAB_THREADS", "").strip()
    if env:
        return max(int(env), 1)
    return os.cpu_count() or 1


def parallel_map(fn, items, threads=None):
    """Order-preserving map over independent work items."""
    items = list(items)
    threads = thread_count(threads)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
