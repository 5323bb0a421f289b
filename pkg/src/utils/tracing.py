#!/usr/bin/env python3
"""
Redescribe Trace Log
Line-oriented ``stage key=value ...`` records of the mining run

The file tracer writes one record per event (GCLUS-RM iteration, completion
step, memory normalisation, naive fold step). When tracing is off, an
offline tracer keeps the same interface and only logs at DEBUG.
"""

import logging
from pathlib import Path
from typing import Any, Optional, Union


def format_record(stage: str, fields: dict) -> str:
    parts = [stage]
    for key, value in fields.items():
        if isinstance(value, float):
            value = f"{value:.6g}"
        parts.append(f"{key}={value}")
    return ' '.join(parts)


class TraceLog:
    """Writes trace records to a dedicated file."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.logger = logging.getLogger(f'TraceLog-{self.path}')
        self.logger.setLevel(logging.INFO)
        self.logger.propagate = False
        self.handler = logging.FileHandler(self.path, mode='w')
        self.handler.setFormatter(logging.Formatter('%(message)s'))
        self.logger.addHandler(self.handler)
        self.enabled = True

    def record(self, stage: str, **fields: Any) -> str:
        line = format_record(stage, fields)
        self.logger.info(line)
        return line

    def close(self):
        self.handler.flush()
        self.logger.removeHandler(self.handler)
        self.handler.close()


class OfflineTracer:
    """Tracer used when no trace file is requested."""

    def __init__(self):
        self.logger = logging.getLogger('OfflineTracer')
        self.enabled = False

    def record(self, stage: str, **fields: Any) -> str:
        line = format_record(stage, fields)
        self.logger.debug(f"[TRACE] {line}")
        return line

    def close(self):
        pass


Tracer = Union[TraceLog, OfflineTracer]


def create_tracer(path: Optional[Path]) -> Tracer:
    """Factory: a file tracer when ``path`` is given, else the offline one."""
    if path is None:
        return OfflineTracer()
    try:
        return TraceLog(path)
    except OSError as e:
        logging.getLogger('OfflineTracer').warning(
            f"Cannot open trace file {path}: {e}; tracing disabled"
        )
        return OfflineTracer()
