# Version: 0.1
# Last Modified: 2026-10-18
# Changes: Prefixed status-line logging shared by every pipeline stage
"""
Logging helpers for the satisfaction toolkit.

Log lines keep the status-line look of the console prints, for example
``📊 DATA INFO: ✅ loaded 13071 survey rows``, but go through stdlib logging
so that levels and handlers can be configured.
"""
import logging
import os
import sys

AREA_PREFIXES = {
    "data": "📂 DATA",
    "features": "🧮 FEATURES",
    "estimation": "📈 ESTIMATION",
    "pipeline": "🚀 PIPELINE",
    "reports": "📊 REPORTS",
    "config": "⚙️ CONFIG",
}

LEVEL_MARKS = {
    logging.DEBUG: "🔍",
    logging.INFO: "✅",
    logging.WARNING: "⚠️",
    logging.ERROR: "❌",
    logging.CRITICAL: "❌",
}


class StatusLineFormatter(logging.Formatter):
    """Render records as '<emoji> <AREA> <LEVEL>: <mark> <message>'."""

    def format(self, record: logging.LogRecord) -> str:
        parts = record.name.split(".")
        area = parts[1] if len(parts) > 1 and parts[0] == "satisfaction_app" else parts[0]
        prefix = AREA_PREFIXES.get(area, "📋 " + area.upper())
        mark = LEVEL_MARKS.get(record.levelno, "")
        message = record.getMessage()
        if record.exc_info:
            message = f"{message}\n{self.formatException(record.exc_info)}"
        return f"{prefix} {record.levelname}: {mark} {message}"


def get_logger(name: str) -> logging.Logger:
    """Return a logger whose package root carries the status-line handler."""
    root = logging.getLogger("satisfaction_app")
    if not any(isinstance(h.formatter, StatusLineFormatter) for h in root.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(StatusLineFormatter())
        root.addHandler(handler)
        root.setLevel(os.getenv("SATISFACTION_LOG_LEVEL", "INFO").upper())
        root.propagate = False
    return logging.getLogger(name)
