import inspect
import logging
import os
import sys
from typing import Any

import structlog

from protkin import config

LOG_LEVEL = os.getenv("LOG_LEVEL", "warning")


def add_code_info(_: logging.Logger, __: str, event_dict: Any) -> dict[str, Any]:
    frame = inspect.currentframe()
    # walk out of structlog's own frames to the caller
    while frame is not None and (
        frame.f_globals.get("__name__", "").startswith(("structlog", "logging"))
        or frame.f_code.co_name == "add_code_info"
    ):
        frame = frame.f_back
    if frame is not None:
        event_dict["code_func"] = frame.f_code.co_name
        event_dict["code_line"] = frame.f_lineno
    return event_dict


def _renderer(json_output: bool) -> Any:
    if json_output:
        return structlog.processors.JSONRenderer()
    return structlog.dev.ConsoleRenderer(event_key="msg", colors=sys.stderr.isatty())


def configure(level: str = LOG_LEVEL, json_output: bool = config.ENV == "prod") -> None:
    """Route structlog through stdlib logging on stderr; stdout carries results only."""
    logging.basicConfig(format="%(message)s", stream=sys.stderr, level=level.upper())
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.contextvars.merge_contextvars,
            structlog.stdlib.add_log_level,
            structlog.stdlib.add_logger_name,
            add_code_info,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.EventRenamer(to="msg"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            _renderer(json_output),
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )


configure()


def init(verbose: bool = False) -> None:
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
