import logging
import sys

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def configure_logging(level: str = "INFO") -> None:
    """Route every smogcast logger to stderr; result files never see log lines"""
    root = logging.getLogger("smogcast")
    root.setLevel(level.upper())
    if not any(getattr(h, "_smogcast", False) for h in root.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._smogcast = True  # type: ignore[attr-defined]
        root.addHandler(handler)
