import structlog
from prometheus_client import CollectorRegistry, Gauge, Histogram, generate_latest

from protkin import config

log = structlog.get_logger(__name__)

_registry = CollectorRegistry()


def registry() -> CollectorRegistry:
    return _registry


Gauge(
    name="protkin_build_info",
    documentation="build information",
    labelnames=["version"],
    registry=registry(),
).labels(version=config.VERSION).set(1)

PASS_DURATION = Histogram(
    name="protkin_pass_duration_seconds",
    documentation="Duration of a single forward or backward pass over one batch item",
    labelnames=["op", "phase"],
    buckets=(1e-4, 5e-4, 1e-3, 5e-3, 1e-2, 5e-2, 0.1, 0.5, 1.0, 5.0),
    registry=registry(),
)


def write_metrics(path: str) -> None:
    data = generate_latest(registry())
    with open(path, "wb") as f:
        f.write(data)
    log.info("wrote metrics", path=path, size=len(data))
