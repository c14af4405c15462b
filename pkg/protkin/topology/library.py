import os
from functools import lru_cache

import structlog

from protkin.structio.text import read_text
from protkin.topology.models import TopologyLibrary
from protkin.topology.parser import parse_topology

log = structlog.get_logger(__name__)

DEFAULT_TOPOLOGY_FILE = os.path.join(
    os.path.dirname(os.path.abspath(__file__)), "data", "default.top"
)


def read_topology_file(path: str) -> TopologyLibrary:
    text = read_text(path)
    log.debug("reading topology", path=path)
    return parse_topology(text)


@lru_cache(maxsize=1)
def load_default_library() -> TopologyLibrary:
    """The bundled ideal-geometry library for the 20 standard amino acids."""
    return read_topology_file(DEFAULT_TOPOLOGY_FILE)
