"""One-button self-tracking pipeline.

A simulated wearable button captures momentary observations into a bounded
buffer, a store-and-forward protocol syncs them to a host exactly once over
an unreliable link, a decoder turns press bursts into observations, and
analytics summarize the stream for review: hourly distribution, weekday box
statistics, and an annotated daily timeline.
"""

from .model import (
    Annotation,
    DatasetConfig,
    DomainError,
    Observation,
    RawPress,
    Weekday,
    local_parts,
    validate_press_stream,
)
from .decoder import decode
from .device import ButtonDevice
from .link import LinkSchedule, run_session
from .protocol import SyncAck, SyncBatch, SyncHost, map_to_wall
from .store import EventStore

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "ButtonDevice",
    "DatasetConfig",
    "DomainError",
    "EventStore",
    "LinkSchedule",
    "Observation",
    "RawPress",
    "SyncAck",
    "SyncBatch",
    "SyncHost",
    "Weekday",
    "decode",
    "local_parts",
    "map_to_wall",
    "run_session",
    "validate_press_stream",
    "__version__",
]
