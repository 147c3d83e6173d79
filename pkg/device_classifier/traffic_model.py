"""
Core packet, stream and category data model.

Models:
- PacketRecord: header metadata of one captured packet
- DeviceStream: the time-ordered packets seen for one MAC address
- DeviceCategory: a semantic device label (Hubs, Cameras, ...)
- PacketClass: the (kind, direction) pair every packet of a stream is assigned

Streams keep their packets in a columnar pandas frame so that captures with millions
of rows stay cheap; ``records`` materializes PacketRecord objects on demand.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import FrozenSet, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .exceptions import ConfigurationError, MacAddressError, RecordMismatchError
from .textfiles import read_token_list

logger = logging.getLogger(__name__)

RECORD_COLUMNS = ('timestamp', 'length', 'protocol', 'eth_src', 'eth_dst', 'info')

DEFAULT_CONTROL_PROTOCOLS: FrozenSet[str] = frozenset(
    {'ICMP', 'ARP', 'DNS', 'NTP', 'DHCP', 'MDNS', 'ICMPV6', 'IGMP'}
)

_MAC_HEX = re.compile(r'^[0-9a-f]{12}$')


def normalize_mac(value: str) -> str:
    """
    Normalize a MAC address to lower-case, colon-separated form.

    Accepts ``:``, ``-`` or ``.`` separators, or twelve bare hex digits.

    Raises:
        MacAddressError: if the value is not a 6-byte MAC address
    """
    digits = re.sub(r'[:\-.]', '', str(value).strip().lower())
    if not _MAC_HEX.match(digits):
        raise MacAddressError(f"Invalid MAC address: '{value}'")
    return ':'.join(digits[i:i + 2] for i in range(0, 12, 2))


def normalize_protocol(label: str) -> str:
    """Protocol labels compare case-insensitively after trimming whitespace."""
    return str(label).strip().upper()


def load_control_protocols(path: Optional[Union[str, Path]] = None) -> FrozenSet[str]:
    """Load a one-label-per-line control-protocol set, or the embedded default."""
    if path is None:
        return DEFAULT_CONTROL_PROTOCOLS
    labels = frozenset(normalize_protocol(label) for label in read_token_list(path))
    if not labels:
        raise ConfigurationError(f"Control protocol file {path} lists no labels")
    logger.info(f"Loaded {len(labels)} control protocol labels from {path}")
    return labels


class PacketKind(str, Enum):
    USER = 'User'
    CONTROL = 'Control'


class Direction(str, Enum):
    RECEIVED = 'Received'
    TRANSMITTED = 'Transmitted'


@dataclass(frozen=True)
class PacketClass:
    kind: PacketKind
    direction: Direction


@dataclass(frozen=True)
class PacketRecord:
    """
    Header metadata of one captured packet.

    Attributes:
        timestamp: seconds since the capture epoch
        length: frame length in bytes
        protocol: protocol label as written by the capture tool
        eth_src: source MAC address (normalized)
        eth_dst: destination MAC address (normalized)
        info: any other captured text, kept but never interpreted
    """

    timestamp: float
    length: int
    protocol: str
    eth_src: str
    eth_dst: str
    info: str = ''

    def __post_init__(self):
        if not math.isfinite(self.timestamp) or self.timestamp < 0:
            raise ValueError(f"Packet timestamp must be a finite value >= 0, got {self.timestamp}")
        if self.length < 0:
            raise ValueError(f"Packet length must be >= 0, got {self.length}")
        object.__setattr__(self, 'eth_src', normalize_mac(self.eth_src))
        object.__setattr__(self, 'eth_dst', normalize_mac(self.eth_dst))


@dataclass(frozen=True)
class DeviceCategory:
    id: int
    name: str


def validate_category_ids(categories: Iterable[DeviceCategory]) -> None:
    """Category ids of one label set must be exactly 1..n."""
    ids = sorted(category.id for category in categories)
    if ids != list(range(1, len(ids) + 1)):
        raise ConfigurationError(f"Category ids must be contiguous from 1, got {ids}")


def classify_packet(
    record: PacketRecord,
    device_mac: str,
    control_protocols: FrozenSet[str] = DEFAULT_CONTROL_PROTOCOLS,
) -> PacketClass:
    """
    Assign a packet its user/control kind and its direction relative to a device.

    Raises:
        RecordMismatchError: if neither MAC of the record is the device's
    """
    mac = normalize_mac(device_mac)
    if record.eth_src == mac:
        direction = Direction.TRANSMITTED
    elif record.eth_dst == mac:
        direction = Direction.RECEIVED
    else:
        raise RecordMismatchError(
            f"Record {record.eth_src} -> {record.eth_dst} does not involve device {mac}"
        )
    if normalize_protocol(record.protocol) in control_protocols:
        kind = PacketKind.CONTROL
    else:
        kind = PacketKind.USER
    return PacketClass(kind, direction)


def packet_class_masks(
    frame: pd.DataFrame,
    device_mac: str,
    control_protocols: FrozenSet[str] = DEFAULT_CONTROL_PROTOCOLS,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Column-wise classify_packet for a frame already filtered to one device.

    Returns:
        (is_control, is_transmitted) boolean arrays
    """
    protocols = frame['protocol'].astype(str).str.strip().str.upper()
    is_control = protocols.isin(control_protocols).to_numpy()
    is_transmitted = (frame['eth_src'] == device_mac).to_numpy()
    return is_control, is_transmitted


def records_to_frame(records: Iterable[PacketRecord]) -> pd.DataFrame:
    rows = [
        (r.timestamp, r.length, r.protocol, r.eth_src, r.eth_dst, r.info)
        for r in records
    ]
    return make_record_frame(rows)


def make_record_frame(rows: Union[Sequence[tuple], dict, None] = None) -> pd.DataFrame:
    """Build a frame with the canonical record columns and dtypes."""
    if isinstance(rows, dict):
        frame = pd.DataFrame(rows, columns=list(RECORD_COLUMNS))
    else:
        frame = pd.DataFrame(list(rows or []), columns=list(RECORD_COLUMNS))
    return frame.astype({
        'timestamp': 'float64',
        'length': 'int64',
        'protocol': 'object',
        'eth_src': 'object',
        'eth_dst': 'object',
        'info': 'object',
    })


def frame_to_records(frame: pd.DataFrame) -> Tuple[PacketRecord, ...]:
    return tuple(
        PacketRecord(float(ts), int(length), proto, src, dst, info)
        for ts, length, proto, src, dst, info in frame[list(RECORD_COLUMNS)].itertuples(
            index=False, name=None
        )
    )


@dataclass(frozen=True, eq=False)
class DeviceStream:
    """
    Time-ordered packet records for a single MAC address.

    Equal timestamps are allowed; their original order is kept.
    """

    device_mac: str
    frame: pd.DataFrame

    def __post_init__(self):
        object.__setattr__(self, 'device_mac', normalize_mac(self.device_mac))
        frame = self.frame.reset_index(drop=True)
        timestamps = frame['timestamp'].to_numpy()
        if len(timestamps) > 1 and np.any(np.diff(timestamps) < 0):
            raise ValueError(f"Stream {self.device_mac} is not ordered by timestamp")
        belongs = (frame['eth_src'] == self.device_mac) | (frame['eth_dst'] == self.device_mac)
        if not belongs.all():
            raise RecordMismatchError(
                f"Stream {self.device_mac} holds {int((~belongs).sum())} records of other devices"
            )
        object.__setattr__(self, 'frame', frame)

    @classmethod
    def from_records(cls, device_mac: str, records: Iterable[PacketRecord]) -> 'DeviceStream':
        return cls(device_mac, records_to_frame(records))

    @property
    def records(self) -> Tuple[PacketRecord, ...]:
        return frame_to_records(self.frame)

    @property
    def timestamps(self) -> np.ndarray:
        return self.frame['timestamp'].to_numpy(dtype=np.float64)

    def __len__(self) -> int:
        return len(self.frame)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DeviceStream):
            return NotImplemented
        return self.device_mac == other.device_mac and self.records == other.records

    def __repr__(self) -> str:
        return f"DeviceStream({self.device_mac}, {len(self)} records)"
