"""
Capture-export parsing and per-device stream separation.

Provides:
- parse_capture: read a packet-analyzer CSV export into a CaptureFile
- write_capture: the inverse, used for synthetic captures and round-trips
- separate_streams: split a capture into one DeviceStream per listed MAC
- write_streams / load_streams: the on-disk stream directory (one file per MAC)
- load_device_list / write_device_list: the ``MAC,category_id,device_name`` registry file
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd

from .exceptions import CaptureFormatError, ConfigurationError, MacAddressError, ParameterError
from .traffic_model import (
    DeviceCategory,
    DeviceStream,
    PacketRecord,
    frame_to_records,
    make_record_frame,
    normalize_mac,
    records_to_frame,
    validate_category_ids,
)
from .textfiles import iter_content_lines

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

REQUIRED_COLUMNS = ('time', 'length', 'protocol', 'eth.src', 'eth.dst')

# tshark -T fields and underscore spellings of the required columns
COLUMN_ALIASES = {
    'timestamp': 'time',
    'frame.time_relative': 'time',
    'frame.len': 'length',
    'len': 'length',
    '_ws.col.protocol': 'protocol',
    'eth_src': 'eth.src',
    'eth_dst': 'eth.dst',
}

# row counters written by capture tools carry no packet information
IGNORED_COLUMNS = frozenset({'no', 'no.'})

OUTPUT_HEADER = ('no', 'time', 'protocol', 'length', 'eth.src', 'eth.dst', 'info')

MAX_LOGGED_WARNINGS = 20
DEFAULT_CHUNK_SIZE = 50000


@dataclass(frozen=True)
class ParseWarning:
    line: int
    reason: str


@dataclass(frozen=True, eq=False)
class CaptureFile:
    """
    A parsed capture: the mixed, time-ordered traffic flow of every device.

    Attributes:
        path: where the capture was read from (None for generated captures)
        frame: records in file order, RECORD_COLUMNS layout
        parse_warnings: rows that were skipped, with their line number
    """

    path: Optional[Path]
    frame: pd.DataFrame
    parse_warnings: Tuple[ParseWarning, ...] = field(default_factory=tuple)

    @property
    def records(self) -> Tuple[PacketRecord, ...]:
        return frame_to_records(self.frame)

    @property
    def total_rows(self) -> int:
        return len(self.frame) + len(self.parse_warnings)

    def __len__(self) -> int:
        return len(self.frame)


@dataclass(frozen=True)
class DeviceEntry:
    mac: str
    category_id: int
    name: str
    category_name: Optional[str] = None


def _canonical_column(name: str) -> str:
    key = name.strip().lower()
    return COLUMN_ALIASES.get(key, key)


def _sniff_delimiter(header_line: str) -> str:
    if '\t' in header_line and ',' not in header_line:
        return '\t'
    if ';' in header_line and ',' not in header_line:
        return ';'
    return ','


def _is_utf8(row: List[str]) -> bool:
    # undecodable bytes arrive as lone surrogates under errors='surrogateescape'
    try:
        for value in row:
            value.encode('utf-8')
    except UnicodeEncodeError:
        return False
    return True


def _normalize_mac_column(values: pd.Series) -> Tuple[pd.Series, np.ndarray]:
    """Vectorized normalize_mac; returns (normalized, valid mask)."""
    digits = values.str.strip().str.lower().str.replace(r'[:\-.]', '', regex=True)
    valid = digits.str.fullmatch(r'[0-9a-f]{12}').fillna(False).to_numpy(dtype=bool)
    normalized = digits.str.replace(r'(..)(?!$)', r'\1:', regex=True)
    return normalized, valid


def _convert_chunk(
    rows: List[List[str]],
    lines: List[int],
    positions: Dict[str, int],
    extra_positions: List[int],
) -> Tuple[pd.DataFrame, List[ParseWarning]]:
    """Validate and convert one chunk of raw string rows."""
    raw = pd.DataFrame(
        {name: [row[pos] for row in rows] for name, pos in positions.items()}
    )
    if extra_positions:
        info = pd.Series([','.join(row[p] for p in extra_positions) for row in rows], dtype=object)
    else:
        info = pd.Series([''] * len(rows), dtype=object)
    line_numbers = np.asarray(lines)

    timestamps = pd.to_numeric(raw['time'].str.strip(), errors='coerce').to_numpy(dtype=np.float64)
    lengths = pd.to_numeric(raw['length'].str.strip(), errors='coerce').to_numpy(dtype=np.float64)
    protocols = raw['protocol'].str.strip()
    src, src_ok = _normalize_mac_column(raw['eth.src'])
    dst, dst_ok = _normalize_mac_column(raw['eth.dst'])

    reasons = np.full(len(rows), '', dtype=object)
    checks = [
        (~np.isfinite(timestamps), 'non-numeric timestamp'),
        (np.isfinite(timestamps) & (timestamps < 0), 'negative timestamp'),
        (~np.isfinite(lengths), 'non-numeric length'),
        (np.isfinite(lengths) & ((lengths < 0) | (lengths != np.floor(lengths))),
         'length is not a non-negative integer'),
        ((protocols == '').to_numpy(), 'empty protocol'),
        (~src_ok, 'invalid eth.src'),
        (~dst_ok, 'invalid eth.dst'),
    ]
    for mask, reason in checks:
        reasons[(reasons == '') & mask] = reason
    bad = reasons != ''

    warnings = [ParseWarning(int(line), str(reason))
                for line, reason in zip(line_numbers[bad], reasons[bad])]
    good = ~bad
    frame = make_record_frame({
        'timestamp': timestamps[good],
        'length': lengths[good].astype(np.int64),
        'protocol': protocols[good].to_numpy(),
        'eth_src': src[good].to_numpy(),
        'eth_dst': dst[good].to_numpy(),
        'info': info[good].to_numpy(),
    })
    return frame, warnings


def parse_capture(path: PathLike, chunk_size: int = DEFAULT_CHUNK_SIZE) -> CaptureFile:
    """
    Parse a delimited capture export into PacketRecords.

    The header must name at least time, length, protocol, eth.src and eth.dst
    (case-insensitive); every other column is kept, comma-joined, as ``info``.
    Malformed rows, including rows that are not valid UTF-8, are skipped and
    recorded as warnings with their line number.

    Raises:
        OSError: if the file cannot be read
        CaptureFormatError: if a required column is missing
    """
    path = Path(path)
    frames: List[pd.DataFrame] = []
    warnings: List[ParseWarning] = []

    with open(path, 'r', encoding='utf-8', errors='surrogateescape', newline='') as f:
        header_line = f.readline()
        delimiter = _sniff_delimiter(header_line)
        header = next(csv.reader([header_line], delimiter=delimiter), [])
        canonical = [_canonical_column(name) for name in header]
        for column in REQUIRED_COLUMNS:
            if column not in canonical:
                raise CaptureFormatError(column, path)
        positions = {column: canonical.index(column) for column in REQUIRED_COLUMNS}
        extra_positions = [
            i for i in range(len(header))
            if i not in positions.values() and canonical[i] not in IGNORED_COLUMNS
        ]
        width = len(header)

        reader = csv.reader(f, delimiter=delimiter)
        rows: List[List[str]] = []
        lines: List[int] = []
        for row in reader:
            # header consumed one physical line before the reader started
            line = reader.line_num + 1
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != width:
                warnings.append(ParseWarning(line, f"expected {width} fields, got {len(row)}"))
                continue
            if not _is_utf8(row):
                warnings.append(ParseWarning(line, 'invalid UTF-8'))
                continue
            rows.append(row)
            lines.append(line)
            if len(rows) >= chunk_size:
                frame, chunk_warnings = _convert_chunk(rows, lines, positions, extra_positions)
                frames.append(frame)
                warnings.extend(chunk_warnings)
                rows, lines = [], []
        if rows:
            frame, chunk_warnings = _convert_chunk(rows, lines, positions, extra_positions)
            frames.append(frame)
            warnings.extend(chunk_warnings)

    frame = pd.concat(frames, ignore_index=True) if frames else make_record_frame()
    warnings.sort(key=lambda w: w.line)

    for warning in warnings[:MAX_LOGGED_WARNINGS]:
        logger.warning(f"{path}:{warning.line}: skipped row ({warning.reason})")
    if len(warnings) > MAX_LOGGED_WARNINGS:
        logger.warning(f"{path}: {len(warnings) - MAX_LOGGED_WARNINGS} more rows skipped")
    logger.info(f"Parsed {path}: {len(frame)} records, {len(warnings)} warnings")

    return CaptureFile(path, frame, tuple(warnings))


def capture_from_records(records: Iterable[PacketRecord], path: Optional[PathLike] = None) -> CaptureFile:
    return CaptureFile(Path(path) if path else None, records_to_frame(records), ())


def write_capture(capture: Union[CaptureFile, pd.DataFrame], path: PathLike) -> Path:
    """Write records in the canonical export layout; floats keep full precision."""
    frame = capture.frame if isinstance(capture, CaptureFile) else capture
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = pd.DataFrame({
        'no': np.arange(1, len(frame) + 1),
        'time': frame['timestamp'].to_numpy(dtype=np.float64),
        'protocol': frame['protocol'].to_numpy(),
        'length': frame['length'].to_numpy(dtype=np.int64),
        'eth.src': frame['eth_src'].to_numpy(),
        'eth.dst': frame['eth_dst'].to_numpy(),
        'info': frame['info'].to_numpy(),
    }, columns=list(OUTPUT_HEADER))
    out.to_csv(path, index=False, float_format='%.17g', lineterminator='\n')
    return path


def separate_streams(capture: CaptureFile, device_macs: Iterable[str]) -> Dict[str, DeviceStream]:
    """
    Split a capture into one stream per listed MAC.

    A record appears in stream m iff its eth.src or eth.dst is m; records matching
    two listed MACs appear in both streams; records matching none are dropped and
    their count logged.
    """
    macs = sorted({normalize_mac(mac) for mac in device_macs})
    if not macs:
        raise ParameterError("separate_streams needs at least one device MAC")

    frame = capture.frame
    src = frame['eth_src'].to_numpy()
    dst = frame['eth_dst'].to_numpy()
    matched_any = np.zeros(len(frame), dtype=bool)
    streams: Dict[str, DeviceStream] = {}

    for mac in macs:
        mask = (src == mac) | (dst == mac)
        matched_any |= mask
        stream_frame = frame.loc[mask]
        if len(stream_frame) > 1 and np.any(np.diff(stream_frame['timestamp'].to_numpy()) < 0):
            stream_frame = stream_frame.sort_values('timestamp', kind='stable')
        streams[mac] = DeviceStream(mac, stream_frame)

    unmatched = int((~matched_any).sum())
    logger.info(
        f"Separated {len(frame)} records into {len(streams)} device streams; "
        f"{unmatched} records matched no listed device"
    )
    return streams


def stream_filename(mac: str) -> str:
    return normalize_mac(mac).replace(':', '-') + '.csv'


def write_streams(streams: Mapping[str, DeviceStream], out_dir: PathLike) -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [write_capture(stream.frame, out_dir / stream_filename(mac))
             for mac, stream in sorted(streams.items())]
    logger.info(f"Wrote {len(paths)} stream files to {out_dir}")
    return paths


def load_streams(stream_dir: PathLike) -> Dict[str, DeviceStream]:
    """Read a directory written by write_streams; the MAC comes from each file name."""
    streams: Dict[str, DeviceStream] = {}
    for path in sorted(Path(stream_dir).glob('*.csv')):
        try:
            mac = normalize_mac(path.stem)
        except MacAddressError:
            logger.warning(f"Ignoring {path}: file name is not a MAC address")
            continue
        capture = parse_capture(path)
        streams[mac] = DeviceStream(mac, capture.frame)
    if not streams:
        raise ConfigurationError(f"No stream files found in {stream_dir}")
    return streams


def load_device_list(path: PathLike) -> List[DeviceEntry]:
    """
    Read ``MAC,category_id,device_name[,category_name]`` lines.

    A leading header line whose first field is not a MAC is skipped.
    """
    entries: List[DeviceEntry] = []
    seen = set()
    header_allowed = True
    for lineno, text in iter_content_lines(path):
        fields = [part.strip() for part in next(csv.reader([text]))]
        try:
            mac = normalize_mac(fields[0])
        except MacAddressError:
            if header_allowed:
                header_allowed = False
                continue
            raise ConfigurationError(f"{path}:{lineno}: invalid MAC '{fields[0]}'")
        header_allowed = False
        if len(fields) < 3:
            raise ConfigurationError(f"{path}:{lineno}: expected MAC,category_id,device_name")
        try:
            category_id = int(fields[1])
        except ValueError:
            raise ConfigurationError(f"{path}:{lineno}: category id '{fields[1]}' is not an integer")
        if mac in seen:
            raise ConfigurationError(f"{path}:{lineno}: duplicate device {mac}")
        seen.add(mac)
        category_name = fields[3] if len(fields) > 3 and fields[3] else None
        entries.append(DeviceEntry(mac, category_id, fields[2], category_name))
    if not entries:
        raise ConfigurationError(f"Device list {path} is empty")
    validate_category_ids(categories_of(entries))
    return entries


def categories_of(entries: Iterable[DeviceEntry]) -> List[DeviceCategory]:
    names: Dict[int, str] = {}
    for entry in entries:
        names.setdefault(entry.category_id, entry.category_name or f"Category {entry.category_id}")
    return [DeviceCategory(cid, names[cid]) for cid in sorted(names)]


def write_device_list(entries: Iterable[DeviceEntry], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['mac', 'category_id', 'device_name', 'category_name'])
        for entry in entries:
            writer.writerow([entry.mac, entry.category_id, entry.name, entry.category_name or ''])
    return path
