"""
Synthetic multi-device captures for desk-scale end-to-end runs.

Each device category has an archetype: user and control packet rates, a two-state
(idle/active) burst modulator, a daily rate cycle, packet-length mixtures and
protocol mixes. Every device jitters its archetype by up to +/-20% so that devices
of one category differ, then draws per-minute Poisson packet counts from the
modulated rate and places packets uniformly inside each minute.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .exceptions import ConfigurationError, ParameterError
from .ingest import CaptureFile, DeviceEntry
from .textfiles import read_sections
from .traffic_model import (
    RECORD_COLUMNS,
    DeviceCategory,
    normalize_mac,
    normalize_protocol,
    validate_category_ids,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SCENARIO_DIR = Path(__file__).resolve().parent / 'scenarios'
MIN_LENGTH = 42
MAX_LENGTH = 1514
JITTER = 0.2
SECONDS_PER_DAY = 86400.0
DEFAULT_GATEWAY_MAC = '02:00:00:00:00:01'


@dataclass(frozen=True)
class LengthComponent:
    mean: float
    std: float
    weight: float


def _check_weights(name: str, weights: Sequence[float]) -> None:
    if not weights or any(w < 0 for w in weights) or not math.isclose(sum(weights), 1.0, abs_tol=1e-6):
        raise ParameterError(f"{name} weights must be >= 0 and sum to 1, got {list(weights)}")


@dataclass(frozen=True)
class CategoryArchetype:
    """
    Statistical profile of one device category.

    Rates are mean packets per minute. ``burstiness`` is the active/idle rate ratio of
    the burst modulator (1 disables it); the modulator is normalized so the long-run
    mean stays at ``user_rate``.
    """

    name: str
    user_rate: float
    control_rate: float
    user_lengths: Tuple[LengthComponent, ...]
    control_lengths: Tuple[LengthComponent, ...]
    user_protocols: Tuple[Tuple[str, float], ...]
    control_protocols: Tuple[Tuple[str, float], ...]
    burstiness: float = 1.0
    burst_on_mins: float = 10.0
    burst_off_mins: float = 30.0
    diurnal_amplitude: float = 0.0
    diurnal_peak_hour: float = 20.0
    transmit_ratio: float = 0.5

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.user_rate < 0 or self.control_rate < 0:
            raise ParameterError(f"{self.name}: packet rates must be >= 0")
        if self.burstiness < 1 or self.burst_on_mins <= 0 or self.burst_off_mins <= 0:
            raise ParameterError(f"{self.name}: burstiness must be >= 1 and holding times > 0")
        if not 0 <= self.diurnal_amplitude <= 1:
            raise ParameterError(f"{self.name}: diurnal amplitude must be in [0, 1]")
        if not 0 <= self.transmit_ratio <= 1:
            raise ParameterError(f"{self.name}: transmit ratio must be in [0, 1]")
        for label, mixture in (('user length', self.user_lengths), ('control length', self.control_lengths)):
            _check_weights(f"{self.name} {label}", [c.weight for c in mixture])
            if any(c.std < 0 for c in mixture):
                raise ParameterError(f"{self.name}: {label} std must be >= 0")
        for label, mix in (('user protocol', self.user_protocols), ('control protocol', self.control_protocols)):
            _check_weights(f"{self.name} {label}", [w for _, w in mix])

    def jittered(self, rng: np.random.Generator) -> 'CategoryArchetype':
        """A device-specific copy with rates, length means and transmit ratio scaled by U(0.8, 1.2)."""
        def scale() -> float:
            return float(rng.uniform(1.0 - JITTER, 1.0 + JITTER))

        return replace(
            self,
            user_rate=self.user_rate * scale(),
            control_rate=self.control_rate * scale(),
            user_lengths=tuple(replace(c, mean=c.mean * scale()) for c in self.user_lengths),
            control_lengths=tuple(replace(c, mean=c.mean * scale()) for c in self.control_lengths),
            transmit_ratio=min(1.0, self.transmit_ratio * scale()),
        )


@dataclass(frozen=True)
class SyntheticDeviceSpec:
    mac: str
    category_id: int
    archetype: CategoryArchetype
    perturbation_seed: int = 0
    name: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'mac', normalize_mac(self.mac))


@dataclass
class Scenario:
    categories: List[DeviceCategory]
    archetypes: Dict[int, CategoryArchetype]
    devices: List[SyntheticDeviceSpec]
    gateway_mac: str = DEFAULT_GATEWAY_MAC
    duration_days: float = 19.0
    seed: int = 0

    @property
    def labels(self) -> Dict[str, int]:
        return {device.mac: device.category_id for device in self.devices}

    def device_entries(self) -> List[DeviceEntry]:
        names = {category.id: category.name for category in self.categories}
        return [
            DeviceEntry(device.mac, device.category_id, device.name, names[device.category_id])
            for device in self.devices
        ]


def burst_modulator(rng: np.random.Generator, minutes: int, archetype: CategoryArchetype) -> np.ndarray:
    """
    Per-minute rate multiplier of a two-state idle/active process.

    Holding times are exponential with the archetype's means; multipliers are chosen
    so the stationary mean is 1 and active/idle = burstiness.
    """
    if archetype.burstiness == 1.0:
        return np.ones(minutes)
    p_on = archetype.burst_on_mins / (archetype.burst_on_mins + archetype.burst_off_mins)
    idle = 1.0 / (p_on * archetype.burstiness + (1.0 - p_on))
    active = archetype.burstiness * idle
    multiplier = np.empty(minutes)
    state_on = bool(rng.random() < p_on)
    position = 0
    while position < minutes:
        mean = archetype.burst_on_mins if state_on else archetype.burst_off_mins
        hold = max(1, int(round(rng.exponential(mean))))
        multiplier[position:position + hold] = active if state_on else idle
        position += hold
        state_on = not state_on
    return multiplier


def diurnal_profile(minute_starts: np.ndarray, amplitude: float, peak_hour: float) -> np.ndarray:
    """1 + A cos(phase) over the day, peaking at ``peak_hour``; mean 1 over whole days."""
    phase = 2.0 * np.pi * (minute_starts / SECONDS_PER_DAY - peak_hour / 24.0)
    return 1.0 + amplitude * np.cos(phase)


def sample_lengths(rng: np.random.Generator, mixture: Sequence[LengthComponent], n: int) -> np.ndarray:
    weights = np.array([c.weight for c in mixture])
    component = rng.choice(len(mixture), size=n, p=weights / weights.sum())
    means = np.array([c.mean for c in mixture])[component]
    stds = np.array([c.std for c in mixture])[component]
    lengths = np.rint(rng.normal(means, stds))
    return np.clip(lengths, MIN_LENGTH, MAX_LENGTH).astype(np.int64)


def _arrivals(
    rng: np.random.Generator, rate_per_min: np.ndarray, duration: float
) -> np.ndarray:
    """Sorted timestamps of per-minute Poisson counts placed uniformly inside each minute."""
    minutes = len(rate_per_min)
    starts = np.arange(minutes) * 60.0
    widths = np.minimum(60.0, duration - starts)
    counts = rng.poisson(rate_per_min * widths / 60.0)
    offsets = rng.random(int(counts.sum()))
    timestamps = np.repeat(starts, counts) + offsets * np.repeat(widths, counts)
    timestamps = np.minimum(timestamps, np.nextafter(duration, 0.0))
    return np.sort(timestamps, kind='stable')


def generate_device_frame(
    spec: SyntheticDeviceSpec, duration: float, seed: int, gateway_mac: str = DEFAULT_GATEWAY_MAC
) -> pd.DataFrame:
    """All packets of one device in RECORD_COLUMNS layout, time-ordered."""
    archetype = spec.archetype.jittered(np.random.default_rng([spec.perturbation_seed, spec.category_id]))
    rng = np.random.default_rng([seed, int(spec.mac.replace(':', ''), 16)])
    minutes = int(math.ceil(duration / 60.0))
    starts = np.arange(minutes) * 60.0
    diurnal = diurnal_profile(starts, archetype.diurnal_amplitude, archetype.diurnal_peak_hour)

    parts = []
    for kind, rate, modulator, lengths, protocols in (
        ('user', archetype.user_rate, burst_modulator(rng, minutes, archetype),
         archetype.user_lengths, archetype.user_protocols),
        ('control', archetype.control_rate, np.ones(minutes),
         archetype.control_lengths, archetype.control_protocols),
    ):
        timestamps = _arrivals(rng, rate * modulator * diurnal, duration)
        n = len(timestamps)
        labels = np.array([normalize_protocol(p) for p, _ in protocols])
        weights = np.array([w for _, w in protocols])
        transmitted = rng.random(n) < archetype.transmit_ratio
        parts.append(pd.DataFrame({
            'timestamp': timestamps,
            'length': sample_lengths(rng, lengths, n),
            'protocol': labels[rng.choice(len(labels), size=n, p=weights / weights.sum())],
            'eth_src': np.where(transmitted, spec.mac, gateway_mac),
            'eth_dst': np.where(transmitted, gateway_mac, spec.mac),
            'info': '',
        }))
        logger.debug(f"{spec.mac}: {n} {kind} packets")
    frame = pd.concat(parts, ignore_index=True).sort_values('timestamp', kind='stable')
    return frame.reset_index(drop=True)[list(RECORD_COLUMNS)]


def generate_capture(
    specs: Sequence[SyntheticDeviceSpec],
    duration: float,
    seed: int,
    gateway_mac: str = DEFAULT_GATEWAY_MAC,
) -> Tuple[CaptureFile, Dict[str, int]]:
    """
    A merged, time-ordered capture of every device plus its ground-truth labels.

    Raises:
        ParameterError: if duration <= 0, specs is empty or two specs share a MAC
    """
    if not (math.isfinite(duration) and duration > 0):
        raise ParameterError(f"Capture duration must be > 0 seconds, got {duration}")
    if not specs:
        raise ParameterError("generate_capture needs at least one device spec")
    macs = [spec.mac for spec in specs]
    gateway = normalize_mac(gateway_mac)
    if len(set(macs)) != len(macs) or gateway in macs:
        raise ParameterError("Synthetic device MACs must be unique and differ from the gateway")

    frames = [generate_device_frame(spec, duration, seed, gateway) for spec in specs]
    merged = pd.concat(frames, ignore_index=True).sort_values('timestamp', kind='stable')
    merged = merged.reset_index(drop=True)
    logger.info(
        f"Generated {len(merged)} packets for {len(specs)} devices over {duration / SECONDS_PER_DAY:.2f} days"
    )
    return CaptureFile(None, merged, ()), {spec.mac: spec.category_id for spec in specs}


def _parse_mixture(text: str, where: str) -> Tuple[LengthComponent, ...]:
    components = []
    for item in text.split(','):
        parts = item.strip().split(':')
        if len(parts) != 3:
            raise ConfigurationError(f"{where}: expected mean:std:weight, got '{item.strip()}'")
        components.append(LengthComponent(*(float(p) for p in parts)))
    return tuple(components)


def _parse_protocol_mix(text: str, where: str) -> Tuple[Tuple[str, float], ...]:
    mix = []
    for item in text.split(','):
        label, sep, weight = item.strip().partition(':')
        if not sep:
            raise ConfigurationError(f"{where}: expected PROTOCOL:weight, got '{item.strip()}'")
        mix.append((normalize_protocol(label), float(weight)))
    return tuple(mix)


ARCHETYPE_FLOATS = (
    'user_rate', 'control_rate', 'burstiness', 'burst_on_mins', 'burst_off_mins',
    'diurnal_amplitude', 'diurnal_peak_hour', 'transmit_ratio',
)


def load_scenario(path: PathLike) -> Scenario:
    """
    Read a scenario file.

    Sections: ``[settings]`` (gateway, duration_days, seed), one
    ``[archetype <name>]`` per category with its ``category`` id and parameters, and
    ``[devices]`` listing ``MAC category_id name [perturbation_seed]`` lines.

    Raises:
        ConfigurationError: on malformed content; ParameterError for invalid archetypes
    """
    path = Path(path)
    archetypes: Dict[int, CategoryArchetype] = {}
    categories: List[DeviceCategory] = []
    device_lines: List[Tuple[int, str]] = []
    settings: Dict[str, str] = {}
    for section in read_sections(path):
        where = f"{path}:{section.start_line}"
        if section.kind == 'settings':
            settings.update(section.key_values(path))
        elif section.kind == 'archetype':
            if not section.argument:
                raise ConfigurationError(f"{where}: archetype section needs a name")
            values = section.key_values(path)
            try:
                category_id = int(values.pop('category'))
                kwargs = {key: float(values.pop(key)) for key in ARCHETYPE_FLOATS if key in values}
                kwargs['user_lengths'] = _parse_mixture(values.pop('user_lengths'), where)
                kwargs['control_lengths'] = _parse_mixture(values.pop('control_lengths'), where)
                kwargs['user_protocols'] = _parse_protocol_mix(values.pop('user_protocols'), where)
                kwargs['control_protocols'] = _parse_protocol_mix(values.pop('control_protocols'), where)
            except KeyError as e:
                raise ConfigurationError(f"{where}: archetype '{section.argument}' is missing {e}") from e
            except ValueError as e:
                raise ConfigurationError(f"{where}: {e}") from e
            if values:
                raise ConfigurationError(f"{where}: unknown archetype keys {sorted(values)}")
            if 'user_rate' not in kwargs or 'control_rate' not in kwargs:
                raise ConfigurationError(f"{where}: archetype needs user_rate and control_rate")
            if category_id in archetypes:
                raise ConfigurationError(f"{where}: category {category_id} defined twice")
            archetypes[category_id] = CategoryArchetype(name=section.argument, **kwargs)
            categories.append(DeviceCategory(category_id, section.argument))
        elif section.kind == 'devices':
            device_lines.extend(section.lines)
        else:
            raise ConfigurationError(f"{where}: unknown section '{section.kind}'")

    categories.sort(key=lambda c: c.id)
    validate_category_ids(categories)
    devices: List[SyntheticDeviceSpec] = []
    for lineno, text in device_lines:
        parts = text.split()
        if len(parts) < 3:
            raise ConfigurationError(f"{path}:{lineno}: expected 'MAC category_id name [seed]'")
        try:
            category_id = int(parts[1])
            seed = int(parts[3]) if len(parts) > 3 else len(devices)
        except ValueError as e:
            raise ConfigurationError(f"{path}:{lineno}: {e}") from e
        if category_id not in archetypes:
            raise ConfigurationError(f"{path}:{lineno}: category {category_id} has no archetype")
        devices.append(SyntheticDeviceSpec(parts[0], category_id, archetypes[category_id], seed, parts[2]))
    if not devices:
        raise ConfigurationError(f"{path}: scenario lists no devices")

    try:
        scenario = Scenario(
            categories=categories,
            archetypes=archetypes,
            devices=devices,
            gateway_mac=normalize_mac(settings.get('gateway', DEFAULT_GATEWAY_MAC)),
            duration_days=float(settings.get('duration_days', 19)),
            seed=int(settings.get('seed', 0)),
        )
    except ValueError as e:
        raise ConfigurationError(f"{path}: bad [settings] value ({e})") from e
    logger.info(f"Loaded scenario {path.name}: {len(categories)} categories, {len(devices)} devices")
    return scenario


def bundled_scenario(name: str) -> Path:
    """Path of a scenario or split file shipped with the package, e.g. 'default.scenario'."""
    path = SCENARIO_DIR / name
    if not path.exists():
        raise ConfigurationError(f"No bundled file named '{name}' in {SCENARIO_DIR}")
    return path


def generate_scenario(
    scenario: Scenario, duration_days: Optional[float] = None, seed: Optional[int] = None
) -> Tuple[CaptureFile, Dict[str, int]]:
    days = scenario.duration_days if duration_days is None else duration_days
    return generate_capture(
        scenario.devices,
        days * SECONDS_PER_DAY,
        scenario.seed if seed is None else seed,
        scenario.gateway_mac,
    )
