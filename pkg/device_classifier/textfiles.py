"""
Readers for the small flat-text files the pipeline is driven by.

Four formats share one lexical convention (``#`` starts a comment, blank lines are
ignored, surrounding whitespace is trimmed):

- one-token-per-line lists (control-protocol label sets, feature-name lists)
- ``key = value`` files (classifier configs)
- sectioned files, where ``[name]`` or ``[kind argument]`` opens a section
  (split files, synthetic scenarios)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple, Union

from .exceptions import ConfigurationError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass
class Section:
    """One ``[kind argument]`` block of a sectioned file."""

    kind: str
    argument: Optional[str]
    start_line: int
    lines: List[Tuple[int, str]] = field(default_factory=list)

    def key_values(self, path: PathLike = '') -> Dict[str, str]:
        return dict(_split_key_value(text, lineno, path) for lineno, text in self.lines)


def iter_content_lines(path: PathLike) -> Iterator[Tuple[int, str]]:
    """Yield ``(line_number, text)`` for every non-blank, non-comment line."""
    with open(path, 'r', encoding='utf-8') as f:
        for lineno, raw in enumerate(f, start=1):
            text = raw.split('#', 1)[0].strip()
            if text:
                yield lineno, text


def read_token_list(path: PathLike) -> List[str]:
    return [text for _, text in iter_content_lines(path)]


def _split_key_value(text: str, lineno: int, path: PathLike) -> Tuple[str, str]:
    if '=' not in text:
        raise ConfigurationError(f"{path}:{lineno}: expected 'key = value', got '{text}'")
    key, value = text.split('=', 1)
    key = key.strip().lower()
    if not key:
        raise ConfigurationError(f"{path}:{lineno}: empty key")
    return key, value.strip()


def read_key_values(path: PathLike) -> Dict[str, str]:
    """Read a flat ``key = value`` file; duplicate keys are an error."""
    values: Dict[str, str] = {}
    for lineno, text in iter_content_lines(path):
        key, value = _split_key_value(text, lineno, path)
        if key in values:
            raise ConfigurationError(f"{path}:{lineno}: duplicate key '{key}'")
        values[key] = value
    return values


def read_sections(path: PathLike) -> List[Section]:
    """Split a file into ``[kind argument]`` sections; content before the first header is an error."""
    sections: List[Section] = []
    for lineno, text in iter_content_lines(path):
        if text.startswith('[') and text.endswith(']'):
            header = text[1:-1].strip()
            if not header:
                raise ConfigurationError(f"{path}:{lineno}: empty section header")
            kind, _, argument = header.partition(' ')
            sections.append(Section(kind.lower(), argument.strip() or None, lineno))
            continue
        if not sections:
            raise ConfigurationError(f"{path}:{lineno}: content before the first section header")
        sections[-1].lines.append((lineno, text))
    logger.debug(f"Read {len(sections)} sections from {path}")
    return sections
