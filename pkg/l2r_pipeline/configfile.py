# -*- coding: utf-8 -*-
"""Flat ``section.key = value`` configuration files.

Grammar (one entry per line)::

    # comment
    seed = 7
    track.radius_min = 60.0
    camera.road_color = 0.38, 0.38, 0.4

Keys are either a top-level field of :class:`PipelineConfig` or
``section.field``. Values are parsed according to the declared type of
the field; tuples are comma separated. Unknown keys and duplicates are
rejected.
"""
import dataclasses
import logging
import typing

from .configs import PipelineConfig
from .errors import ConfigError
from .utils import from_dict

logger = logging.getLogger(__name__)

_TRUE = ('true', 'yes', 'on', '1')
_FALSE = ('false', 'no', 'off', '0')


def _section_fields(dc_type):
    return {f.name: f for f in dataclasses.fields(dc_type)}


def _is_section(f):
    return dataclasses.is_dataclass(f.type)


def parse_value(raw, value_type, key='?'):
    """Parse a raw string according to a field type.

    :param raw: the text after ``=``
    :param value_type: int, float, bool, str or tuple[...]
    :param key: the key, used in error messages
    :raises ConfigError: if the text does not parse
    """
    raw = raw.strip()
    try:
        if value_type is bool:
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(raw)
        if value_type is int:
            return int(raw)
        if value_type is float:
            return float(raw)
        if value_type is str:
            return raw
        if typing.get_origin(value_type) is tuple:
            item_type = typing.get_args(value_type)[0]
            if not raw:
                return ()
            return tuple(parse_value(item, item_type, key) for item in raw.split(','))
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} as {getattr(value_type, '__name__', value_type)} for '{key}'")
    raise ConfigError(f"unsupported field type {value_type!r} for '{key}'")


def _parse_line_value(raw, value_type, key, number):
    try:
        return parse_value(raw, value_type, key)
    except ConfigError as e:
        raise ConfigError(str(e), number) from None


def format_value(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ', '.join(format_value(v) for v in value)
    return str(value)


def parse_config_text(text):
    """Parse configuration text into a :class:`PipelineConfig`.

    :type text: str
    :rtype: PipelineConfig
    """
    top = _section_fields(PipelineConfig)
    values = {}
    sections = {name: {} for name, f in top.items() if _is_section(f)}
    seen = set()

    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            continue
        if '=' not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", number)
        key, raw = stripped.split('=', 1)
        key = key.strip()
        if key in seen:
            raise ConfigError(f"duplicate key '{key}'", number)
        seen.add(key)

        if '.' in key:
            section, name = key.split('.', 1)
            if section not in sections:
                raise ConfigError(f"unknown section '{section}'", number)
            fields_ = _section_fields(top[section].type)
            if name not in fields_:
                raise ConfigError(f"unknown key '{key}'", number)
            sections[section][name] = _parse_line_value(raw, fields_[name].type, key, number)
        else:
            if key not in top or _is_section(top[key]):
                raise ConfigError(f"unknown key '{key}'", number)
            values[key] = _parse_line_value(raw, top[key].type, key, number)

    for name, data in sections.items():
        values[name] = from_dict(top[name].type, data)
    return from_dict(PipelineConfig, values)


def load_config(path):
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}")
    logger.debug("loaded config %s", path)
    return parse_config_text(text)


def section_lines(cfg, section):
    """Dump one section (or a top-level key) as ``key = value`` lines."""
    value = getattr(cfg, section)
    if dataclasses.is_dataclass(value):
        return [f"{section}.{f.name} = {format_value(getattr(value, f.name))}"
                for f in dataclasses.fields(value)]
    return [f"{section} = {format_value(value)}"]


def dump_config(cfg):
    """Serialize a :class:`PipelineConfig`; ``parse_config_text`` inverts it exactly."""
    lines = ['# l2r-pipeline configuration']
    top = [f for f in dataclasses.fields(cfg) if not _is_section(f)]
    for f in top:
        lines.extend(section_lines(cfg, f.name))
    for f in dataclasses.fields(cfg):
        if _is_section(f):
            lines.append('')
            lines.extend(section_lines(cfg, f.name))
    return '\n'.join(lines) + '\n'


def save_config(cfg, path):
    with open(path, 'w', encoding='utf-8') as f:
        f.write(dump_config(cfg))
