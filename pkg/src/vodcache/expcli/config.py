"""Flat ``key=value`` configuration files.

One key per line, ``#`` starts a comment. Keys are the field names of
:class:`~vodcache.cachesim.SimConfig`; anything left out keeps its default
(n=1000, m=20, beta=0.8, kappa=0.8, p_cont=0.4, gamma=1, u=1,
cache_size=200, r=1, alpha=1.0, p_in=p_out=0.4, graph_mode=ba,
weight_mode=distance, horizon=1e5, seed=0, warmup=0).
"""
from dataclasses import asdict, fields

from ..cachesim import ConfigError, SimConfig

_TYPES = {f.name: f.type for f in fields(SimConfig)}
_CASTS = {"int": int, "float": float, "str": str, int: int, float: float, str: str}


def coerce(key, value):
    if key not in _TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    cast = _CASTS[_TYPES[key]]
    try:
        if cast is int:
            f = float(value)
            if f != int(f):
                raise ValueError
            return int(f)
        return cast(value)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def parse_config_text(text):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = coerce(key, value)
    return values


def load_config(path):
    with open(path) as fh:
        return parse_config_text(fh.read())


def make_config(base=None, **overrides):
    values = asdict(base) if base is not None else {}
    values.update({k: coerce(k, v) if isinstance(v, str) else v for k, v in overrides.items()})
    return SimConfig(**values)


def format_config(config):
    return "".join(f"{k}={v}\n" for k, v in asdict(config).items())
