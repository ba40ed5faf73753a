"""Run configuration: plain-text `key = value` files with YAML-parsed values.

Example::

    network = {kind: lattice, width: 11, height: 11}
    psi = {kind: exponential, rate: 0.3}
    phi = {kind: exponential, rate: 0.001}
    mapping = mean-field
    sampler = independent
    n_samples = 10000
    master_seed = 42

Every key can also be supplied on the command line as ``--key value`` with
the same YAML value syntax; command-line values win over the file. Each run
writes the fully resolved configuration next to its outputs so it can be
replayed byte for byte.
"""

from __future__ import annotations

import os

import numpy as np
import yaml

from . import distributions
from .errors import ConfigError
from .graphs import StaticNetwork, generate_graph, load_edge_list
from .mapping import EXACT, MEAN_FIELD, MappingSpec

GLOBAL_KEYS = ("network", "psi", "phi", "mapping", "sampler", "n_samples",
               "burn_in", "thinning", "master_seed", "workers", "output_dir",
               "json", "graph_seed")

COMMAND_KEYS = {
    "simulate": ("source", "time_grid"),
    "propagation": ("conditional", "n_bar"),
    "source-detect": ("snapshot", "evaluate", "true_source", "t_obs",
                      "n_realizations", "n_mc", "bandwidth"),
    "vaccinate": ("source", "t0", "delta_t", "m", "strategies", "n_trials",
                  "horizon", "top_m", "survival_samples", "paired"),
    "percolation": ("pnk_n", "comparison", "source", "time_grid"),
    "scaling": ("sizes", "mean_degree", "weights", "n_instances"),
    "generate-graph": (),
}

_DEFAULTS = {
    "mapping": EXACT,
    "sampler": "independent",
    "n_samples": 10_000,
    "master_seed": 0,
    "workers": 1,
    "json": False,
    "graph_seed": 0,
}


def keys_for(command: str) -> tuple:
    return GLOBAL_KEYS + COMMAND_KEYS[command]


def parse_config_file(path) -> dict:
    """Read `key = value` lines; values are YAML, '#' starts a comment."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            try:
                out[key] = yaml.safe_load(value.strip())
            except yaml.YAMLError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return out


def resolve(command: str, file_values: dict | None, overrides: dict) -> dict:
    """Merge defaults, file values and command-line overrides; check key names."""
    known = set(keys_for(command))
    merged = dict(_DEFAULTS)
    for source_name, values in (("config file", file_values or {}),
                                ("command line", overrides)):
        for key, value in values.items():
            if key not in known:
                raise ConfigError(f"{source_name}: unknown key {key!r} for "
                                  f"command {command!r}")
            if value is not None:
                merged[key] = value
    merged.setdefault("output_dir", os.environ.get("TEMPOMAP_OUTDIR", "."))
    return merged


def dump_resolved(cfg: dict, path) -> None:
    """Canonical resolved-config copy: sorted keys, YAML flow values."""
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(cfg):
            value = yaml.safe_dump(cfg[key], default_flow_style=True,
                                   width=10 ** 9).strip()
            if value.endswith("..."):
                value = value[:-3].strip()
            fh.write(f"{key} = {value}\n")


def _require(cfg: dict, key: str):
    if key not in cfg or cfg[key] is None:
        raise ConfigError(f"missing required key {key!r}")
    return cfg[key]


def _as_int(cfg: dict, key: str, minimum: int | None = None) -> int:
    value = _require(cfg, key)
    try:
        out = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None
    if minimum is not None and out < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}, got {out}")
    return out


def _as_float(cfg: dict, key: str, minimum: float | None = None) -> float:
    value = _require(cfg, key)
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None
    if minimum is not None and out < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}, got {out}")
    return out


def build_network_from(cfg: dict) -> StaticNetwork:
    net_spec = _require(cfg, "network")
    if not isinstance(net_spec, dict):
        raise ConfigError("network: expected a mapping with 'path' or 'kind'")
    if "path" in net_spec:
        return load_edge_list(net_spec["path"])
    if "kind" in net_spec:
        params = {k: v for k, v in net_spec.items() if k != "kind"}
        return generate_graph(net_spec["kind"], seed=int(cfg.get("graph_seed", 0)),
                              **params)
    raise ConfigError("network: needs either a 'path' or a generator 'kind'")


def build_mapping_spec(cfg: dict, require_psi: bool = True) -> MappingSpec:
    kind = cfg.get("mapping", EXACT)
    if kind not in (EXACT, MEAN_FIELD):
        raise ConfigError(f"mapping: expected '{EXACT}' or '{MEAN_FIELD}', got {kind!r}")
    psi_spec = cfg.get("psi")
    if psi_spec is None:
        if require_psi:
            raise ConfigError("missing required key 'psi' (transmission distribution)")
        psi = None
    else:
        psi = distributions.from_config(psi_spec, "psi")
    phi_spec = cfg.get("phi")
    phi = None if phi_spec is None else distributions.from_config(phi_spec, "phi")
    return MappingSpec(psi, phi, kind)


def parse_time_grid(cfg: dict, key: str = "time_grid") -> np.ndarray:
    raw = _require(cfg, key)
    if not isinstance(raw, (list, tuple)):
        raise ConfigError(f"{key}: expected a list of times")
    values = []
    for item in raw:
        if isinstance(item, str) and item.strip().lower() in ("inf", ".inf", "infinity"):
            values.append(np.inf)
        else:
            try:
                values.append(float(item))
            except (TypeError, ValueError):
                raise ConfigError(f"{key}: bad entry {item!r}") from None
    grid = np.asarray(values)
    if grid.size == 0 or np.any(np.diff(grid) < 0) or np.any(grid < 0):
        raise ConfigError(f"{key}: must be non-empty, non-negative and ascending")
    return grid


def source_id(cfg: dict, net: StaticNetwork, key: str = "source") -> int:
    value = _require(cfg, key)
    return net.id_of(str(value))


as_int = _as_int
as_float = _as_float
require = _require
