"""Run configuration: INI-style sections of typed keys, unknown keys rejected.

Example::

    [run]
    experiment = pathwise-law
    seed = 7

    [law]
    laws = binary:0.25, geometric:2

    [sampling]
    replicas = 10000
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

from .laws import PercolatedLaw, PowerLaw, binary, geometric, window_probability


class ConfigError(ValueError):
    pass


def _floats(s):
    return [float(x) for x in str(s).split(",") if x.strip()]


def _ints(s):
    return [int(float(x)) for x in str(s).split(",") if x.strip()]


def _strs(s):
    return [x.strip() for x in str(s).split(",") if x.strip()]


def _laws(s):
    # law specs contain commas inside their parameter lists, so split on ';'
    # or on ', ' followed by a family name
    parts = [x.strip() for x in str(s).replace("\n", ";").split(";") if x.strip()]
    out = []
    for p in parts:
        chunks = [c.strip() for c in p.split(",")]
        cur = ""
        for c in chunks:
            if ":" in c and cur:
                out.append(cur)
                cur = c
            else:
                cur = f"{cur},{c}" if cur else c
        if cur:
            out.append(cur)
    return out


def _opt_float(s):
    s = str(s).strip().lower()
    return None if s in ("", "none", "auto") else float(s)


def _int(s):
    v = float(s)
    if v != int(v):
        raise ValueError(f"{s} is not an integer")
    return int(v)


# section -> key -> (parser, default, (lo, hi) or None)
SCHEMA = {
    "run": {
        "experiment": (str, None, None),
        "seed": (_int, 0, (0, 2**64 - 1)),
        "threads": (_int, 1, (1, 1024)),
    },
    "law": {
        "laws": (_laws, ["binary:0.25"], None),
    },
    "model": {
        "alpha": (float, 1.5, (1.0 + 1e-9, 2.0 - 1e-9)),
        "kmin": (_int, 2, (1, 10**6)),
        "c": (_opt_float, None, None),
        "lambda": (_floats, [0.0], None),
        "n": (_int, 100000, (1, 10**9)),
    },
    "sampling": {
        "paths": (_int, 1000, (1, 10**7)),
        "max_len": (_int, 200, (1, 10**7)),
        "trees": (_int, 100000, (1, 10**9)),
        "max_steps": (_int, 10**6, (0, 10**12)),
        "max_level": (_int, 64, (1, 10**9)),
        "pair_draws": (_int, 100000, (1, 10**9)),
        "replicas": (_int, 10000, (1, 10**9)),
        "batches": (_int, 3, (1, 1000)),
        "k_grid": (_ints, [50, 100, 200], None),
        "t": (float, 1.0, (0.0, 1e6)),
        "theta_grid": (_floats, [0.5, 1.0, 2.0], None),
        "outer_reps": (_int, 1000, (1, 10**9)),
        "inner_reps": (_int, 1000, (1, 10**9)),
        "delta": (float, 1.0, (0.0, 1e6)),
        "n_grid": (_ints, [1000, 10000, 100000], None),
        "order_draws": (_int, 100000, (1, 10**9)),
        "pair_runs": (_int, 100000, (1, 10**9)),
        "explore_n": (_int, 10000, (1, 10**9)),
        "explore_runs": (_int, 100, (1, 10**9)),
        "height_replicas": (_int, 0, (0, 10**9)),
        "height_seeds": (_int, 5, (1, 1000)),
        "height_n": (_ints, [10000, 40000], None),
        "height_lambda": (float, 1.0, None),
    },
    "thresholds": {
        "z": (float, 3.0, (0.0, 100.0)),
        "ks_p": (float, 0.01, (0.0, 1.0)),
        "ks_batches_required": (_int, 2, (1, 1000)),
        "ks_distance": (float, 0.05, (0.0, 1.0)),
        "xi_tol": (float, 1e-10, (0.0, 1.0)),
        "censoring_max": (float, 1e-3, (0.0, 1.0)),
        "slack": (float, 0.99, (0.0, 1.0)),
        "quad_margin": (float, 1e-6, (0.0, 1.0)),
        "oracle_tol": (float, 1e-6, (0.0, 1.0)),
        "cm4_min": (float, 1e-3, (0.0, 1.0)),
    },
}

EXPERIMENTS = ("height-check", "xi", "pathwise-law", "extinction", "stable-marginal", "height-stability",
               "cm-explore", "k-tilde", "cm4-check", "phi-check")


@dataclass
class RunConfig:
    experiment: str
    seed: int = 0
    threads: int = 1
    values: dict = field(default_factory=dict)

    def get(self, section, key):
        if key in self.values.get(section, {}):
            return self.values[section][key]
        return SCHEMA[section][key][1]

    def set(self, section, key, raw):
        parser, _, rng = SCHEMA[section][key]
        try:
            val = parser(raw) if isinstance(raw, str) else raw
        except (TypeError, ValueError) as e:
            raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}: {e}") from None
        if rng is not None and not rng[0] <= val <= rng[1]:
            raise ConfigError(f"[{section}] {key}={val} outside [{rng[0]}, {rng[1]}]")
        self.values.setdefault(section, {})[key] = val

    def expected_xi(self, spec):
        return closed_form_xi(spec)


def load_config(text: str, experiment: str | None = None) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(str(e)) from None
    cfg = RunConfig(experiment or "")
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        for key, raw in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            cfg.set(sec, key, raw)
    exp = cfg.values.get("run", {}).get("experiment")
    if experiment and exp and exp != experiment:
        raise ConfigError(f"config is for {exp!r}, not {experiment!r}")
    cfg.experiment = experiment or exp or ""
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}")
    cfg.seed = cfg.get("run", "seed")
    cfg.threads = cfg.get("run", "threads")
    return cfg


def load_config_file(path, experiment=None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from None
    return load_config(text, experiment)


def _kv(params: str) -> dict:
    out = {}
    for item in params.split(","):
        if not item.strip():
            continue
        if "=" not in item:
            raise ConfigError(f"expected key=value in law parameters, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def parse_law(spec: str):
    """Law from ``family:params``: ``binary:p``, ``geometric:m``,
    ``power_law:alpha=..,kmin=..[,c=..]``, ``percolated:alpha=..,kmin=..,lambda=..,n=..[,c=..]``
    (the percolated degree) and ``window_child:...`` (the offspring law
    ``B~ - 1`` of the forest explored by the size-biased walk)."""
    fam, _, params = spec.partition(":")
    fam = fam.strip()
    try:
        if fam == "binary":
            return binary(float(params))
        if fam == "geometric":
            return geometric(float(params))
        kv = _kv(params)
        if fam in ("power_law", "percolated", "window_child"):
            base = PowerLaw(float(kv.pop("alpha", 1.5)), int(kv.pop("kmin", 2)), _opt_float(kv.pop("c", "")))
            if fam == "power_law":
                if kv:
                    raise ConfigError(f"unknown power_law parameters {sorted(kv)}")
                return base
            lam, n = float(kv.pop("lambda", 0.0)), int(float(kv.pop("n", 1e5)))
            if kv:
                raise ConfigError(f"unknown {fam} parameters {sorted(kv)}")
            p = window_probability(base.mean, base.second_moment, base.alpha, lam, n)
            law = PercolatedLaw(base, p)
            return law if fam == "percolated" else law.size_biased_child()
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"bad law {spec!r}: {e}") from None
    raise ConfigError(f"unknown law family {fam!r}")


def closed_form_xi(spec: str):
    fam, _, params = spec.partition(":")
    if fam == "binary":
        p = float(params)
        return math.log((1 - p) / p) if 0 < p < 0.5 else None
    if fam == "geometric":
        m = float(params)
        return math.log(m) if m > 1 else None
    return None
