"""Run configuration: a JSON file plus ``--key value`` overrides."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

from .grouping import STRATEGIES
from .learners import KINDS, LearnerSpec
from .stacking import META_KINDS

DEFAULT_POOL = ["gbdt", "forest", "extratrees", "adaboost", "logreg"]

DEFAULTS = {
    "dataset": None,
    "label_column": "target",
    "seed": 0,
    "K": 5,
    "train_frac": 0.7,
    "grouping": {"strategy": "manual", "G": None, "config": None, "seed": 0, "bins": 10},
    "pool": DEFAULT_POOL,
    "k": 3,
    "meta_kind": "logistic",
    "output_dir": "strike_out",
    "workers": 1,
    "cmi": {"summary": "oof_logit", "bins": 10},
    "ablation_seeds": [0, 1, 2, 3, 4],
}


# relative paths given as overrides are taken from the working directory,
# relative paths inside a config file from the file's directory
_PATH_KEYS = {("dataset",), ("output_dir",), ("grouping", "config")}


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration (exit code 2)."""


def _merge(base: dict, update: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def parse_override_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(cfg: dict, overrides: list[str]) -> dict:
    """Apply ``--a.b value`` pairs; dotted keys address nested sections."""
    cfg = copy.deepcopy(cfg)
    if len(overrides) % 2:
        raise ConfigError(f"override {overrides[-1]!r} has no value")
    for flag, text in zip(overrides[::2], overrides[1::2]):
        if not flag.startswith("--"):
            raise ConfigError(f"expected --key, got {flag!r}")
        path = flag[2:].replace("-", "_").split(".")
        node = cfg
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"{flag}: {part!r} is not a section")
        value = parse_override_value(text)
        if tuple(path) in _PATH_KEYS and isinstance(value, str):
            value = str(Path(value).resolve())
        node[path[-1]] = value
    return cfg


@dataclass
class RunConfig:
    raw: dict
    base_dir: Path = field(default_factory=Path.cwd)

    def __getitem__(self, key):
        return self.raw[key]

    def path(self, value) -> Path | None:
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def dataset(self) -> Path:
        return self.path(self.raw["dataset"])

    @property
    def output_dir(self) -> Path:
        return self.path(self.raw["output_dir"])

    @property
    def group_config(self) -> Path | None:
        return self.path(self.raw["grouping"].get("config"))

    @property
    def pool(self) -> list[LearnerSpec]:
        return [LearnerSpec.from_dict(p) for p in self.raw["pool"]]

    def model_snapshot(self) -> dict:
        """Settings that determine the trained model (not paths or worker count)."""
        keep = ("label_column", "seed", "K", "train_frac", "grouping", "pool", "k", "meta_kind")
        snap = {k: copy.deepcopy(self.raw[k]) for k in keep}
        snap["grouping"].pop("config", None)
        return snap


def validate(cfg: dict, need_dataset: bool = True) -> None:
    unknown = set(cfg) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    if need_dataset and not cfg.get("dataset"):
        raise ConfigError("field 'dataset' is required")
    if cfg["meta_kind"] not in META_KINDS:
        raise ConfigError(f"field 'meta_kind': {cfg['meta_kind']!r} is not one of {', '.join(META_KINDS)}")
    strategy = cfg["grouping"].get("strategy")
    if strategy not in STRATEGIES:
        raise ConfigError(f"field 'grouping.strategy': {strategy!r} is not one of {', '.join(STRATEGIES)}")
    for name in ("K", "k", "workers", "seed"):
        if not isinstance(cfg[name], int) or isinstance(cfg[name], bool):
            raise ConfigError(f"field {name!r} must be an integer")
    if cfg["K"] < 2 or cfg["k"] < 1 or cfg["workers"] < 1:
        raise ConfigError("fields 'K' >= 2, 'k' >= 1 and 'workers' >= 1 are required")
    if not isinstance(cfg["train_frac"], (int, float)) or not 0 < cfg["train_frac"] < 1:
        raise ConfigError("field 'train_frac' must lie strictly between 0 and 1")
    if not isinstance(cfg["pool"], list) or not cfg["pool"]:
        raise ConfigError("field 'pool' must be a non-empty list")
    try:
        specs = [LearnerSpec.from_dict(p) for p in cfg["pool"]]
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"field 'pool': {exc}") from None
    kinds = [s.kind for s in specs]
    if len(set(kinds)) != len(kinds):
        raise ConfigError(f"field 'pool': learner kinds must be unique (known kinds: {', '.join(KINDS)})")
    if cfg["cmi"].get("summary") not in ("oof_logit", "first_pc"):
        raise ConfigError("field 'cmi.summary' must be 'oof_logit' or 'first_pc'")


def load_config(path=None, overrides: list[str] | None = None, need_dataset: bool = True) -> RunConfig:
    user: dict = {}
    base = Path.cwd()
    if path is not None:
        path = Path(path)
        try:
            user = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        base = path.resolve().parent
    cfg = _merge(DEFAULTS, user)
    cfg = apply_overrides(cfg, overrides or [])
    validate(cfg, need_dataset)
    return RunConfig(cfg, base)
