"""Run configuration: JSON file, schema validation and provenance hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import ConfigError
from .sampling import ExperimentConfig

PATH_KEYS = ("design", "bench", "vectors", "weights")


def schema() -> dict:
    return json.loads(resources.files("mutsamp").joinpath("config_schema.json").read_text())


@dataclass(frozen=True)
class RunConfig:
    """Everything that affects results, plus resolved input paths."""

    design: Path | None = None
    bench: Path | None = None
    vectors: Path | None = None
    weights: Path | None = None
    output_dir: Path | None = None
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)

    @classmethod
    def from_dict(cls, data: dict, base: Path = Path(".")) -> "RunConfig":
        try:
            jsonschema.validate(data, schema())
        except jsonschema.ValidationError as exc:
            where = "/".join(map(str, exc.absolute_path)) or "<root>"
            raise ConfigError(f"config {where}: {exc.message}") from None
        paths = {}
        for key in (*PATH_KEYS, "output_dir"):
            if data.get(key):
                p = Path(data[key])
                paths[key] = p if p.is_absolute() else (base / p)
        eq = data.get("equivalence", {})
        defaults = ExperimentConfig()
        seeds = tuple(data.get("seeds", defaults.seeds))
        exp = ExperimentConfig(
            operators=tuple(data.get("operators", defaults.operators)),
            fraction=float(data.get("fraction", defaults.fraction)),
            seeds=seeds,
            candidate_factor=data.get("candidate_factor", defaults.candidate_factor),
            seq_length=data.get("seq_length", defaults.seq_length),
            max_ts_length=data.get("max_ts_length", defaults.max_ts_length),
            baseline_cap=data.get("baseline_cap", defaults.baseline_cap),
            equivalence_budget=eq.get("budget", defaults.equivalence_budget),
            comb_input_bits=eq.get("comb_input_bits", defaults.comb_input_bits),
            seq_work_limit=eq.get("seq_work_limit", defaults.seq_work_limit),
            epsilon=data.get("epsilon", defaults.epsilon),
            word_width=data.get("word_width", defaults.word_width),
        )
        from .mutation import OPERATORS
        unknown = [t for t in exp.operators if t not in OPERATORS]
        if unknown:
            raise ConfigError(f"unknown mutation operators: {', '.join(unknown)}")
        return cls(experiment=exp, **paths)

    @classmethod
    def read(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data, path.parent)

    def with_paths(self, **paths) -> "RunConfig":
        from dataclasses import replace
        return replace(self, **{k: Path(v) for k, v in paths.items() if v is not None})

    def canonical(self) -> dict:
        """Result-affecting settings, with input files identified by content hash."""
        e = self.experiment
        out = {
            "operators": list(e.operators), "fraction": e.fraction, "seeds": list(e.seeds),
            "candidate_factor": e.candidate_factor, "seq_length": e.seq_length,
            "max_ts_length": e.max_ts_length, "baseline_cap": e.baseline_cap,
            "equivalence": {"budget": e.equivalence_budget, "comb_input_bits": e.comb_input_bits,
                            "seq_work_limit": e.seq_work_limit},
            "epsilon": e.epsilon, "word_width": e.word_width,
        }
        for key in PATH_KEYS:
            p = getattr(self, key)
            out[key] = _file_hash(p) if p is not None and p.exists() else None
        return out

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _file_hash(path: Path) -> str:
    return "sha256:" + hashlib.sha256(path.read_bytes()).hexdigest()
