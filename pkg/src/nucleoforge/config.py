"""JSON pipeline configuration, validated in full before any work starts.

Layout (every section optional)::

    {
      "synth": {...SynthConfig fields...},
      "loss": {"lambda": 0.1, "beta": 1.0},
      "quality": {...QualityConstants fields...},
      "watershed": {"h": 1.0},
      "output_dir": "out",
      "seed": 0
    }

Unknown keys at any level raise :class:`ConfigError`. A top-level ``seed``
replaces the synth seed; giving both is an error.
"""

import json
from dataclasses import dataclass, field, replace

from .errors import ConfigError
from .loss import LossParams
from .quality import QualityConstants
from .synth import SynthConfig

_TOP_KEYS = {"synth", "loss", "quality", "watershed", "output_dir", "seed"}


@dataclass(frozen=True)
class PipelineConfig:
    synth: SynthConfig = field(default_factory=SynthConfig)
    loss: LossParams = field(default_factory=lambda: LossParams(0.1, 1.0))
    quality: QualityConstants = field(default_factory=QualityConstants)
    watershed_h: float = 1.0
    output_dir: str = "out"

    @property
    def seed(self):
        return self.synth.seed

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")

        synth_data = _section(data, "synth")
        if "seed" in data:
            if "seed" in synth_data:
                raise ConfigError("seed given both at top level and in 'synth'")
            synth_data = dict(synth_data, seed=data["seed"])
        synth = SynthConfig.from_dict(synth_data)

        loss_data = _section(data, "loss")
        bad = set(loss_data) - {"lambda", "beta"}
        if bad:
            raise ConfigError(f"unknown loss keys: {sorted(bad)}")
        try:
            loss = LossParams(float(loss_data.get("lambda", 0.1)), float(loss_data.get("beta", 1.0)))
            quality = QualityConstants.from_dict(_section(data, "quality"))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

        ws = _section(data, "watershed")
        if set(ws) - {"h"}:
            raise ConfigError(f"unknown watershed keys: {sorted(set(ws) - {'h'})}")
        h = ws.get("h", 1.0)
        if not isinstance(h, (int, float)) or isinstance(h, bool) or not h > 0:
            raise ConfigError("watershed.h must be a positive number")

        out = data.get("output_dir", "out")
        if not isinstance(out, str) or not out:
            raise ConfigError("output_dir must be a non-empty string")
        return cls(synth, loss, quality, float(h), out)

    def with_seed(self, seed):
        try:
            return replace(self, synth=replace(self.synth, seed=seed))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _section(data, name):
    value = data.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"'{name}' must be a JSON object")
    return value


def parse_json(text, source="<config>"):
    """``json.loads`` with line/column diagnostics on failure."""
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return PipelineConfig.from_dict(parse_json(text, str(path)))
