"""Experiment configuration: one nested YAML file drives a whole run.

Sections: ``generation`` (synthetic data), ``federation`` (round loop),
``privacy`` (peer-channel DP), ``adversaries`` (a list of per-client attack
profiles), and a top-level ``seed``. Every key has a default; unknown keys
are rejected so typos fail fast.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .adversary import AdversaryProfile
from .cox import FitConfig
from .federation import FederationSettings, PrivacySettings
from .privacy import DpParams
from .synthetic import GenerationConfig

SWEEP_PARAMETERS = ("eps_max", "alpha", "lambda", "t_honest",
                    "update_frequency", "noise_distribution")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AdversarySpec:
    client: int
    t_honest: int = 5
    t_ramp: int = 10
    eps_max: float = 0.2
    distribution: str = "ramp"
    bias: float = 0.1
    target: str = "model_update"

    def to_profile(self) -> AdversaryProfile:
        return AdversaryProfile(
            t_honest=self.t_honest, t_ramp=self.t_ramp,
            eps_max=self.eps_max, distribution=self.distribution,
            bias=self.bias, target=self.target)


@dataclass(frozen=True)
class ExperimentConfig:
    generation: GenerationConfig = GenerationConfig()
    federation: FederationSettings = FederationSettings()
    privacy: PrivacySettings = PrivacySettings()
    adversaries: tuple[AdversarySpec, ...] = ()
    seed: int = 1

    def profiles(self) -> dict[int, AdversaryProfile]:
        return {spec.client: spec.to_profile() for spec in self.adversaries}

    def adversary_clients(self) -> tuple[int, ...]:
        return tuple(sorted(spec.client for spec in self.adversaries))

    def to_dict(self) -> dict:
        gen = dataclasses.asdict(self.generation)
        if gen["true_beta"] is not None:
            gen["true_beta"] = list(gen["true_beta"])
        fed = dataclasses.asdict(self.federation)
        fed["fit"] = dataclasses.asdict(self.federation.fit)
        priv = {
            "clip_norm": self.privacy.params.clip_norm,
            "epsilon": self.privacy.params.epsilon,
            "delta": self.privacy.params.delta,
            "enabled": self.privacy.enabled,
            "per_peer_noise": self.privacy.per_peer_noise,
        }
        return {
            "seed": self.seed,
            "generation": gen,
            "federation": fed,
            "privacy": priv,
            "adversaries": [dataclasses.asdict(a) for a in self.adversaries],
        }


def _build(section: str, cls, raw: dict, extra_keys=()):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - names - set(extra_keys)
    if unknown:
        raise ConfigError(
            f"unknown key(s) in {section}: {', '.join(sorted(unknown))}")
    try:
        return cls(**{k: v for k, v in raw.items() if k in names})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {section} section: {exc}") from exc


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a mapping")
    unknown = set(raw) - {"seed", "generation", "federation", "privacy",
                          "adversaries"}
    if unknown:
        raise ConfigError(f"unknown top-level key(s): "
                          f"{', '.join(sorted(unknown))}")

    gen_raw = dict(raw.get("generation") or {})
    if isinstance(gen_raw.get("true_beta"), list):
        gen_raw["true_beta"] = tuple(gen_raw["true_beta"])
    generation = _build("generation", GenerationConfig, gen_raw)

    fed_raw = dict(raw.get("federation") or {})
    fit_raw = fed_raw.pop("fit", None)
    if fit_raw is not None:
        fed_raw["fit"] = _build("federation.fit", FitConfig, dict(fit_raw))
    federation = _build("federation", FederationSettings, fed_raw)

    priv_raw = dict(raw.get("privacy") or {})
    params_keys = {"clip_norm", "epsilon", "delta"}
    unknown = set(priv_raw) - params_keys - {"enabled", "per_peer_noise"}
    if unknown:
        raise ConfigError(
            f"unknown key(s) in privacy: {', '.join(sorted(unknown))}")
    try:
        params = DpParams(**{k: v for k, v in priv_raw.items()
                             if k in params_keys})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid privacy section: {exc}") from exc
    privacy = PrivacySettings(
        params=params,
        enabled=bool(priv_raw.get("enabled", True)),
        per_peer_noise=bool(priv_raw.get("per_peer_noise", False)))

    adv_raw = raw.get("adversaries") or []
    if not isinstance(adv_raw, list):
        raise ConfigError("adversaries must be a list")
    specs = []
    for entry in adv_raw:
        if "client" not in (entry or {}):
            raise ConfigError("each adversary needs a client id")
        specs.append(_build("adversaries", AdversarySpec, dict(entry)))
    clients = [s.client for s in specs]
    if len(set(clients)) != len(clients):
        raise ConfigError("duplicate adversary client ids")

    seed = raw.get("seed", 1)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    try:
        for spec in specs:
            spec.to_profile()
    except ValueError as exc:
        raise ConfigError(f"invalid adversary profile: {exc}") from exc
    return ExperimentConfig(generation=generation, federation=federation,
                            privacy=privacy, adversaries=tuple(specs),
                            seed=seed)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    with path.open() as fh:
        try:
            raw = yaml.safe_load(fh) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return config_from_dict(raw)


def dump_config(config: ExperimentConfig, path: str | Path) -> None:
    with Path(path).open("w") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=True)


def apply_overrides(config: ExperimentConfig, method: str | None = None,
                    seed: int | None = None,
                    no_dp: bool = False,
                    workers: int | None = None) -> ExperimentConfig:
    federation = config.federation
    if method is not None:
        federation = replace(federation, method=method)
    if workers is not None:
        federation = replace(federation, workers=workers)
    privacy = config.privacy
    if no_dp:
        privacy = replace(privacy, enabled=False)
    return replace(config, federation=federation, privacy=privacy,
                   seed=config.seed if seed is None else seed)


def apply_sweep_value(config: ExperimentConfig, parameter: str,
                      value) -> ExperimentConfig:
    """Return a copy with one sweep axis set (see SWEEP_PARAMETERS)."""
    if parameter == "alpha":
        return replace(config, federation=replace(
            config.federation, reputation_lr=float(value)))
    if parameter == "lambda":
        return replace(config, federation=replace(
            config.federation, concordance_weight=float(value)))
    if parameter == "update_frequency":
        freq = None if value in (None, "never") else int(value)
        return replace(config, federation=replace(
            config.federation, update_frequency=freq))
    if parameter == "eps_max":
        specs = tuple(replace(s, eps_max=float(value))
                      for s in config.adversaries)
        return replace(config, adversaries=specs)
    if parameter == "t_honest":
        specs = tuple(replace(s, t_honest=int(value))
                      for s in config.adversaries)
        return replace(config, adversaries=specs)
    if parameter == "noise_distribution":
        specs = tuple(replace(s, distribution=str(value))
                      for s in config.adversaries)
        return replace(config, adversaries=specs)
    raise ConfigError(f"unknown sweep parameter {parameter!r}; "
                      f"expected one of {', '.join(SWEEP_PARAMETERS)}")
