"""Run configuration: flat key = value files with CLI overrides.

A config file holds one ``key = value`` pair per line; ``#`` starts a
comment. Every key can also be passed as a same-named command-line flag
(``--k_surrogates 50``), which takes precedence over the file.
"""

from __future__ import annotations

import shlex
from dataclasses import dataclass, field

from ..bootstrap import (
    RESAMPLE_FRESH,
    RESAMPLE_POOL,
    RESAMPLE_SHARED,
    BlimeConfig,
)
from ..errors import ConfigError
from ..external import ExternalConfig, external_predictor
from ..interpretable import (
    InterpretableInstance,
    grid_segment,
    load_image,
    load_segment_map,
    load_text,
    tokenize,
)
from ..predictors import (
    MEAN_OF_MEMBERS,
    SAMPLE_MEMBER_PER_QUERY,
    PredictionMode,
    SyntheticEnsembleSpec,
    fixed_member,
    synthetic_predictor,
)
from ..surrogate import KernelConfig, SurrogateConfig

# Conventional kernel widths per modality, applied when kernel.width is unset.
DEFAULT_KERNEL_WIDTH = {"image": 0.25, "text": 25.0}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_resample(text: str) -> str:
    low = text.strip().lower()
    aliases = {
        "true": RESAMPLE_FRESH,
        "false": RESAMPLE_SHARED,
        RESAMPLE_FRESH: RESAMPLE_FRESH,
        RESAMPLE_SHARED: RESAMPLE_SHARED,
        RESAMPLE_POOL: RESAMPLE_POOL,
    }
    if low not in aliases:
        raise ValueError(f"expected fresh/shared/pool (or true/false): {text!r}")
    return aliases[low]


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


# key -> (parser, default, help). None defaults mean "required or derived".
KEYS: dict[str, tuple] = {
    "instance": (str, None, "path to the PNG image or UTF-8 text file"),
    "modality": (str, None, "image or text"),
    "segmentation": (str, None, "images only: grid:RxC or map:PATH (label CSV)"),
    "tokenizer.lowercase": (_parse_bool, True, "text only: fold case before typing"),
    "predictor.kind": (str, "synthetic", "synthetic or external"),
    "predictor.command": (str, None, "external only: command line to spawn"),
    "predictor.beta": (_parse_floats, None, "synthetic only: planted weights, comma-separated"),
    "predictor.members": (int, 5, "synthetic only: ensemble size"),
    "predictor.noise": (float, 0.2, "synthetic only: member weight noise scale"),
    "predictor.bias": (float, 0.0, "synthetic only: logit bias"),
    "explained_class": (int, 1, "class whose probability the surrogates fit"),
    "k_surrogates": (int, 100, "number of surrogates K"),
    "n_perturbations": (int, 100, "perturbations per surrogate N"),
    "resample_masks": (_parse_resample, RESAMPLE_FRESH, "fresh, shared or pool"),
    "prediction_mode": (str, "mean", "mean, sample or fixed:<member>"),
    "kernel.width": (float, None, "locality kernel width (default 0.25 image / 25 text)"),
    "ridge.lambda": (float, 1.0, "ridge penalty"),
    "surrogate.activation_prob": (float, 0.5, "Bernoulli p for mask entries"),
    "surrogate.include_original": (_parse_bool, True, "force the all-ones mask as row 0"),
    "seed": (int, 0, "master seed"),
    "out_dir": (str, "out", "output directory"),
    "workers": (int, 1, "worker threads for surrogates/replicates"),
    "external.timeout": (float, 60.0, "external request timeout, seconds"),
    "external.handshake_timeout": (float, 10.0, "external handshake timeout, seconds"),
    "external.chunk": (int, 256, "instances per external request"),
}


def parse_config_file(path: str) -> dict[str, str]:
    """Read a flat key = value file into a string-to-string mapping."""
    pairs: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        pairs[key] = value
    return pairs


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration of one run."""

    values: dict = field(default_factory=dict)

    def __getitem__(self, key: str):
        return self.values[key]

    def as_json_dict(self) -> dict:
        out = {}
        for key in sorted(self.values):
            v = self.values[key]
            out[key] = list(v) if isinstance(v, tuple) else v
        return out


def resolve_config(
    pairs: dict[str, str], overrides: dict[str, str] | None = None
) -> RunConfig:
    """Coerce raw string pairs (file then CLI overrides) to a RunConfig."""
    raw = dict(pairs)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        raw[key] = value
    values: dict = {}
    for key, (parser, default, _help) in KEYS.items():
        if key in raw:
            text = raw[key]
            try:
                values[key] = parser(text) if isinstance(text, str) else text
            except ValueError as exc:
                raise ConfigError(f"config key {key}: {exc}") from exc
        else:
            values[key] = default
    _validate(values)
    return RunConfig(values)


def _validate(v: dict) -> None:
    if v["instance"] is None:
        raise ConfigError("config key 'instance' is required")
    if v["modality"] not in ("image", "text"):
        raise ConfigError("config key 'modality' must be image or text")
    if v["modality"] == "image":
        if not v["segmentation"]:
            raise ConfigError("image runs require a 'segmentation' key")
        spec = v["segmentation"]
        if not (spec.startswith("grid:") or spec.startswith("map:")):
            raise ConfigError(
                f"segmentation must be grid:RxC or map:PATH, got {spec!r}"
            )
    else:
        if v["segmentation"]:
            raise ConfigError("text runs take no 'segmentation' key")
    if v["predictor.kind"] == "synthetic":
        if v["predictor.beta"] is None:
            raise ConfigError("synthetic predictor requires 'predictor.beta'")
    elif v["predictor.kind"] == "external":
        if not v["predictor.command"]:
            raise ConfigError("external predictor requires 'predictor.command'")
    else:
        raise ConfigError("predictor.kind must be synthetic or external")
    mode = v["prediction_mode"]
    if mode not in ("mean", "sample") and not mode.startswith("fixed:"):
        raise ConfigError(
            f"prediction_mode must be mean, sample or fixed:<member>, got {mode!r}"
        )
    if v["kernel.width"] is None:
        v["kernel.width"] = DEFAULT_KERNEL_WIDTH[v["modality"]]
    for key in ("k_surrogates", "n_perturbations", "workers"):
        if v[key] < 1:
            raise ConfigError(f"config key '{key}' must be positive")
    if v["explained_class"] < 0:
        raise ConfigError("explained_class must be nonnegative")


def prediction_mode(config: RunConfig) -> PredictionMode:
    mode = config["prediction_mode"]
    if mode == "mean":
        return MEAN_OF_MEMBERS
    if mode == "sample":
        return SAMPLE_MEMBER_PER_QUERY
    return fixed_member(int(mode.split(":", 1)[1]))


def make_interpretable(config: RunConfig) -> InterpretableInstance:
    """Load the instance and build its interpretable representation."""
    try:
        if config["modality"] == "image":
            image = load_image(config["instance"])
            spec = config["segmentation"]
            if spec.startswith("grid:"):
                try:
                    rows, cols = (int(p) for p in spec[5:].lower().split("x"))
                except ValueError:
                    raise ConfigError(f"bad grid spec {spec!r}") from None
                segments = grid_segment(image, rows, cols)
            else:
                segments = load_segment_map(spec[4:], image)
            return InterpretableInstance(image, segments)
        text = load_text(config["instance"])
        tokens = tokenize(text, lowercase=config["tokenizer.lowercase"])
        return InterpretableInstance(text, tokens)
    except FileNotFoundError as exc:
        raise ConfigError(f"instance or map file not found: {exc.filename}") from exc


def make_predictor(config: RunConfig, interp: InterpretableInstance):
    """Build the predictor named by the config."""
    if config["predictor.kind"] == "synthetic":
        beta = config["predictor.beta"]
        if len(beta) != interp.m:
            raise ConfigError(
                f"predictor.beta has {len(beta)} weights but the instance "
                f"has {interp.m} components"
            )
        spec = SyntheticEnsembleSpec(
            member_count=config["predictor.members"],
            base_weights=beta,
            member_noise_scale=config["predictor.noise"],
            bias=config["predictor.bias"],
            seed=config["seed"],
        )
        return synthetic_predictor(spec, interp)
    return external_predictor(
        shlex.split(config["predictor.command"]),
        ExternalConfig(
            handshake_timeout=config["external.handshake_timeout"],
            request_timeout=config["external.timeout"],
            chunk_size=config["external.chunk"],
        ),
    )


def make_blime_config(config: RunConfig, master_seed: int | None = None) -> BlimeConfig:
    return BlimeConfig(
        k_surrogates=config["k_surrogates"],
        n_perturbations=config["n_perturbations"],
        resample_masks=config["resample_masks"],
        prediction_mode=prediction_mode(config),
        master_seed=config["seed"] if master_seed is None else master_seed,
    )


def make_kernel_config(config: RunConfig) -> KernelConfig:
    return KernelConfig(width=config["kernel.width"])


def make_surrogate_config(config: RunConfig) -> SurrogateConfig:
    return SurrogateConfig(
        ridge_lambda=config["ridge.lambda"],
        activation_prob=config["surrogate.activation_prob"],
        include_original=config["surrogate.include_original"],
    )
