"""Run configuration: flat key=value files with CLI flag overrides."""

from dataclasses import dataclass, field

from .exceptions import DataSchemaError, InvalidInputError
from .learners import LEARNER_KINDS, Learner
from .pipeline import SELECTION_MODES, FitConfig

_INT_KEYS = ("seed", "folds", "n_lambda", "learner_rounds", "learner_depth")
_FLOAT_KEYS = ("clip_eps", "lambda_min_ratio", "learner_alpha", "learner_rate")
_STR_KEYS = ("selection", "propensity_learner", "outcome_learner")
ALL_KEYS = _INT_KEYS + _FLOAT_KEYS + _STR_KEYS


@dataclass
class RunConfig:
    """Everything a subcommand needs to fit models reproducibly."""

    seed: int = 0
    folds: int = 5
    clip_eps: float = 0.05
    selection: str = "cic_logn"
    propensity_learner: str = "boosted_stumps"
    outcome_learner: str = "boosted_stumps"
    n_lambda: int = 100
    lambda_min_ratio: float = None
    learner_alpha: float = None
    learner_rate: float = None
    learner_rounds: int = None
    learner_depth: int = None

    def __post_init__(self):
        if self.selection not in SELECTION_MODES:
            raise InvalidInputError(
                f"selection must be one of {SELECTION_MODES}, got {self.selection!r}"
            )
        for name in (self.propensity_learner, self.outcome_learner):
            if name not in LEARNER_KINDS:
                raise InvalidInputError(
                    f"learner must be one of {LEARNER_KINDS}, got {name!r}"
                )

    def _hyperparameters(self):
        hp = {}
        if self.learner_alpha is not None:
            hp["alpha"] = self.learner_alpha
        if self.learner_rate is not None:
            hp["learning_rate"] = self.learner_rate
        if self.learner_rounds is not None:
            hp["rounds"] = self.learner_rounds
        if self.learner_depth is not None:
            hp["depth"] = self.learner_depth
        return hp

    def fit_config(self, seed=None, selection=None):
        hp = self._hyperparameters()
        return FitConfig(
            seed=self.seed if seed is None else int(seed),
            n_folds=self.folds,
            eps_clip=self.clip_eps,
            selection=selection or self.selection,
            propensity_learner=Learner(self.propensity_learner, dict(hp)),
            outcome_learner=Learner(self.outcome_learner, dict(hp)),
            n_lambda=self.n_lambda,
            lambda_min_ratio=self.lambda_min_ratio,
        )

    def echo(self):
        return {k: getattr(self, k) for k in ALL_KEYS}


def parse_config_file(path):
    """Parse a flat key = value file; '#' starts a comment."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise DataSchemaError(f"{path}:{lineno}: expected key = value")
            key, _, raw = text.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key not in ALL_KEYS:
                raise DataSchemaError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = raw
    return values


def _convert(key, raw):
    if raw in (None, "", "none", "auto"):
        return None
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    return str(raw)


def build_run_config(file_values=None, overrides=None):
    """Merge config-file values with flag overrides (flags win)."""
    merged = {}
    for source in (file_values or {}), (overrides or {}):
        for key, raw in source.items():
            if raw is None:
                continue
            merged[key] = raw
    kwargs = {}
    for key, raw in merged.items():
        try:
            converted = _convert(key, raw) if isinstance(raw, str) else raw
        except ValueError:
            raise DataSchemaError(f"config key {key!r}: bad value {raw!r}")
        if converted is not None:
            kwargs[key] = converted
    return RunConfig(**kwargs)
