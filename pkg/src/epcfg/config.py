"""Experiment configuration: ``key = value`` lines with ``#`` comments.

Example::

    # bimodal unconditional, unimodal conditional
    lambda = 1, 5, 9, 12
    mode = ep
    cond = 1.0 : 2.0 : 0.5
    uncond = 0.5 : 2.0 : 0.5 ; 0.5 : -2.0 : 0.5
    batch = 4096
    seed = 0

Mixtures are ``weight : mean : std`` components separated by ``;``; a
multi-dimensional mean is written comma-separated (``0.5 : 1,2 : 0.3``).
``lambda`` may list several strengths, giving one output set per value.
"""

import os
from dataclasses import dataclass, field

from .diffusion import GUIDANCE_SPACES, MixtureModel, vp_schedule
from .exceptions import ConfigError, EPCFGError
from .guidance import GuidanceParams, Mode
from .latent import RobustWindow

SEED_ENV = "EPCFG_SEED"


def _default_cond():
    return MixtureModel.from_components([(1.0, 2.0, 0.5)])


def _default_uncond():
    return MixtureModel.from_components([(0.5, 2.0, 0.5), (0.5, -2.0, 0.5)])


@dataclass(frozen=True)
class ExperimentConfig:
    lambdas: tuple = (9.0,)
    mode: Mode = Mode.ENERGY_PRESERVING
    l: float = 45.0
    h: float = 55.0
    phi: float = 0.7
    steps: int = 50
    beta_min: float = 1e-4
    beta_max: float = 0.2
    cond: MixtureModel = field(default_factory=_default_cond)
    uncond: MixtureModel = field(default_factory=_default_uncond)
    batch: int = 256
    seed: int = 0
    guidance_space: str = "eps"
    output_dir: str = "out"

    def __post_init__(self):
        if not self.lambdas:
            raise ConfigError("at least one lambda is required")
        if self.batch < 1:
            raise ConfigError(f"batch must be >= 1, got {self.batch}")
        if self.guidance_space not in GUIDANCE_SPACES:
            raise ConfigError(f"guidance_space must be one of {GUIDANCE_SPACES}")
        if self.cond.dim != self.uncond.dim:
            raise ConfigError("cond and uncond mixtures have different dimensions")
        try:
            for lam in self.lambdas:
                self.params(lam)
            self.schedule()
        except EPCFGError as exc:
            raise ConfigError(str(exc)) from exc

    def params(self, strength):
        return GuidanceParams(strength, self.mode, RobustWindow(self.l, self.h), self.phi)

    def schedule(self):
        return vp_schedule(self.steps, self.beta_min, self.beta_max)


def _parse_mixture(text):
    components = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        fields = [f.strip() for f in part.split(":")]
        if len(fields) != 3:
            raise ConfigError(f"mixture component {part!r} is not weight:mean:std")
        w, mean, std = fields
        components.append((float(w), [float(v) for v in mean.split(",")], float(std)))
    if not components:
        raise ConfigError("empty mixture")
    try:
        return MixtureModel.from_components(components)
    except (EPCFGError, ValueError) as exc:
        raise ConfigError(f"bad mixture {text!r}: {exc}") from exc


def _int(text):
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"{text!r} is not an integer")
    return int(value)


_PARSERS = {
    "lambda": ("lambdas", lambda s: tuple(float(v) for v in s.split(",") if v.strip())),
    "mode": ("mode", Mode.parse),
    "l": ("l", float),
    "h": ("h", float),
    "phi": ("phi", float),
    "T": ("steps", _int),
    "steps": ("steps", _int),
    "beta_min": ("beta_min", float),
    "beta_max": ("beta_max", float),
    "cond": ("cond", _parse_mixture),
    "uncond": ("uncond", _parse_mixture),
    "batch": ("batch", _int),
    "seed": ("seed", _int),
    "guidance_space": ("guidance_space", str),
    "output_dir": ("output_dir", str),
}


def parse_config(text, env=None):
    """Parse config text. Unknown or repeated keys are errors.

    If ``env`` contains ``EPCFG_SEED`` it replaces the configured seed.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        name, parse = _PARSERS[key]
        if name in values:
            raise ConfigError(f"line {lineno}: {key!r} given twice")
        try:
            values[name] = parse(value)
        except (ValueError, EPCFGError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc

    if env is not None and env.get(SEED_ENV):
        try:
            values["seed"] = _int(env[SEED_ENV])
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV}: {exc}") from exc
    return ExperimentConfig(**values)


def load_config(path, env=os.environ):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, env)
