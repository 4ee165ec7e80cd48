"""Classifier-free guidance kernels.

Three ways of combining a conditional prediction ``x_c`` with an
unconditional one ``x_u``:

* ``plain``: ``x_cfg = x_c + (strength - 1) * (x_c - x_u)``.
* ``ep``: plain CFG followed by a rescale of ``x_cfg`` by
  ``sqrt(E_c / E_cfg)`` so that its robust energy matches that of ``x_c``.
* ``std``: the standard-deviation rescale baseline, blended back towards
  ``x_cfg`` by ``phi``. Kept as a comparison arm only.

All kernels are agnostic to the prediction parameterization (noise, clean
sample or velocity).
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_latent, check_same_shape, check_strength, check_unit_interval
from .exceptions import NonFiniteResult
from .latent import DEFAULT_WINDOW, RobustWindow, robust_energy, robust_energy_rows

__all__ = [
    "EPS_ZERO",
    "Mode",
    "GuidanceParams",
    "EnergyReport",
    "cfg_combine",
    "ep_rescale",
    "ep_cfg",
    "std_rescale_baseline",
    "guide_rows",
]

EPS_ZERO = 1e-30


class Mode(str, enum.Enum):
    PLAIN = "plain"
    ENERGY_PRESERVING = "ep"
    STD_RESCALE = "std"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {
            "plain": cls.PLAIN,
            "cfg": cls.PLAIN,
            "ep": cls.ENERGY_PRESERVING,
            "energypreserving": cls.ENERGY_PRESERVING,
            "energy_preserving": cls.ENERGY_PRESERVING,
            "std": cls.STD_RESCALE,
            "stdrescale": cls.STD_RESCALE,
            "std_rescale": cls.STD_RESCALE,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown guidance mode {value!r}") from None


@dataclass(frozen=True)
class GuidanceParams:
    strength: float = 7.5
    mode: Mode = Mode.ENERGY_PRESERVING
    window: RobustWindow = field(default_factory=RobustWindow)
    phi: float = 0.7

    def __post_init__(self):
        object.__setattr__(self, "strength", check_strength(self.strength))
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        object.__setattr__(self, "phi", check_unit_interval(self.phi, "phi"))
        if not isinstance(self.window, RobustWindow):
            object.__setattr__(self, "window", RobustWindow(*self.window))


@dataclass(frozen=True)
class EnergyReport:
    """Energies measured during one guidance call.

    ``e_c`` and ``e_cfg`` are robust energies of the conditional prediction
    and of the *unrescaled* CFG output; ``scale`` is the factor actually
    applied to the CFG output (1 for plain mode and for fallbacks).
    """

    e_c: float
    e_cfg: float
    scale: float
    window_c: tuple
    window_cfg: tuple
    fallback_used: bool = False

    def to_dict(self):
        return {
            "e_c": self.e_c,
            "e_cfg": self.e_cfg,
            "scale": self.scale,
            "window_c": list(self.window_c),
            "window_cfg": list(self.window_cfg),
            "fallback_used": self.fallback_used,
        }


def _check_pair(a, b, names):
    a = check_latent(a, names[0])
    b = check_latent(b, names[1])
    check_same_shape(a, b, names)
    return a, b


def _combine(x_c, x_u, strength):
    if strength == 1.0:
        # x_c + 0*(...) would turn -0.0 into +0.0
        return x_c.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        out = x_c + (strength - 1.0) * (x_c - x_u)
    if not np.all(np.isfinite(out)):
        raise NonFiniteResult("CFG combination overflowed")
    return out


def cfg_combine(x_c, x_u, strength):
    """``x_c + (strength - 1) * (x_c - x_u)``; exactly ``x_c`` at strength 1."""
    x_c, x_u = _check_pair(x_c, x_u, ("x_c", "x_u"))
    return _combine(x_c, x_u, check_strength(strength))


def _energy_report(rc, rg, scale, fallback):
    return EnergyReport(
        e_c=rc.energy,
        e_cfg=rg.energy,
        scale=scale,
        window_c=(rc.p_low, rc.p_high),
        window_cfg=(rg.p_low, rg.p_high),
        fallback_used=fallback,
    )


def ep_rescale(x_cfg, x_c, window=DEFAULT_WINDOW, eps_zero=EPS_ZERO):
    """Rescale ``x_cfg`` so its robust energy equals that of ``x_c``.

    Returns the rescaled tensor and an :class:`EnergyReport`. If either
    robust energy is at or below ``eps_zero`` the input is passed through
    unchanged with ``fallback_used=True``.
    """
    x_cfg, x_c = _check_pair(x_cfg, x_c, ("x_cfg", "x_c"))
    rc = robust_energy(x_c, window)
    rg = robust_energy(x_cfg, window)
    if not (math.isfinite(rc.energy) and math.isfinite(rg.energy)):
        raise NonFiniteResult("energy overflowed")
    if rg.energy <= eps_zero or rc.energy <= eps_zero:
        return x_cfg.copy(), _energy_report(rc, rg, 1.0, True)
    scale = math.sqrt(rc.energy / rg.energy)
    return scale * x_cfg, _energy_report(rc, rg, scale, False)


def _std_factor(sigma_c, sigma_cfg, phi):
    # phi*r*x + (1-phi)*x written as (1 + phi*(r-1))*x so r == 1 is exact.
    return 1.0 + phi * (sigma_c / sigma_cfg - 1.0)


def std_rescale_baseline(x_cfg, x_c, phi=0.7, eps_zero=EPS_ZERO):
    """Standard-deviation rescale of ``x_cfg`` towards ``x_c``, blended by ``phi``.

    Population standard deviations over the flattened tensors. Comparison
    baseline, not the energy-preserving method.
    """
    x_cfg, x_c = _check_pair(x_cfg, x_c, ("x_cfg", "x_c"))
    phi = check_unit_interval(phi, "phi")
    sigma_cfg = float(np.std(x_cfg))
    if sigma_cfg <= eps_zero:
        return x_cfg.copy()
    return _std_factor(float(np.std(x_c)), sigma_cfg, phi) * x_cfg


def ep_cfg(x_c, x_u, params):
    """Guided prediction for ``params.mode`` plus its :class:`EnergyReport`."""
    x_c, x_u = _check_pair(x_c, x_u, ("x_c", "x_u"))
    x_cfg = _combine(x_c, x_u, params.strength)
    if params.mode is Mode.ENERGY_PRESERVING:
        return ep_rescale(x_cfg, x_c, params.window)

    rc = robust_energy(x_c, params.window)
    rg = robust_energy(x_cfg, params.window)
    if params.mode is Mode.PLAIN:
        return x_cfg, _energy_report(rc, rg, 1.0, False)

    sigma_cfg = float(np.std(x_cfg))
    if sigma_cfg <= EPS_ZERO:
        return x_cfg, _energy_report(rc, rg, 1.0, True)
    factor = _std_factor(float(np.std(x_c)), sigma_cfg, params.phi)
    return factor * x_cfg, _energy_report(rc, rg, factor, False)


def guide_rows(X_c, X_u, params, eps_zero=EPS_ZERO):
    """Row-wise :func:`ep_cfg` over 2-D batches (one flattened latent per row).

    No input validation; meant for inner loops that already hold clean
    float64 arrays.

    Returns
    -------
    out : (n, d) guided predictions
    e_c, e_cfg : (n,) robust energies of ``X_c`` and of the unrescaled CFG output
    scale : (n,) applied factor
    fallback : (n,) bool
    """
    x_cfg = _combine(X_c, X_u, params.strength)
    e_c = robust_energy_rows(X_c, params.window)[0]
    e_cfg = robust_energy_rows(x_cfg, params.window)[0]
    n = X_c.shape[0]
    scale = np.ones(n)
    fallback = np.zeros(n, dtype=bool)

    if params.mode is Mode.ENERGY_PRESERVING:
        fallback = (e_cfg <= eps_zero) | (e_c <= eps_zero)
        ok = ~fallback
        scale[ok] = np.sqrt(e_c[ok] / e_cfg[ok])
    elif params.mode is Mode.STD_RESCALE:
        sigma_cfg = np.std(x_cfg, axis=1)
        fallback = sigma_cfg <= eps_zero
        ok = ~fallback
        scale[ok] = _std_factor(np.std(X_c, axis=1)[ok], sigma_cfg[ok], params.phi)
    else:
        return x_cfg, e_c, e_cfg, scale, fallback
    return scale[:, None] * x_cfg, e_c, e_cfg, scale, fallback
