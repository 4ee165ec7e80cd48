"""Toy diffusion sampler with exact Gaussian-mixture denoisers.

Data distributions are isotropic Gaussian mixtures, so the posterior mean
``E[x0 | x_t]`` under ``x_t = sqrt(ab) * x0 + sqrt(1 - ab) * eps`` is
available in closed form. That makes it possible to run guided DDIM
sampling and compare the result with draws from the true conditional
distribution, without training anything.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_latent, check_same_shape
from .exceptions import DegenerateAlpha, IndexOutOfRange, InvalidRange, ShapeMismatch
from .guidance import guide_rows
from .latent import robust_energy_rows

__all__ = [
    "MixtureModel",
    "DiffusionSchedule",
    "TrajectoryLog",
    "vp_schedule",
    "responsibilities",
    "analytic_x0",
    "eps_from_x0",
    "ddim_step",
    "trajectory_rng",
    "sample_trajectory",
    "sample_batch",
]

GUIDANCE_SPACES = ("eps", "x0")


@dataclass(frozen=True, eq=False)
class MixtureModel:
    """Weighted isotropic Gaussian mixture.

    Parameters
    ----------
    weights : (K,) array_like
        Positive, summing to 1 within 1e-12.
    means : (K, d) array_like
        A 1-D array is read as K one-dimensional means.
    stds : (K,) array_like
        Positive per-component standard deviations.
    """

    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        mu = np.asarray(self.means, dtype=np.float64)
        if mu.ndim == 1:
            mu = mu.reshape(-1, 1)
        sd = np.asarray(self.stds, dtype=np.float64).ravel()
        if w.size == 0 or mu.shape[0] != w.size or sd.size != w.size:
            raise ShapeMismatch("weights, means and stds must describe the same number of components")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(mu)) and np.all(np.isfinite(sd))):
            raise InvalidRange("mixture parameters must be finite")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InvalidRange(f"weights must be positive and sum to 1, got {w.tolist()}")
        if np.any(sd <= 0):
            raise InvalidRange("component stds must be positive")
        for name, arr in (("weights", w), ("means", mu), ("stds", sd)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def from_components(cls, components):
        """Build from ``[(weight, mean, std), ...]``; ``mean`` may be a scalar."""
        w, mu, sd = zip(*components)
        means = np.array([np.atleast_1d(np.asarray(m, dtype=np.float64)) for m in mu])
        return cls(np.array(w, dtype=np.float64), means, np.array(sd, dtype=np.float64))

    @property
    def dim(self):
        return self.means.shape[1]

    @property
    def n_components(self):
        return self.weights.size

    def sample(self, n, rng):
        ks = rng.choice(self.n_components, size=n, p=self.weights)
        z = rng.standard_normal((n, self.dim))
        return self.means[ks] + self.stds[ks, None] * z

    def __eq__(self, other):
        if not isinstance(other, MixtureModel):
            return NotImplemented
        return (
            np.array_equal(self.weights, other.weights)
            and np.array_equal(self.means, other.means)
            and np.array_equal(self.stds, other.stds)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class DiffusionSchedule:
    """Cumulative signal levels ``alpha_bar[0..T]`` with ``alpha_bar[0] == 1``.

    The sequence must be non-increasing and positive. Equal neighbours are
    allowed (a zero-noise schedule is a valid degenerate case), but
    :func:`sample_batch` needs ``alpha_bar[t] < 1`` for every ``t >= 1``.
    """

    alpha_bar: np.ndarray

    def __post_init__(self):
        ab = np.asarray(self.alpha_bar, dtype=np.float64).ravel()
        if ab.size < 2:
            raise InvalidRange("schedule needs at least one step")
        if ab[0] != 1.0:
            raise InvalidRange("alpha_bar[0] must be exactly 1")
        if np.any(ab <= 0) or np.any(ab > 1) or np.any(np.diff(ab) > 0):
            raise InvalidRange("alpha_bar must be non-increasing within (0, 1]")
        ab.flags.writeable = False
        object.__setattr__(self, "alpha_bar", ab)

    @property
    def steps(self):
        return self.alpha_bar.size - 1


def vp_schedule(T=50, beta_min=1e-4, beta_max=0.2):
    """Linear-beta variance-preserving schedule."""
    T = int(T)
    if T < 1:
        raise InvalidRange(f"need T >= 1, got {T}")
    if not (0.0 <= beta_min <= beta_max < 1.0):
        raise InvalidRange(f"need 0 <= beta_min <= beta_max < 1, got {beta_min}, {beta_max}")
    betas = np.linspace(beta_min, beta_max, T)
    return DiffusionSchedule(np.concatenate([[1.0], np.cumprod(1.0 - betas)]))


def _as_points(m, x_t):
    X = check_latent(x_t, "x_t")
    single = X.ndim == 1
    X = X.reshape(1, -1) if single else X.reshape(X.shape[0], -1)
    if X.shape[1] != m.dim:
        raise ShapeMismatch(f"latent dimension {X.shape[1]} != mixture dimension {m.dim}")
    return X, single


def _check_alpha(alpha_bar_t):
    ab = float(alpha_bar_t)
    if not 0.0 < ab <= 1.0:
        raise InvalidRange(f"alpha_bar must lie in (0, 1], got {ab}")
    return ab


def _log_resp(m, X, ab):
    var = ab * m.stds**2 + (1.0 - ab)
    diff = X[:, None, :] - math.sqrt(ab) * m.means[None, :, :]
    sq = np.einsum("nkd,nkd->nk", diff, diff)
    logp = np.log(m.weights) - 0.5 * sq / var - 0.5 * m.dim * np.log(2.0 * np.pi * var)
    logp -= logp.max(axis=1, keepdims=True)
    r = np.exp(logp)
    r /= r.sum(axis=1, keepdims=True)
    return r, diff, var


def responsibilities(m, x_t, alpha_bar_t):
    """Posterior component probabilities ``p(k | x_t)``, shape ``(n, K)``."""
    X, _ = _as_points(m, x_t)
    return _log_resp(m, X, _check_alpha(alpha_bar_t))[0]


def _posterior_mean(m, X, ab):
    if ab == 1.0:
        return X.copy()
    r, diff, var = _log_resp(m, X, ab)
    gain = math.sqrt(ab) * m.stds**2 / var
    mk = m.means[None, :, :] + gain[None, :, None] * diff
    return np.einsum("nk,nkd->nd", r, mk)


def analytic_x0(m, x_t, alpha_bar_t):
    """Exact ``E[x0 | x_t]`` for mixture prior ``m``.

    ``x_t`` is one point of shape ``(d,)`` or a batch ``(n, d)``; the result
    has the same shape. Returns ``x_t`` unchanged when ``alpha_bar_t == 1``.
    """
    X, single = _as_points(m, x_t)
    out = _posterior_mean(m, X, _check_alpha(alpha_bar_t))
    return out[0] if single else out


def eps_from_x0(x_t, x0, alpha_bar_t):
    ab = float(alpha_bar_t)
    if not 0.0 < ab < 1.0:
        raise DegenerateAlpha(f"noise is undefined for alpha_bar={ab}")
    x_t = check_latent(x_t, "x_t")
    x0 = check_latent(x0, "x0")
    check_same_shape(x_t, x0, ("x_t", "x0"))
    return (x_t - math.sqrt(ab) * x0) / math.sqrt(1.0 - ab)


def _ddim_update(x0, eps, ab_prev):
    return math.sqrt(ab_prev) * x0 + math.sqrt(1.0 - ab_prev) * eps


def ddim_step(x_t, x0_pred, sched, t):
    """Deterministic DDIM update ``x_t -> x_{t-1}`` given a clean-sample prediction."""
    t = int(t)
    if not 1 <= t <= sched.steps:
        raise IndexOutOfRange(f"step {t} outside 1..{sched.steps}")
    ab_t = sched.alpha_bar[t]
    ab_prev = sched.alpha_bar[t - 1]
    x_t = check_latent(x_t, "x_t")
    if ab_prev == ab_t:
        x0_pred = check_latent(x0_pred, "x0_pred")
        check_same_shape(x_t, x0_pred, ("x_t", "x0_pred"))
        return x_t.copy()
    eps = eps_from_x0(x_t, x0_pred, ab_t)
    return _ddim_update(np.asarray(x0_pred, dtype=np.float64), eps, ab_prev)


@dataclass(frozen=True, eq=False)
class TrajectoryLog:
    """Per-step record of one guided trajectory, ordered from ``t = T`` down to 1.

    ``e_cfg`` is the robust energy of the unrescaled CFG output and
    ``e_out`` that of the prediction actually used for the update, so
    ``ratio = e_out / e_c`` is 1 under energy preservation. ``moment`` is
    ``||x_{t-1}||^2 / d`` of the state after the update.
    """

    step: np.ndarray
    e_c: np.ndarray
    e_cfg: np.ndarray
    e_out: np.ndarray
    scale: np.ndarray
    fallback_used: np.ndarray
    moment: np.ndarray

    @property
    def ratio(self):
        return self.e_out / self.e_c

    def __len__(self):
        return self.step.size

    def __eq__(self, other):
        if not isinstance(other, TrajectoryLog):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("step", "e_c", "e_cfg", "e_out", "scale", "fallback_used", "moment")
        )

    __hash__ = None


def trajectory_rng(seed, index=0):
    """Generator for trajectory ``index`` of a run seeded with ``seed``.

    Each trajectory owns an independent stream, so batch results do not
    depend on batch size or evaluation order.
    """
    return np.random.default_rng([int(seed), 0, int(index)])


def _validate_run(cond, uncond, sched, space):
    if cond.dim != uncond.dim:
        raise ShapeMismatch(f"mixture dimensions differ: {cond.dim} vs {uncond.dim}")
    if space not in GUIDANCE_SPACES:
        raise ValueError(f"guidance_space must be one of {GUIDANCE_SPACES}, got {space!r}")
    if np.any(sched.alpha_bar[1:] >= 1.0):
        raise DegenerateAlpha("sampling needs alpha_bar[t] < 1 for every t >= 1")


def sample_batch(cond, uncond, sched, params, guidance_space="eps", seed=0, n=1):
    """Run ``n`` guided DDIM trajectories from pure noise.

    Trajectory ``i`` starts from ``trajectory_rng(seed, i).standard_normal(d)``.

    Returns
    -------
    samples : (n, d) ndarray
    logs : list of TrajectoryLog
    """
    _validate_run(cond, uncond, sched, guidance_space)
    n = int(n)
    if n < 1:
        raise InvalidRange("batch size must be >= 1")
    d = cond.dim
    x = np.stack([trajectory_rng(seed, i).standard_normal(d) for i in range(n)])

    T = sched.steps
    rec = {k: np.empty((T, n)) for k in ("e_c", "e_cfg", "e_out", "scale", "moment")}
    rec["fallback_used"] = np.empty((T, n), dtype=bool)

    for row, t in enumerate(range(T, 0, -1)):
        ab_t = sched.alpha_bar[t]
        ab_prev = sched.alpha_bar[t - 1]
        sa, sn = math.sqrt(ab_t), math.sqrt(1.0 - ab_t)
        x0_c = _posterior_mean(cond, x, ab_t)
        x0_u = _posterior_mean(uncond, x, ab_t)
        if guidance_space == "eps":
            eps_c = (x - sa * x0_c) / sn
            eps_u = (x - sa * x0_u) / sn
            eps, e_c, e_cfg, scale, fb = guide_rows(eps_c, eps_u, params)
            x0 = (x - sn * eps) / sa
            guided = eps
        else:
            x0, e_c, e_cfg, scale, fb = guide_rows(x0_c, x0_u, params)
            eps = (x - sa * x0) / sn
            guided = x0
        x = _ddim_update(x0, eps, ab_prev)

        rec["e_c"][row] = e_c
        rec["e_cfg"][row] = e_cfg
        rec["e_out"][row] = robust_energy_rows(guided, params.window)[0]
        rec["scale"][row] = scale
        rec["fallback_used"][row] = fb
        rec["moment"][row] = np.einsum("nd,nd->n", x, x) / d

    steps = np.arange(T, 0, -1)
    logs = [
        TrajectoryLog(step=steps, **{k: np.ascontiguousarray(v[:, i]) for k, v in rec.items()})
        for i in range(n)
    ]
    return x, logs


def sample_trajectory(cond, uncond, sched, params, guidance_space="eps", seed=0):
    """Single-trajectory :func:`sample_batch`; returns ``((d,) sample, TrajectoryLog)``."""
    x, logs = sample_batch(cond, uncond, sched, params, guidance_space, seed, 1)
    return x[0], logs[0]

