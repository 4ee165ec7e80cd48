"""scikit-learn compatible wrappers.

:class:`GuidanceTransformer` applies a guidance kernel to a batch of
(conditional, unconditional) prediction pairs, so it can sit in a
``Pipeline`` or be tuned with ``GridSearchCV``-style tooling through
``get_params`` / ``set_params``. :class:`GuidedSampler` exposes the toy
diffusion sampler the same way.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_latent
from .diffusion import sample_batch, vp_schedule
from .exceptions import ShapeMismatch
from .guidance import GuidanceParams, ep_cfg, guide_rows
from .latent import RobustWindow


def stack_pairs(X_cond, X_uncond):
    """Stack two ``(n, ...)`` batches into the ``(n, 2, ...)`` layout used by
    :class:`GuidanceTransformer`."""
    X_cond = np.asarray(X_cond, dtype=np.float64)
    X_uncond = np.asarray(X_uncond, dtype=np.float64)
    if X_cond.shape != X_uncond.shape:
        raise ShapeMismatch(f"{X_cond.shape} != {X_uncond.shape}")
    return np.stack([X_cond, X_uncond], axis=1)


class GuidanceTransformer(TransformerMixin, BaseEstimator):
    """Classifier-free guidance as a stateless transformer.

    Parameters
    ----------
    strength : float, default=7.5
        Guidance strength, at least 1.
    mode : {"ep", "plain", "std"}, default="ep"
    l, h : float, default=45, 55
        Percentile band for the robust energies.
    phi : float, default=0.7
        Blend factor, only used by ``mode="std"``.

    ``X`` has shape ``(n_samples, 2, *latent_shape)`` with conditional
    predictions in ``X[:, 0]`` and unconditional ones in ``X[:, 1]``; see
    :func:`stack_pairs`. Each sample is guided independently and
    ``transform`` returns shape ``(n_samples, *latent_shape)``.
    """

    def __init__(self, strength=7.5, mode="ep", l=45.0, h=55.0, phi=0.7):
        self.strength = strength
        self.mode = mode
        self.l = l
        self.h = h
        self.phi = phi

    def _split(self, X):
        X = check_latent(X, "X")
        if X.ndim < 3 or X.shape[1] != 2:
            raise ShapeMismatch(f"expected shape (n_samples, 2, ...), got {X.shape}")
        n = X.shape[0]
        return X[:, 0].reshape(n, -1), X[:, 1].reshape(n, -1), X.shape[2:]

    def fit(self, X, y=None):
        _, X_u, latent_shape = self._split(X)
        self.params_ = GuidanceParams(
            self.strength, self.mode, RobustWindow(self.l, self.h), self.phi
        )
        self.latent_shape_ = latent_shape
        self.n_features_in_ = X_u.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        X_c, X_u, latent_shape = self._split(X)
        if latent_shape != self.latent_shape_:
            raise ShapeMismatch(f"fitted on latents of shape {self.latent_shape_}, got {latent_shape}")
        out = guide_rows(X_c, X_u, self.params_)[0]
        return out.reshape((X_c.shape[0],) + latent_shape)

    def guide(self, x_c, x_u):
        """Guide a single pair; returns ``(output, EnergyReport)``."""
        check_is_fitted(self, "params_")
        return ep_cfg(x_c, x_u, self.params_)


class GuidedSampler(BaseEstimator):
    """Guided DDIM sampling from analytic mixture denoisers.

    ``fit`` takes no data; it only validates and freezes the configuration.
    """

    def __init__(
        self,
        cond=None,
        uncond=None,
        strength=7.5,
        mode="ep",
        l=45.0,
        h=55.0,
        phi=0.7,
        steps=50,
        beta_min=1e-4,
        beta_max=0.2,
        guidance_space="eps",
    ):
        self.cond = cond
        self.uncond = uncond
        self.strength = strength
        self.mode = mode
        self.l = l
        self.h = h
        self.phi = phi
        self.steps = steps
        self.beta_min = beta_min
        self.beta_max = beta_max
        self.guidance_space = guidance_space

    def fit(self, X=None, y=None):
        if self.cond is None or self.uncond is None:
            raise ValueError("cond and uncond mixtures are required")
        self.params_ = GuidanceParams(
            self.strength, self.mode, RobustWindow(self.l, self.h), self.phi
        )
        self.schedule_ = vp_schedule(self.steps, self.beta_min, self.beta_max)
        return self

    def sample(self, n_samples=1, random_state=0):
        """Draw ``n_samples`` guided samples; returns ``(X, logs)``."""
        check_is_fitted(self, "params_")
        return sample_batch(
            self.cond,
            self.uncond,
            self.schedule_,
            self.params_,
            self.guidance_space,
            random_state,
            n_samples,
        )
