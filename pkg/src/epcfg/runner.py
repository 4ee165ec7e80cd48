"""File-level entry points driven by the CLI."""

import json
import os

import numpy as np

from .diffusion import sample_batch
from .guidance import ep_cfg, ep_rescale
from .io import read_latent, write_latent
from .exceptions import ShapeMismatch
from .latent import DEFAULT_WINDOW
from .metrics import energy_distance, moment_stats, trace_summary
from .report import write_samples_csv, write_trace_csv

# Largest sample set used for the energy distance against reference draws;
# the pairwise matrices are quadratic in this.
MAX_DISTANCE_SAMPLES = 4096


def _read_pair(a_path, b_path, names):
    a = read_latent(a_path)
    b = read_latent(b_path)
    if a.shape != b.shape:
        raise ShapeMismatch(f"{names[0]} shape {a.shape} != {names[1]} shape {b.shape}")
    return a, b


def run_transform(cond_path, uncond_path, params, out_path):
    """Guide one pair of latent files and write the result; returns the report."""
    x_c, x_u = _read_pair(cond_path, uncond_path, ("cond", "uncond"))
    out, report = ep_cfg(x_c, x_u, params)
    write_latent(out_path, out)
    return report


def run_rescale(cfg_path, cond_path, out_path, window=DEFAULT_WINDOW):
    """Energy-rescale an already guided latent file against its conditional one."""
    x_cfg, x_c = _read_pair(cfg_path, cond_path, ("cfg", "cond"))
    out, report = ep_rescale(x_cfg, x_c, window)
    write_latent(out_path, out)
    return report


def _lambda_dirname(lam):
    return f"lambda_{lam:g}"


def simulate_one(config, strength):
    """Run one batch at ``strength``; returns ``(samples, summary, info)``."""
    samples, logs = sample_batch(
        config.cond,
        config.uncond,
        config.schedule(),
        config.params(strength),
        config.guidance_space,
        config.seed,
        config.batch,
    )
    summary = trace_summary(logs)
    reference = config.cond.sample(config.batch, np.random.default_rng([config.seed, 1]))
    k = min(config.batch, MAX_DISTANCE_SAMPLES)
    mean, m2 = moment_stats(samples)
    _, ref_m2 = moment_stats(reference)
    info = {
        "lambda": strength,
        "mode": config.mode.value,
        "guidance_space": config.guidance_space,
        "l": config.l,
        "h": config.h,
        "phi": config.phi,
        "steps": config.steps,
        "batch": config.batch,
        "seed": config.seed,
        "terminal_mean": mean.tolist(),
        "terminal_second_moment": m2,
        "reference_second_moment": ref_m2,
        "energy_distance": energy_distance(samples[:k], reference[:k]),
        "overall_mean_ratio": float(summary.mean_ratio.mean()),
        "overall_fallback_frac": float(summary.fallback_frac.mean()),
    }
    return samples, summary, info


def run_simulate(config):
    """Write ``trace.csv``, ``samples.csv`` and ``summary.json`` per strength.

    Each strength in ``config.lambdas`` gets its own ``lambda_<value>``
    subdirectory of ``config.output_dir``. Returns the list of directories.
    """
    dirs = []
    for lam in config.lambdas:
        out_dir = os.path.join(config.output_dir, _lambda_dirname(lam))
        os.makedirs(out_dir, exist_ok=True)
        samples, summary, info = simulate_one(config, lam)
        write_trace_csv(os.path.join(out_dir, "trace.csv"), summary)
        write_samples_csv(os.path.join(out_dir, "samples.csv"), samples)
        with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
            json.dump(info, fh, indent=2, sort_keys=True)
            fh.write("\n")
        dirs.append(out_dir)
    return dirs

