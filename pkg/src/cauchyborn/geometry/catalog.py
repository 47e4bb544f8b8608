"""Named Cauchy surfaces used by the experiments and tests.

All surfaces live on the periodic box ``[0, 2*pi)**d`` unless a domain is
given.  ``make_surface`` builds one from a JSON-style spec such as
``{"kind": "sine", "amplitude": 0.3}``.
"""
from __future__ import annotations

import math

import numpy as np

from .surface import CauchySurfaceGraph, GeometryError

DEFAULT_SAMPLES = {1: 1 << 14, 2: 256, 3: 48}


def _grid(dim, samples, lo, hi):
    axes = [lo + (hi - lo) * np.arange(samples) / samples for _ in range(dim)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def _build(values_fn, dim, samples, lo, hi, bound):
    samples = samples or DEFAULT_SAMPLES.get(dim, 32)
    x = _grid(dim, samples, lo, hi)
    heights = values_fn(x)
    return CauchySurfaceGraph(lo=[lo] * dim, hi=[hi] * dim, heights=heights,
                              periodic=True, lipschitz_bound=bound)


def flat(dim=1, height=0.0, samples=None, lo=0.0, hi=2 * math.pi):
    return _build(lambda x: np.full(x.shape[:-1], float(height)), dim, samples, lo, hi, 0.0)


def sine(amplitude=0.3, dim=1, samples=None, lo=0.0, hi=2 * math.pi):
    """``amplitude * sin(x1) * cos(x2) * ...``; Lipschitz constant at most ``amplitude``
    when the box has length ``2*pi``."""
    scale = 2 * math.pi / (hi - lo)

    def f(x):
        out = amplitude * np.sin(scale * (x[..., 0] - lo))
        for k in range(1, dim):
            out = out * np.cos(scale * (x[..., k] - lo))
        return out

    return _build(f, dim, samples, lo, hi, min(0.999, abs(amplitude) * scale + 1e-9))


def bump(amplitude=0.4, width=2.0, center=math.pi, dim=1, samples=None, lo=0.0, hi=2 * math.pi):
    """Smooth periodic bump ``a * exp(w * (sum cos(x_k - c) - d))``."""
    scale = 2 * math.pi / (hi - lo)

    def f(x):
        s = np.cos(scale * (x - center)).sum(axis=-1) - dim
        return amplitude * np.exp(width * s)

    # |grad| <= a * w * scale * sqrt(d) * max(sin * exp(w (cos - 1)))
    bound = abs(amplitude) * width * scale * math.sqrt(dim)
    if bound >= 1:
        raise GeometryError("bump is not spacelike for these parameters")
    return _build(f, dim, samples, lo, hi, min(0.999, bound + 1e-9))


def random_lipschitz(seed: int, bound=0.8, dim=1, modes=6, max_wavenumber=4, samples=None,
                     lo=0.0, hi=2 * math.pi):
    """Random trigonometric surface with Lipschitz constant at most ``bound``.

    Each gradient component is bounded by ``sum_j a_j |k_j,i| * scale``; the
    amplitudes are scaled so the Euclidean norm of those bounds is ``bound``.
    The same bound holds for every Kuhn interpolant of the samples.
    """
    if not 0 < bound < 1:
        raise GeometryError("bound must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    scale = 2 * math.pi / (hi - lo)
    ks = rng.integers(-max_wavenumber, max_wavenumber + 1, size=(modes, dim))
    ks[np.all(ks == 0, axis=1), 0] = 1
    amps = rng.random(modes) + 0.1
    phases = rng.uniform(0, 2 * math.pi, modes)
    comp = (amps[:, None] * np.abs(ks) * scale).sum(axis=0)
    amps *= bound / math.sqrt((comp ** 2).sum())

    def f(x):
        arg = scale * np.tensordot(x - lo, ks.T, axes=1) + phases
        return (amps * np.sin(arg)).sum(axis=-1)

    return _build(f, dim, samples, lo, hi, bound)


CATALOG = {
    "flat": flat,
    "sine": sine,
    "bump": bump,
    "random_lipschitz": random_lipschitz,
}


def make_surface(spec: dict) -> CauchySurfaceGraph:
    spec = dict(spec)
    kind = spec.pop("kind")
    if kind not in CATALOG:
        raise GeometryError(f"unknown surface kind {kind!r}; known: {sorted(CATALOG)}")
    if "domain" in spec:
        spec["lo"], spec["hi"] = spec.pop("domain")
    return CATALOG[kind](**spec)
