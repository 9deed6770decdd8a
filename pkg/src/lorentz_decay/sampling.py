"""Reproducible random draws.

All randomness goes through ``numpy.random.Generator(numpy.random.Philox(seed))``.
Philox4x64-10 is a counter-based generator: a stream is fully determined by
the 64-bit key (the seed) and the counter, so the same seed reproduces the
same draws on every platform.
"""

from __future__ import annotations

import numpy as np

from .material import MaterialParams, Oscillator, validate_material


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def random_oscillators(rng: np.random.Generator, n: int, kind: str, damped: bool = True) -> tuple[Oscillator, ...]:
    """Up to ``n`` oscillators with distinct ``(alpha, omega0)``.

    ``kind`` is ``"drude"``, ``"lorentz"`` or ``"mixed"``.  Repeated pairs
    (only possible for undamped Drude terms) are dropped.
    """
    out = []
    for j in range(n):
        is_drude = kind == "drude" or (kind == "mixed" and j % 2 == 0)
        Omega = rng.uniform(0.3, 2.0)
        omega0 = 0.0 if is_drude else rng.uniform(0.2, 3.0)
        alpha = rng.uniform(0.05, 2.0) if damped else 0.0
        out.append(Oscillator(Omega, omega0, alpha))
    uniq = {}
    for o in out:
        uniq.setdefault((o.alpha, o.omega0), o)
    return tuple(uniq.values())


def random_material(rng: np.random.Generator, kind: str = "mixed", max_terms: int = 2, damped: bool = True) -> MaterialParams:
    """Random valid material; ``damped=False`` gives an all-``alpha = 0`` medium."""
    n_e = int(rng.integers(1, max_terms + 1))
    n_m = int(rng.integers(1, max_terms + 1))
    mat = MaterialParams(
        eps0=rng.uniform(0.5, 2.0),
        mu0=rng.uniform(0.5, 2.0),
        electric=random_oscillators(rng, n_e, kind, damped),
        magnetic=random_oscillators(rng, n_m, kind, damped),
    )
    return validate_material(mat)
