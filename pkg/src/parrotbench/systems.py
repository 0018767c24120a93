"""Built-in suite of chaotic benchmark systems.

Twelve named ODEs spanning correlation dimensions from roughly 1.8 to 4.
Vector fields are vectorized over leading axes (state shape ``(..., dim)``).
Each ``reference_lle`` below was estimated with
:func:`parrotbench.dynsys.estimate_lle_benettin` over 1000 Lyapunov times and
cross-checked against two-trajectory divergence; transients are fixed at 20
Lyapunov times.
"""

from __future__ import annotations

import numpy as np

from .dynsys import TRANSIENT_LYAPUNOV_TIMES, SystemSpec

__all__ = ["REGISTRY", "get_system", "list_systems"]


def _stack(*comps):
    return np.stack(comps, axis=-1)


def _lorenz(s):
    x, y, z = s[..., 0], s[..., 1], s[..., 2]
    return _stack(10.0 * (y - x), x * (28.0 - z) - y, x * y - (8.0 / 3.0) * z)


def _rossler(s):
    x, y, z = s[..., 0], s[..., 1], s[..., 2]
    return _stack(-y - z, x + 0.2 * y, 0.2 + z * (x - 5.7))


def _thomas(s):
    b = 0.18
    x, y, z = s[..., 0], s[..., 1], s[..., 2]
    return _stack(np.sin(y) - b * x, np.sin(z) - b * y, np.sin(x) - b * z)


def _chua(s):
    alpha, beta = 15.6, 28.0
    m0, m1 = -8.0 / 7.0, -5.0 / 7.0
    x, y, z = s[..., 0], s[..., 1], s[..., 2]
    fx = m1 * x + 0.5 * (m0 - m1) * (np.abs(x + 1.0) - np.abs(x - 1.0))
    return _stack(alpha * (y - x - fx), x - y + z, -beta * y)


def _halvorsen(s):
    a = 1.4
    x, y, z = s[..., 0], s[..., 1], s[..., 2]
    return _stack(
        -a * x - 4.0 * y - 4.0 * z - y * y,
        -a * y - 4.0 * z - 4.0 * x - z * z,
        -a * z - 4.0 * x - 4.0 * y - x * x,
    )


def _chen(s):
    a, b, c = 35.0, 3.0, 28.0
    x, y, z = s[..., 0], s[..., 1], s[..., 2]
    return _stack(a * (y - x), (c - a) * x - x * z + c * y, x * y - b * z)


def _aizawa(s):
    a, b, c, d, e, f = 0.95, 0.7, 0.6, 3.5, 0.25, 0.1
    x, y, z = s[..., 0], s[..., 1], s[..., 2]
    return _stack(
        (z - b) * x - d * y,
        d * x + (z - b) * y,
        c + a * z - z**3 / 3.0 - (x * x + y * y) * (1.0 + e * z) + f * z * x**3,
    )


def _dadras(s):
    a, b, c, d, e = 3.0, 2.7, 1.7, 2.0, 9.0
    x, y, z = s[..., 0], s[..., 1], s[..., 2]
    return _stack(y - a * x + b * y * z, c * y - x * z + z, d * x * y - e * z)


def _sprott_b(s):
    x, y, z = s[..., 0], s[..., 1], s[..., 2]
    return _stack(y * z, x - y, 1.0 - x * y)


def _rucklidge(s):
    kappa, lam = 2.0, 6.7
    x, y, z = s[..., 0], s[..., 1], s[..., 2]
    return _stack(-kappa * x + lam * y - y * z, x, -z + y * y)


def _double_scroll(s):
    # Piecewise-linear jerk flow with a two-lobe attractor.
    a = 0.8
    x, y, z = s[..., 0], s[..., 1], s[..., 2]
    return _stack(y, z, -a * (z + y + x - np.sign(x)))


def _lorenz96(s):
    forcing = 8.0
    return (np.roll(s, -1, axis=-1) - np.roll(s, 2, axis=-1)) * np.roll(
        s, 1, axis=-1
    ) - s + forcing


def _spec(name, dim, field, ic, lle):
    return SystemSpec(
        name=name,
        dim=dim,
        vector_field=field,
        default_ic=np.asarray(ic, dtype=float),
        reference_lle=lle,
        transient_time=TRANSIENT_LYAPUNOV_TIMES / lle,
    )


REGISTRY: dict[str, SystemSpec] = {
    spec.name: spec
    for spec in [
        _spec("lorenz", 3, _lorenz, [1.0, 1.0, 1.0], 0.911),
        _spec("rossler", 3, _rossler, [1.0, 1.0, 0.0], 0.070),
        _spec("thomas", 3, _thomas, [1.1, 1.1, -0.01], 0.034),
        _spec("chua", 3, _chua, [0.7, 0.0, 0.0], 0.44),
        _spec("halvorsen", 3, _halvorsen, [-1.48, -1.51, 2.04], 0.674),
        _spec("chen", 3, _chen, [-3.0, 2.0, 20.0], 1.97),
        _spec("aizawa", 3, _aizawa, [0.1, 0.0, 0.0], 0.094),
        _spec("dadras", 3, _dadras, [1.1, 2.1, -2.0], 0.378),
        _spec("sprott_b", 3, _sprott_b, [0.05, 0.05, 0.05], 0.210),
        _spec("rucklidge", 3, _rucklidge, [1.0, 0.0, 4.5], 0.190),
        _spec("double_scroll", 3, _double_scroll, [0.01, 0.01, 0.0], 0.051),
        _spec("lorenz96", 5, _lorenz96, [8.01, 8.0, 8.0, 8.0, 8.0], 0.45),
    ]
}


def get_system(name: str) -> SystemSpec:
    """Look up a built-in system by name (case-insensitive)."""
    key = name.lower()
    if key not in REGISTRY:
        known = ", ".join(sorted(REGISTRY))
        raise KeyError(f"unknown system {name!r}; registered systems: {known}")
    return REGISTRY[key]


def list_systems() -> list[str]:
    return sorted(REGISTRY)
