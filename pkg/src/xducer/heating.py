"""Optical-absorption heating of the mechanical mode during readout.

The hot bath fills the mode as a saturating exponential,

    n_added(n_o, tau) = n_hot(n_o) * (1 - exp(-2 pi gamma_h(n_o) tau))

with power-law photon-number scaling of the saturation occupancy and the
fill rate about a reference photon number.  The defaults are calibrated to
0.5 quanta at n_o = 45, tau = 500 ns; away from that anchor the numbers are
model extrapolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Sequence

import numpy as np

from .core import TWO_PI
from .optimize import ObjectiveSpec, nelder_mead


@dataclass(frozen=True)
class HeatingModel:
    n_hot_ref: float = 1.0
    gamma_h_ref: float = math.log(2.0) / (TWO_PI * 500e-9)
    n_o_ref: float = 45.0
    alpha_n: float = 0.33
    alpha_g: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{f.name} must be finite and >= 0, got {v!r}")
        if self.n_o_ref <= 0:
            raise ValueError("n_o_ref must be > 0")

    @classmethod
    def from_mapping(cls, m) -> "HeatingModel":
        return cls(**{f.name: float(m[f.name]) for f in fields(cls)})

    def n_hot(self, n_o):
        return self.n_hot_ref * np.power(np.asarray(n_o, dtype=float) / self.n_o_ref, self.alpha_n)

    def gamma_h(self, n_o):
        return self.gamma_h_ref * np.power(np.asarray(n_o, dtype=float) / self.n_o_ref, self.alpha_g)


def added_noise(model: HeatingModel, n_o, tau):
    """Added noise quanta after a readout pulse; broadcasts over arrays."""
    n_o = np.asarray(n_o, dtype=float)
    tau = np.asarray(tau, dtype=float)
    out = model.n_hot(n_o) * -np.expm1(-TWO_PI * model.gamma_h(n_o) * tau)
    return float(out) if out.ndim == 0 else out


class InfeasibleAnchor(ValueError):
    pass


def calibrate_heating(anchor: tuple[float, float, float], free: Sequence[str] = ("gamma_h_ref",),
                      base: HeatingModel | None = None,
                      bounds: dict[str, tuple[float, float]] | None = None) -> HeatingModel:
    """Fit ``free`` parameters of ``base`` so the model hits ``anchor``.

    ``anchor`` is ``(n_o, tau, n_added)``.  A single free ``gamma_h_ref`` or
    ``n_hot_ref`` is solved in closed form; anything else goes through the
    simplex minimizer on the squared relative residual.  Unless ``n_o_ref``
    is itself free, the anchor photon number becomes the reference point.
    """
    n_o, tau, target = anchor
    if not target > 0:
        raise InfeasibleAnchor("anchor n_added must be > 0 for a positive-rate model")
    if not (n_o > 0 and tau > 0):
        raise InfeasibleAnchor("anchor n_o and tau must be > 0")
    base = base or HeatingModel()
    free = tuple(free)
    names = {f.name for f in fields(HeatingModel)}
    if not free or any(p not in names for p in free):
        raise ValueError(f"free parameters must be drawn from {sorted(names)}")
    base = replace(base, n_o_ref=n_o) if "n_o_ref" not in free else base

    if free == ("gamma_h_ref",):
        n_hot = float(base.n_hot(n_o))
        if target >= n_hot:
            raise InfeasibleAnchor(f"n_added={target} is not below saturation n_hot={n_hot}")
        scale = (n_o / base.n_o_ref) ** base.alpha_g
        return replace(base, gamma_h_ref=-math.log1p(-target / n_hot) / (TWO_PI * tau * scale))
    if free == ("n_hot_ref",):
        fill = -math.expm1(-TWO_PI * float(base.gamma_h(n_o)) * tau)
        if fill <= 0:
            raise InfeasibleAnchor("heating rate is zero; anchor unreachable")
        return replace(base, n_hot_ref=target / (fill * (n_o / base.n_o_ref) ** base.alpha_n))

    default_bounds = {"n_hot_ref": (1e-6, 1e3), "gamma_h_ref": (1.0, 1e9),
                      "n_o_ref": (1e-3, 1e6), "alpha_n": (0.0, 3.0), "alpha_g": (0.0, 3.0)}
    default_bounds.update(bounds or {})
    # rate-like parameters are searched in log space
    logs = [p in ("n_hot_ref", "gamma_h_ref", "n_o_ref") for p in free]
    box = [tuple(math.log(b) for b in default_bounds[p]) if lg else default_bounds[p]
           for p, lg in zip(free, logs)]

    def model_at(x):
        vals = {p: (math.exp(v) if lg else v) for p, v, lg in zip(free, x, logs)}
        return replace(base, **vals)

    def cost(x):
        return (added_noise(model_at(x), n_o, tau) / target - 1.0) ** 2

    x0 = []
    for p, lg, (lo, hi) in zip(free, logs, box):
        v = getattr(base, p)
        v = math.log(v) if lg and v > 0 else v
        x0.append(min(max(v, lo), hi))
    res = nelder_mead(ObjectiveSpec(cost, box), x0, tol=1e-13, max_iter=20000)
    fitted = model_at(res.x)
    if abs(added_noise(fitted, n_o, tau) / target - 1.0) > 1e-9:
        raise InfeasibleAnchor("anchor not reachable within parameter bounds")
    return fitted
