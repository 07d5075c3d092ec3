"""Problem instances for the two-species cooperative free-boundary system.

The model is

    u_t = d1 u_xx - a u + b v - F(u)
    v_t = d2 v_xx + c u - d v - G(v)      on g(t) < x < h(t)

with zero Dirichlet data at both fronts, and the fronts move by

    h' = -mu (v_x + rho u_x) at x = h,    g' = -mu (v_x + rho u_x) at x = g.

Loss terms are restricted to power laws ``kappa * z**p`` with ``p > 1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import DomainError

__all__ = [
    "NonlinearitySpec",
    "ModelParams",
    "InitialData",
    "validate",
    "eval_loss",
    "make_initial_preset",
    "check_initial",
    "reference_params",
]


@dataclass(frozen=True)
class NonlinearitySpec:
    """Loss function ``F(z) = kappa * z**p``."""

    kappa: float = 1.0
    p: float = 2.0

    def value(self, z):
        """Vectorised ``F``; negative round-off values are treated as zero."""
        z = np.maximum(z, 0.0)
        return self.kappa * np.power(z, self.p)

    def derivative(self, z):
        z = np.maximum(z, 0.0)
        return self.kappa * self.p * np.power(z, self.p - 1.0)

    def to_dict(self):
        return {"kappa": self.kappa, "p": self.p}

    @classmethod
    def from_dict(cls, data):
        return cls(kappa=float(data["kappa"]), p=float(data["p"]))


def eval_loss(spec: NonlinearitySpec, zeta: float) -> tuple[float, float]:
    """Return ``(F(zeta), F'(zeta))`` for a scalar ``zeta >= 0``."""
    zeta = float(zeta)
    if not zeta >= 0.0:
        raise DomainError(f"loss argument must be nonnegative, got {zeta!r}")
    value = spec.kappa * zeta**spec.p
    deriv = spec.kappa * spec.p * zeta ** (spec.p - 1.0) if zeta > 0.0 else 0.0
    return value, deriv


_SCALARS = ("d1", "d2", "a", "b", "c", "d", "mu", "rho")


@dataclass(frozen=True)
class ModelParams:
    d1: float = 1.0
    d2: float = 1.0
    a: float = 1.0
    b: float = 2.0
    c: float = 2.0
    d: float = 1.0
    mu: float = 1.0
    rho: float = 1.0
    F_spec: NonlinearitySpec = field(default_factory=NonlinearitySpec)
    G_spec: NonlinearitySpec = field(default_factory=NonlinearitySpec)

    @property
    def cooperation_margin(self) -> float:
        """``b*c - a*d``; positive under the standing assumption."""
        return self.b * self.c - self.a * self.d

    def reaction(self, u, v):
        """Right-hand sides ``(f1, f2)`` of the kinetic system."""
        f1 = -self.a * u + self.b * v - self.F_spec.value(u)
        f2 = self.c * u - self.d * v - self.G_spec.value(v)
        return f1, f2

    def with_updates(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def to_dict(self):
        out = {name: getattr(self, name) for name in _SCALARS}
        out["F_spec"] = self.F_spec.to_dict()
        out["G_spec"] = self.G_spec.to_dict()
        return out

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise KeyError(f"unknown parameter fields: {sorted(unknown)}")
        kwargs = {name: float(data[name]) for name in _SCALARS if name in data}
        for name in ("F_spec", "G_spec"):
            if name in data:
                kwargs[name] = NonlinearitySpec.from_dict(data[name])
        return cls(**kwargs)


def reference_params(**changes) -> ModelParams:
    """The symmetric reference instance d1=d2=a=d=1, b=c=2, F=G=z^2, mu=rho=1."""
    return replace(ModelParams(), **changes)


def _check_spec(name, spec, report):
    if not (math.isfinite(spec.kappa) and spec.kappa > 0):
        report.append(f"{name}.kappa must be positive (got {spec.kappa})")
    if not (math.isfinite(spec.p) and spec.p > 1):
        report.append(f"{name}.p: exponent must exceed 1 (got {spec.p})")
    elif spec.p < 2:
        warnings.warn(
            f"{name}.p = {spec.p} < 2: loss is C^1 but not C^2 at the origin",
            stacklevel=3,
        )


def validate(params: ModelParams, require_H: bool = True) -> list[str]:
    """List every violated invariant of ``params``; an empty list means valid.

    Never raises.
    """
    report: list[str] = []
    for name in _SCALARS:
        value = getattr(params, name)
        finite = isinstance(value, (int, float)) and math.isfinite(value)
        # rho = 0 is allowed: the fronts are then driven by v alone
        if name == "rho":
            if not (finite and value >= 0):
                report.append(f"rho must be nonnegative (got {value!r})")
        elif not (finite and value > 0):
            report.append(f"{name} must be positive (got {value!r})")
    _check_spec("F_spec", params.F_spec, report)
    _check_spec("G_spec", params.G_spec, report)
    if require_H and not params.cooperation_margin > 0:
        report.append(
            f"bc−ad ≤ 0: cooperation condition fails (bc−ad = {params.cooperation_margin:g})"
        )
    return report


@dataclass(frozen=True)
class InitialData:
    """Node values of ``(u0, v0)`` on a uniform grid over ``[-h0, h0]``."""

    h0: float
    x: np.ndarray
    u0: np.ndarray
    v0: np.ndarray

    def __post_init__(self):
        for name in ("x", "u0", "v0"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def check_initial(initial: InitialData) -> list[str]:
    report = []
    if not initial.h0 > 0:
        report.append("h0 must be positive")
    if not (initial.x.shape == initial.u0.shape == initial.v0.shape) or initial.x.size < 3:
        report.append("x, u0, v0 must be equal-length arrays with at least 3 nodes")
        return report
    if not np.isclose(initial.x[0], -initial.h0) or not np.isclose(initial.x[-1], initial.h0):
        report.append("grid must span [-h0, h0]")
    for name in ("u0", "v0"):
        arr = getattr(initial, name)
        if arr[0] != 0.0 or arr[-1] != 0.0:
            report.append(f"{name} must vanish at ±h0")
        if not np.all(arr[1:-1] > 0.0):
            report.append(f"{name} must be positive at interior nodes")
    return report


def make_initial_preset(h0: float, amp_u: float, amp_v: float, n: int = 201) -> InitialData:
    """Cosine bumps ``amp * cos(pi x / (2 h0))`` sampled on ``n`` uniform nodes."""
    if not (h0 > 0 and amp_u > 0 and amp_v > 0):
        raise DomainError("h0 and amplitudes must be positive")
    if int(n) != n or n < 3:
        raise DomainError("need at least 3 nodes")
    x = np.linspace(-h0, h0, int(n))
    shape = np.cos(np.pi * x / (2.0 * h0))
    shape[0] = shape[-1] = 0.0
    return InitialData(h0=float(h0), x=x, u0=amp_u * shape, v0=amp_v * shape)
