"""Discrete planar domains: discs (primary) and ellipses.

Interior nodes live on a polar tensor grid: composite Gauss-Legendre panels in
the (normalized) radius times the trapezoid rule in angle.  Nodes are stored
angle-major, i.e. node ``a * n_r + i`` sits at angle index ``a`` and radial
index ``i``; every structured operator relies on that ordering.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument

__all__ = ["DomainGrid", "make_disc", "make_ellipse", "contains", "RadialRule"]


@dataclass(frozen=True)
class RadialRule:
    """Composite Gauss-Legendre rule on ``[0, radius]``.

    ``breaks`` are the panel end points (including 0 and ``radius``); each panel
    carries ``order`` nodes.
    """

    radius: float
    breaks: tuple
    order: int

    @property
    def n_panels(self) -> int:
        return len(self.breaks) - 1

    def nodes_weights(self):
        x, w = np.polynomial.legendre.leggauss(self.order)
        nodes, weights = [], []
        for a, b in zip(self.breaks[:-1], self.breaks[1:]):
            nodes.append(0.5 * (b - a) * x + 0.5 * (b + a))
            weights.append(0.5 * (b - a) * w)
        return np.concatenate(nodes), np.concatenate(weights)


@dataclass(frozen=True)
class DomainGrid:
    kind: str
    params: tuple
    M: int
    n_theta: int
    radial_order: int
    radial_breaks: tuple = (0.0, 1.0)

    # derived arrays, filled in __post_init__
    radial: RadialRule = field(init=False, repr=False, compare=False)
    r: np.ndarray = field(init=False, repr=False, compare=False)
    r_weights: np.ndarray = field(init=False, repr=False, compare=False)
    theta: np.ndarray = field(init=False, repr=False, compare=False)
    boundary_theta: np.ndarray = field(init=False, repr=False, compare=False)
    boundary_nodes: np.ndarray = field(init=False, repr=False, compare=False)
    boundary_weights: np.ndarray = field(init=False, repr=False, compare=False)
    boundary_normals: np.ndarray = field(init=False, repr=False, compare=False)
    interior_nodes: np.ndarray = field(init=False, repr=False, compare=False)
    interior_weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        rho_rule = RadialRule(1.0, tuple(self.radial_breaks), self.radial_order)
        rho, w_rho = rho_rule.nodes_weights()
        theta = 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta
        t = 2.0 * np.pi * np.arange(self.M) / self.M
        dtheta = 2.0 * np.pi / self.n_theta
        if self.kind == "disc":
            (R,) = self.params
            scale_r = R
            zb = R * np.exp(1j * t)
            wb = np.full(self.M, 2.0 * np.pi * R / self.M)
            nb = np.exp(1j * t)
            zi = R * rho[None, :] * np.exp(1j * theta)[:, None]
            wi = (R * R * rho * w_rho)[None, :] * dtheta * np.ones((self.n_theta, 1))
        else:
            a, b = self.params
            scale_r = 1.0
            zb = a * np.cos(t) + 1j * b * np.sin(t)
            speed = np.sqrt((a * np.sin(t)) ** 2 + (b * np.cos(t)) ** 2)
            wb = speed * 2.0 * np.pi / self.M
            nb = (b * np.cos(t) + 1j * a * np.sin(t)) / speed
            zi = rho[None, :] * (a * np.cos(theta) + 1j * b * np.sin(theta))[:, None]
            wi = (a * b * rho * w_rho)[None, :] * dtheta * np.ones((self.n_theta, 1))
        set_ = object.__setattr__
        set_(self, "radial", RadialRule(scale_r, tuple(scale_r * np.asarray(self.radial_breaks)), self.radial_order))
        set_(self, "r", scale_r * rho)
        set_(self, "r_weights", scale_r * w_rho)
        set_(self, "theta", theta)
        set_(self, "boundary_theta", t)
        set_(self, "boundary_nodes", zb)
        set_(self, "boundary_weights", wb)
        set_(self, "boundary_normals", nb)
        set_(self, "interior_nodes", zi.ravel())
        set_(self, "interior_weights", wi.ravel())
        for name in ("r", "r_weights", "theta", "boundary_theta", "boundary_nodes",
                     "boundary_weights", "boundary_normals", "interior_nodes", "interior_weights"):
            getattr(self, name).setflags(write=False)

    @property
    def n_r(self) -> int:
        return self.radial_order * (len(self.radial_breaks) - 1)

    @property
    def N(self) -> int:
        return self.n_r * self.n_theta

    @property
    def radius(self) -> float:
        if self.kind != "disc":
            raise InvalidArgument("radius is defined for discs only")
        return self.params[0]

    @property
    def area(self) -> float:
        if self.kind == "disc":
            return math.pi * self.params[0] ** 2
        return math.pi * self.params[0] * self.params[1]

    def polar_shape(self, trailing=()):
        return (self.n_theta, self.n_r) + tuple(trailing)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": list(self.params),
            "M": self.M,
            "n_theta": self.n_theta,
            "radial_order": self.radial_order,
            "radial_breaks": list(self.radial_breaks),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DomainGrid":
        return cls(d["kind"], tuple(float(p) for p in d["params"]), int(d["M"]),
                   int(d["n_theta"]), int(d["radial_order"]),
                   tuple(float(b) for b in d.get("radial_breaks", (0.0, 1.0))))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "DomainGrid":
        return cls.from_dict(json.loads(s))


def _check_breaks(breaks):
    breaks = tuple(float(b) for b in breaks)
    if breaks[0] != 0.0 or breaks[-1] != 1.0 or any(b1 <= b0 for b0, b1 in zip(breaks[:-1], breaks[1:])):
        raise InvalidArgument("radial breaks must increase strictly from 0 to 1")
    return breaks


def make_disc(radius: float, M: int, N_radial: int, n_theta: int | None = None,
              breaks=(0.0, 1.0)) -> DomainGrid:
    """Disc of the given radius centred at the origin.

    ``N_radial`` is the number of Gauss-Legendre nodes per radial panel;
    ``breaks`` (normalized to the unit radius) sets the panels.  ``n_theta``
    defaults to ``M``.
    """
    if not radius > 0:
        raise InvalidArgument(f"radius must be positive, got {radius}")
    if M < 8 or M % 2:
        raise InvalidArgument(f"M must be even and >= 8, got {M}")
    if N_radial < 4:
        raise InvalidArgument(f"N_radial must be >= 4, got {N_radial}")
    n_theta = M if n_theta is None else int(n_theta)
    if n_theta < 8 or n_theta % 2:
        raise InvalidArgument(f"n_theta must be even and >= 8, got {n_theta}")
    return DomainGrid("disc", (float(radius),), int(M), n_theta, int(N_radial), _check_breaks(breaks))


def make_ellipse(a: float, b: float, M: int, N: int, n_theta: int | None = None) -> DomainGrid:
    """Ellipse x^2/a^2 + y^2/b^2 < 1 on a mapped polar grid with ``N`` interior nodes."""
    if not (a > 0 and b > 0):
        raise InvalidArgument(f"semi-axes must be positive, got {a}, {b}")
    if M < 8 or M % 2:
        raise InvalidArgument(f"M must be even and >= 8, got {M}")
    if n_theta is None:
        n_r = math.isqrt(N)
        n_theta = N // max(n_r, 1)
    else:
        n_r = N // n_theta
    if n_r < 4 or n_r * n_theta != N or n_theta % 2:
        raise InvalidArgument(f"cannot split N={N} into a polar grid")
    return DomainGrid("ellipse", (float(a), float(b)), int(M), int(n_theta), int(n_r))


def contains(grid: DomainGrid, z) -> bool:
    """True iff ``z`` lies strictly inside the domain."""
    z = complex(z)
    if grid.kind == "disc":
        return abs(z) < grid.params[0]
    a, b = grid.params
    return (z.real / a) ** 2 + (z.imag / b) ** 2 < 1.0
