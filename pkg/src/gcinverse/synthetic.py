"""Ground-truth potentials with controlled support and norms.

Every kind is built from the cubic bump b(z) = (1 - |z - c|^2 / r^2)^3 on
|z - c| < r, which vanishes together with its first two derivatives at
|z - c| = r.  Random kinds draw from ``numpy.random.default_rng(seed)``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidArgument
from .fields import MatrixField, c1zbar_norm, entry_max, sup_norm
from .geometry import DomainGrid

__all__ = ["PotentialSpec", "KINDS", "bump", "evaluate", "generate", "describe"]

KINDS = ("radial_bump", "gaussian_bump_clipped", "triangular_matrix",
         "random_hermitian_bump", "constant_plus_bump")
VANISHING = ("radial_bump", "gaussian_bump_clipped", "triangular_matrix", "random_hermitian_bump")


@dataclass(frozen=True)
class PotentialSpec:
    kind: str = "radial_bump"
    n: int = 1
    amplitude: float = 1.0
    support_radius: float = 0.5
    center: complex = 0j
    seed: int = 0
    constant: float = 1.0   # only used by constant_plus_bump

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown potential kind {self.kind!r}; expected one of {KINDS}")
        if self.n < 1:
            raise InvalidArgument("n must be >= 1")
        if not self.support_radius > 0:
            raise InvalidArgument("support_radius must be positive")
        if self.kind in ("triangular_matrix", "random_hermitian_bump") and self.n < 2:
            raise InvalidArgument(f"{self.kind} needs n >= 2")
        object.__setattr__(self, "center", complex(self.center))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["center"] = [self.center.real, self.center.imag]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PotentialSpec":
        d = dict(d)
        c = d.get("center", 0.0)
        d["center"] = complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidArgument(f"unknown potential fields {sorted(unknown)}")
        return cls(**d)


def bump(z, center=0j, radius=1.0) -> np.ndarray:
    """(1 - |z - center|^2 / radius^2)^3 inside the disc, 0 outside."""
    s = np.abs(np.asarray(z) - center) ** 2 / radius ** 2
    return np.where(s < 1.0, (1.0 - np.minimum(s, 1.0)) ** 3, 0.0)


def _sub_bumps(spec: PotentialSpec, k: int, rng):
    """k bumps with random centres whose supports stay inside the support disc."""
    out = []
    for _ in range(k):
        rho = 0.4 * spec.support_radius * np.sqrt(rng.uniform())
        c = spec.center + rho * np.exp(2j * np.pi * rng.uniform())
        out.append((c, spec.support_radius - rho))
    return out


def _random_hermitian(n, rng):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    H = 0.5 * (A + A.conj().T)
    return H / np.linalg.norm(H, 2)


def evaluate(spec: PotentialSpec, z) -> np.ndarray:
    """Values at the points ``z``, shape (len(z), n, n)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    n, A, r, c = spec.n, spec.amplitude, spec.support_radius, spec.center
    eye = np.eye(n)
    if spec.kind == "radial_bump":
        return A * bump(z, c, r)[:, None, None] * eye
    if spec.kind == "gaussian_bump_clipped":
        s = np.abs(z - c) ** 2 / r ** 2
        return (A * np.exp(-4.0 * s) * bump(z, c, r))[:, None, None] * eye
    if spec.kind == "constant_plus_bump":
        return (spec.constant + A * bump(z, c, r))[:, None, None] * eye
    rng = np.random.default_rng(spec.seed)
    out = np.zeros((len(z), n, n), dtype=complex)
    if spec.kind == "triangular_matrix":
        # upper triangular entries with distinct profiles; diagonal and strict
        # upper parts do not commute pointwise unless the profiles agree
        subs = _sub_bumps(spec, n * (n + 1) // 2, rng)
        coef = rng.uniform(0.5, 1.0, len(subs)) * np.exp(2j * np.pi * rng.uniform(size=len(subs)))
        coef[: n] = np.abs(coef[: n])
        pos = [(i, i) for i in range(n)] + [(i, j) for i in range(n) for j in range(i + 1, n)]
        for (i, j), (cc, rr), a in zip(pos, subs, coef):
            out[:, i, j] = A * a * bump(z, cc, rr)
        return out
    # random_hermitian_bump
    subs = _sub_bumps(spec, 3, rng)
    for cc, rr in subs:
        out += A * bump(z, cc, rr)[:, None, None] * _random_hermitian(n, rng)[None]
    return out


def _support_ok(spec: PotentialSpec, grid: DomainGrid) -> bool:
    c, r = spec.center, spec.support_radius
    if grid.kind == "disc":
        return abs(c) + r <= grid.radius * (1.0 + 1e-12)
    t = np.linspace(0.0, 2.0 * np.pi, 721)
    ring = c + r * np.exp(1j * t)
    a, b = grid.params
    return bool(np.all((ring.real / a) ** 2 + (ring.imag / b) ** 2 <= 1.0 + 1e-12))


def generate(spec: PotentialSpec, grid: DomainGrid) -> MatrixField:
    """Sample ``spec`` on the interior and boundary nodes of ``grid``."""
    if spec.kind in VANISHING and not _support_ok(spec, grid):
        raise InvalidArgument(
            f"support (center {spec.center}, radius {spec.support_radius}) leaves the domain")
    return MatrixField(grid, evaluate(spec, grid.interior_nodes), evaluate(spec, grid.boundary_nodes))


def describe(v: MatrixField) -> dict:
    """Norms reported alongside a generated potential."""
    d = {"sup": sup_norm(v), "boundary_sup": entry_max(v.boundary) if v.boundary is not None else None}
    if v.grid.kind == "disc":
        d["c1zbar"] = c1zbar_norm(v)
    return d
