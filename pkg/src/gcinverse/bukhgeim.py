"""Cauchy-type operators, the lambda-dependent Green operator and the mu equation.

Notation: for a spectral parameter p = (z0, lam) the phase

    phi(z) = lam (z - z0)^2 - conj(lam) conj(z - z0)^2 = 2i Im(lam (z - z0)^2)

is purely imaginary, so exp(phi) has unit modulus.  With the area Cauchy
transform T and its conjugate Cbar w = conj(T conj(w)),

    Tbar_p u = exp(-phi) Cbar(exp(phi) u),        g_p u = T(Tbar_p u) / 4,

and d/dzbar (g_p u) = Tbar_p u / 4 exactly, which is how C^1_zbar norms of
g_p-images are measured without numerical differentiation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import (InvalidArgument, LambdaCapExceeded, LambdaTooSmall,
                     NotUniquelySolvable)
from .fields import MatrixField, entry_max
from .geometry import DomainGrid, contains
from .polar import CauchyOperator

log = logging.getLogger(__name__)

__all__ = ["SpectralParam", "NeumannReport", "oscillatory_weight", "cauchy_T", "cauchy_Tbar",
           "green_apply", "green_apply_dbar", "solve_mu", "amplitude_h", "amplitude_h_k",
           "moment_W", "lambda_threshold", "green_kernel", "green_kernel_row", "neumann_terms",
           "first_contraction", "resolved_disc"]

DENSE_MU_LIMIT = 3000


@dataclass(frozen=True)
class SpectralParam:
    """Centre ``z0`` and spectral parameter ``lam`` (serialized as ``lambda``)."""

    z0: complex
    lam: complex

    def __post_init__(self):
        object.__setattr__(self, "z0", complex(self.z0))
        object.__setattr__(self, "lam", complex(self.lam))
        if not (np.isfinite(self.z0) and np.isfinite(self.lam)):
            raise InvalidArgument("z0 and lambda must be finite")

    def phase(self, z) -> np.ndarray:
        """Imaginary part of phi(z); phi = 1j * phase."""
        return 2.0 * np.imag(self.lam * (np.asarray(z) - self.z0) ** 2)

    def weight(self, z) -> np.ndarray:
        """exp(phi(z)), unit modulus by construction."""
        return np.exp(1j * self.phase(z))

    def growth(self, z) -> np.ndarray:
        """Re(lam (z - z0)^2): log-modulus of exp(lam (z - z0)^2)."""
        return np.real(self.lam * (np.asarray(z) - self.z0) ** 2)

    def to_dict(self) -> dict:
        return {"z0": [self.z0.real, self.z0.imag], "lambda": [self.lam.real, self.lam.imag]}

    @classmethod
    def from_dict(cls, d: dict) -> "SpectralParam":
        z0, lam = d["z0"], d["lambda"]
        return cls(complex(z0[0], z0[1]), complex(lam[0], lam[1]))


@dataclass
class NeumannReport:
    k: int
    contraction_estimates: list = field(default_factory=list)
    converged: bool = False

    @property
    def delta(self) -> float:
        """Largest measured step ratio (0 when no step was taken)."""
        return max(self.contraction_estimates) if self.contraction_estimates else 0.0

    def tail_bound(self, k: int | None = None) -> float:
        """delta^{k+1} / (1 - delta), the Neumann remainder bound."""
        k = self.k if k is None else k
        d = self.delta
        return d ** (k + 1) / (1.0 - d) if d < 1 else math.inf

    def to_dict(self) -> dict:
        return {"k": self.k, "contraction_estimates": list(map(float, self.contraction_estimates)),
                "converged": self.converged}


def oscillatory_weight(z, p: SpectralParam) -> np.ndarray:
    return p.weight(z)


@lru_cache(maxsize=16)
def _cauchy(grid: DomainGrid) -> CauchyOperator:
    return CauchyOperator(grid)


def _check(u: MatrixField, p: SpectralParam | None = None):
    if u.grid.kind != "disc":
        raise InvalidArgument("Cauchy-type operators are implemented on disc grids")
    if p is not None and not contains(u.grid, p.z0):
        raise InvalidArgument(f"z0={p.z0} must lie inside the domain")


# --- raw array versions: values (N, *trail) -> (interior, boundary) -------

def _T(grid, vals):
    return _cauchy(grid).apply(vals, boundary=True)


def _Tbar(grid, vals, p):
    w_in = p.weight(grid.interior_nodes).reshape((-1,) + (1,) * (vals.ndim - 1))
    w_b = p.weight(grid.boundary_nodes).reshape((-1,) + (1,) * (vals.ndim - 1))
    ti, tb = _cauchy(grid).apply(np.conj(w_in * vals), boundary=True)
    return np.conj(w_in * ti), np.conj(w_b * tb)


def _green(grid, vals, p):
    """(g u, dbar g u) on interior and boundary nodes."""
    bi, bb = _Tbar(grid, vals, p)
    gi, gb = _T(grid, bi)
    return (0.25 * gi, 0.25 * gb), (0.25 * bi, 0.25 * bb)


def cauchy_T(u: MatrixField) -> MatrixField:
    """Area Cauchy transform at interior and boundary nodes."""
    _check(u)
    vi, vb = _T(u.grid, u.values)
    return MatrixField(u.grid, vi, vb)


def cauchy_Tbar(u: MatrixField, p: SpectralParam) -> MatrixField:
    """Oscillatory conjugate Cauchy transform Tbar_{z0,lam} u."""
    _check(u)
    vi, vb = _Tbar(u.grid, u.values, p)
    return MatrixField(u.grid, vi, vb)


def green_apply(u: MatrixField, p: SpectralParam) -> MatrixField:
    """g_{z0,lam} u = T Tbar u / 4."""
    _check(u)
    (gi, gb), _ = _green(u.grid, u.values, p)
    return MatrixField(u.grid, gi, gb)


def green_apply_dbar(u: MatrixField, p: SpectralParam):
    """``(g u, d/dzbar g u)`` as fields with boundary samples."""
    _check(u)
    (gi, gb), (di, db) = _green(u.grid, u.values, p)
    return MatrixField(u.grid, gi, gb), MatrixField(u.grid, di, db)


def _c1_norm(pair) -> float:
    (gi, gb), (di, db) = pair
    return max(entry_max(gi), entry_max(gb), entry_max(di), entry_max(db))


def c1zbar_norm_exact(values, dbar_values) -> float:
    return max(entry_max(values), entry_max(dbar_values))


# --- the mu equation ----------------------------------------------------------

def _dense_green_matrix(grid: DomainGrid, p: SpectralParam) -> np.ndarray:
    """Dense N x N matrix of g_p on interior nodes, via rotation structure of T."""
    Tm = _dense_cauchy_matrix(grid)
    w = p.weight(grid.interior_nodes)
    # Cbar matrix is conj(Tm) because the unit impulses are real
    return 0.25 * Tm @ ((np.conj(w)[:, None] * np.conj(Tm)) * w[None, :])


@lru_cache(maxsize=4)
def _dense_cauchy_matrix(grid: DomainGrid) -> np.ndarray:
    nt, nr = grid.n_theta, grid.n_r
    deltas = np.zeros((grid.N, nr))
    deltas[np.arange(nr), np.arange(nr)] = 1.0
    c = _cauchy(grid).apply(deltas).reshape(nt, nr, nr)
    a = np.arange(nt)
    idx = (a[:, None] - a[None, :]) % nt
    M = c[idx].transpose(0, 2, 1, 3)  # (a, i, b, j)
    M = M * np.exp(-1j * grid.theta)[None, None, :, None]
    return M.reshape(grid.N, grid.N)


def _vmul(v, x):
    return np.einsum("pab,pbm->pam", v, x)


def neumann_terms(v: MatrixField, p: SpectralParam, k: int):
    """Terms (g v)^j I, j = 0..k, with their C^1_zbar norms.

    Returns ``(terms_interior, terms_boundary, norms)``.
    """
    g, n = v.grid, v.n
    t = np.broadcast_to(np.eye(n, dtype=complex), (g.N, n, n)).copy()
    tb = np.broadcast_to(np.eye(n, dtype=complex), (g.M, n, n)).copy()
    terms, bterms, norms = [t], [tb], [1.0]
    for _ in range(k):
        pair = _green(g, _vmul(v.values, terms[-1]), p)
        (gi, gb), _ = pair
        terms.append(gi)
        bterms.append(gb)
        norms.append(_c1_norm(pair))
    return terms, bterms, norms


def _neumann(v: MatrixField, p: SpectralParam, k: int):
    # one extra term so that delta is measured even for k = 0
    terms, bterms, norms = neumann_terms(v, p, k + 1)
    deltas = [norms[j + 1] / norms[j] if norms[j] > 0 else 0.0 for j in range(k + 1)]
    mu = MatrixField(v.grid, sum(terms[:k + 1]), sum(bterms[:k + 1]))
    rep = NeumannReport(k, deltas, converged=all(d < 1 for d in deltas))
    return mu, rep


def _direct(v: MatrixField, p: SpectralParam, method: str):
    g, n = v.grid, v.n
    size = g.N * n
    rhs = np.broadcast_to(np.eye(n, dtype=complex), (g.N, n, n)).reshape(size, n)
    if method == "direct" and size <= DENSE_MU_LIMIT:
        Gm = _dense_green_matrix(g, p)
        A = -np.einsum("PQ,Qab->PaQb", Gm, v.values).reshape(size, size)
        A[np.diag_indices(size)] += 1.0
        try:
            lu = sla.lu_factor(A, check_finite=False)
        except sla.LinAlgError as exc:
            raise NotUniquelySolvable(str(exc)) from exc
        piv = np.abs(np.diag(lu[0]))
        if piv.min() <= 1e-13 * piv.max():
            raise NotUniquelySolvable("mu system is numerically singular")
        x = sla.lu_solve(lu, rhs, check_finite=False)
    else:
        def mv(y):
            Y = y.reshape(g.N, n, 1)
            (gi, _), _ = _green(g, _vmul(v.values, Y), p)
            return (Y - gi).ravel()
        op = LinearOperator((size, size), matvec=mv, dtype=np.complex128)
        cols = []
        for j in range(n):
            y, info = gmres(op, rhs[:, j], rtol=1e-12, atol=0.0, restart=100, maxiter=20)
            if info != 0:
                raise NotUniquelySolvable(f"GMRES failed for the mu equation (info={info})")
            cols.append(y)
        x = np.stack(cols, axis=1)
    mu = x.reshape(g.N, n, n)
    # boundary values from the equation itself: mu = I + g(v mu)
    (_, gb), _ = _green(g, _vmul(v.values, mu), p)
    return MatrixField(g, mu, np.eye(n)[None] + gb)


def solve_mu(v: MatrixField, p: SpectralParam, method: str = "direct", k: int = 8):
    """Solve mu = I + g_{z0,lam}(v mu).

    ``method`` is ``"direct"`` (dense Nystrom system; GMRES on grids too large
    to store it), ``"gmres"``, or ``"neumann"`` (partial sum mu^(k)).
    Returns ``(mu, NeumannReport)``; for the solvers the report carries the
    measured first-step contraction only.
    """
    _check(v, p)
    if method == "neumann":
        if k < 0:
            raise InvalidArgument("k must be >= 0")
        mu, rep = _neumann(v, p, k)
        if rep.contraction_estimates and rep.contraction_estimates[0] >= 1.0:
            raise LambdaTooSmall(f"measured contraction {rep.contraction_estimates[0]:.3g} >= 1 at |lambda|={abs(p.lam)}")
        return mu, rep
    if method not in ("direct", "gmres"):
        raise InvalidArgument(f"unknown method {method!r}")
    d1 = first_contraction(v, p)
    mu = _direct(v, p, method)
    return mu, NeumannReport(0, [d1], converged=d1 < 1)


def first_contraction(v: MatrixField, p: SpectralParam) -> float:
    """delta_1 = ||g v I||_{C^1_zbar} / ||I||."""
    n = v.n
    I = np.broadcast_to(np.eye(n, dtype=complex), (v.grid.N, n, n))
    return _c1_norm(_green(v.grid, _vmul(v.values, I), p))


def resolved_disc(radius: float, lam: complex, z0_max: float = 0.0, M: int | None = None,
                  breaks=(0.0, 1.0), order: int = 16, safety: float = 1.0):
    """Disc grid resolving exp(phi) for |z0| <= z0_max.

    The phase exp(phi) has angular bandwidth about 4|lam| R (R + |z0|) and a
    comparable number of radians across the radius; ``safety`` scales both.
    """
    from .geometry import make_disc
    band = safety * 4.0 * abs(lam) * radius * (radius + z0_max)
    nt = 2 * int(band) + 64
    nt = int(8 * math.ceil(nt / 8))
    M = nt if M is None else M
    breaks = tuple(breaks)
    n_panels = len(breaks) - 1
    per = max(order, int(math.ceil((0.75 * band + 16) / n_panels)))
    if per > 48:
        # split every panel rather than raising the polynomial degree
        split = int(math.ceil(per / 32))
        breaks = tuple(np.unique(np.concatenate(
            [np.linspace(a, b, split + 1) for a, b in zip(breaks[:-1], breaks[1:])])))
        per = max(order, int(math.ceil(per / split)))
    return make_disc(radius, M, per, n_theta=max(nt, M), breaks=breaks)


# --- amplitudes ---------------------------------------------------------------

def moment_W(w: MatrixField, p: SpectralParam) -> np.ndarray:
    """int_D exp(phi) w dA."""
    return w.integrate(p.weight(w.grid.interior_nodes))


def amplitude_h(v: MatrixField, mu: MatrixField, p: SpectralParam) -> np.ndarray:
    """int_D exp(phi) v mu dA."""
    if v.grid != mu.grid:
        raise InvalidArgument("v and mu live on different grids")
    return moment_W(v.matmul(mu), p)


def amplitude_h_k(v: MatrixField, p: SpectralParam, k: int) -> np.ndarray:
    """Amplitude with mu replaced by the Neumann partial sum mu^(k) (no contraction check)."""
    mu, _ = _neumann(v, p, k)
    return amplitude_h(v, mu, p)


def lambda_threshold(v: MatrixField, target: str = "rho1", z0: complex = 0.0, phase: float = 0.0,
                     cap: float = 2.0 ** 20, refine: int = 6) -> float:
    """Smallest |lambda| at which the measured first-step contraction is < 1 (rho1)
    or <= 1/2 (rho2).

    The search doubles |lambda| from 1 and, once bracketed, refines the
    bracket by ``refine`` geometric bisections.  ``cap`` bounds the search.
    """
    if target not in ("rho1", "rho2"):
        raise InvalidArgument("target must be 'rho1' or 'rho2'")
    ok = (lambda d: d < 1.0) if target == "rho1" else (lambda d: d <= 0.5)
    direction = np.exp(1j * phase)

    def good(mod):
        return ok(first_contraction(v, SpectralParam(z0, mod * direction)))

    lo, hi = None, 1.0
    while not good(hi):
        lo, hi = hi, 2.0 * hi
        if hi > cap:
            raise LambdaCapExceeded(f"no admissible |lambda| below {cap}")
    if lo is None:
        return 1.0
    for _ in range(refine):
        mid = math.sqrt(lo * hi)
        if good(mid):
            hi = mid
        else:
            lo = mid
    return hi


# --- pointwise kernel ---------------------------------------------------------

def _fine_rule(R: float, lam: complex, z0: complex, order: int | None = None):
    """Polar product rule on the disc fine enough for exp(-phi)."""
    band = 4.0 * abs(lam) * R * (R + abs(z0))
    nt = int(2 * band + 160)
    nt += nt % 2
    npan = max(4, int(math.ceil(band / 12.0)) + 4)
    p = order or 12
    x, w = np.polynomial.legendre.leggauss(p)
    br = np.linspace(0.0, R, npan + 1)
    r = np.concatenate([0.5 * (b - a) * x + 0.5 * (a + b) for a, b in zip(br[:-1], br[1:])])
    wr = np.concatenate([0.5 * (b - a) * w for a, b in zip(br[:-1], br[1:])])
    th = 2 * np.pi * (np.arange(nt) + 0.5) / nt
    eta = (r[None, :] * np.exp(1j * th)[:, None]).ravel()
    wt = ((r * wr)[None, :] * (2 * np.pi / nt) * np.ones((nt, 1))).ravel()
    return eta, wt


def _disc_J(z, zeta, R):
    """int_{|eta|<R} d eta / ((z - eta)(conj(eta) - conj(zeta)))."""
    return np.pi * (np.log(abs(z - zeta) ** 2) - np.log(R * R) - np.log(1.0 - z * np.conj(zeta) / (R * R)))


def green_kernel_row(z: complex, zetas, p: SpectralParam, R: float = 1.0, rule=None,
                     chunk: int = 2_000_000) -> np.ndarray:
    """:func:`green_kernel` for one z and many zeta (all different from z)."""
    z = complex(z)
    zetas = np.atleast_1d(np.asarray(zetas, dtype=complex))
    if np.any(zetas == z):
        raise InvalidArgument("green_kernel needs z != zeta")
    eta, wt = rule if rule is not None else _fine_rule(R, p.lam, p.z0)
    f = np.exp(-1j * p.phase(eta))
    fz = np.exp(-1j * p.phase(z))
    out = np.empty(len(zetas), dtype=complex)
    step = max(1, chunk // len(eta))
    for s in range(0, len(zetas), step):
        zs = zetas[s:s + step]
        fs = np.exp(-1j * p.phase(zs))
        A = -np.pi * zs
        sing = fz * (_disc_J(z, zs, R) - A / (z - zs)) + fs * A / (z - zs)
        E, Z = eta[None, :], zs[:, None]
        rem = f[None, :] - fz * (E - Z) / (z - Z) - fs[:, None] * (E - z) / (Z - z)
        with np.errstate(divide="ignore", invalid="ignore"):
            integrand = rem / ((z - E) * (np.conj(E) - np.conj(Z)))
        integrand = np.where(np.isfinite(integrand), integrand, 0.0)
        out[s:s + step] = np.exp(1j * p.phase(zs)) * (sing + integrand @ wt) / (4.0 * np.pi ** 2)
    return out


def green_kernel(z: complex, zeta: complex, p: SpectralParam, R: float = 1.0, rule=None) -> complex:
    """Pointwise g_{z0}(z, zeta, lam) on the disc |eta| < R.

    exp(-phi) is split as f(z) p + f(zeta) q + remainder with p, q the linear
    interpolants vanishing at zeta and z respectively; the two singular parts
    integrate in closed form and the bounded remainder by a fine polar rule.
    """
    z, zeta = complex(z), complex(zeta)
    if z == zeta:
        raise InvalidArgument("green_kernel needs z != zeta")
    eta, wt = rule if rule is not None else _fine_rule(R, p.lam, p.z0)
    fz = np.exp(-1j * p.phase(z))
    fs = np.exp(-1j * p.phase(zeta))
    f = np.exp(-1j * p.phase(eta))
    A = -np.pi * zeta                       # int d eta / (conj(eta) - conj(zeta))
    J = _disc_J(z, zeta, R)
    sing = fz * (J - A / (z - zeta)) + fs * A / (z - zeta)
    pz = (eta - zeta) / (z - zeta)
    qz = (eta - z) / (zeta - z)
    rem = f - fz * pz - fs * qz
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = rem / ((z - eta) * (np.conj(eta) - np.conj(zeta)))
    integrand = np.where(np.isfinite(integrand), integrand, 0.0)
    total = sing + np.sum(wt * integrand)
    return complex(np.exp(1j * p.phase(zeta)) * total / (4.0 * np.pi ** 2))
