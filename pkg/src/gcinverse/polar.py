"""Fourier-polar machinery on disc grids.

Every volume operator used by the package (Cauchy transform, the Dirichlet
Green operator, volume-to-boundary normal derivatives) is diagonal in the
angular Fourier index and, per mode, reduces to radial integrals of the form

    inner(r) = int_0^r (s/r)^kappa F(s) s^beta ds
    outer(r) = int_r^R (r/s)^kappa F(s) s^beta ds.

Both are evaluated by stable first-order recurrences over the "stations"
(radial nodes and panel breaks).  The recurrence itself is the hot loop and is
delegated to :mod:`gcinverse.kernels`; the local piece integrals use a q-point
Gauss rule fed by polynomial interpolation inside each radial panel, so the
whole scheme is spectrally accurate for smooth data.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import InvalidArgument
from .geometry import DomainGrid

__all__ = ["lagrange_matrix", "RadialSweeper", "mode_numbers", "to_modes", "from_modes",
           "trig_eval_matrix", "CauchyOperator", "DirichletGreen", "harmonic_extension_matrix",
           "boundary_dtn0_matrix"]


def lagrange_matrix(x, xe):
    """Matrix L with L @ f(x) = interpolant of f evaluated at xe (barycentric form)."""
    x = np.asarray(x, dtype=float)
    xe = np.asarray(xe, dtype=float)
    # differences scaled by the capacity of the interval keep the products finite
    diff = (x[:, None] - x[None, :]) * (4.0 / max(np.ptp(x), 1e-300))
    np.fill_diagonal(diff, 1.0)
    w = 1.0 / np.prod(diff, axis=1)
    d = xe[:, None] - x[None, :]
    exact = d == 0.0
    d[exact] = 1.0
    t = w[None, :] / d
    L = t / t.sum(axis=1, keepdims=True)
    rows = exact.any(axis=1)
    if rows.any():
        L[rows] = exact[rows].astype(float)
    return L


def differentiation_matrix(x):
    """Spectral differentiation on arbitrary distinct nodes."""
    x = np.asarray(x, dtype=float)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    scaled = diff * (4.0 / max(np.ptp(x), 1e-300))
    np.fill_diagonal(scaled, 1.0)
    w = 1.0 / np.prod(scaled, axis=1)
    D = (w[None, :] / w[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


class RadialSweeper:
    """Radial inner/outer integrals on a composite Gauss-Legendre rule."""

    def __init__(self, grid: DomainGrid, q: int = 10):
        rule = grid.radial
        self.R = rule.radius
        self.order = p = rule.order
        self.n_r = grid.n_r
        r = grid.r
        xq, wq = np.polynomial.legendre.leggauss(q)
        breaks = np.asarray(rule.breaks)
        stations, node_station = [0.0], np.empty(self.n_r, dtype=int)
        pieces = []  # (panel, a, b)
        for P in range(rule.n_panels):
            pts = [breaks[P]] + list(r[P * p:(P + 1) * p]) + [breaks[P + 1]]
            for j in range(len(pts) - 1):
                pieces.append((P, pts[j], pts[j + 1]))
                stations.append(pts[j + 1])
                if j < p:
                    node_station[P * p + j] = len(stations) - 1
        self.S = len(pieces)
        self.stations = np.asarray(stations)
        self.node_station = node_station
        a = np.array([pc[1] for pc in pieces])
        b = np.array([pc[2] for pc in pieces])
        self.piece_panel = np.array([pc[0] for pc in pieces])
        self.sq = 0.5 * (b - a)[:, None] * xq[None, :] + 0.5 * (b + a)[:, None]
        self.wq = 0.5 * (b - a)[:, None] * wq[None, :]
        self.a, self.b = a, b
        # per panel: interpolation from its p nodes to the q points of its pieces
        self.panel_pieces = []
        self.panel_interp = []
        for P in range(rule.n_panels):
            idx = np.nonzero(self.piece_panel == P)[0]
            nodes = r[P * p:(P + 1) * p]
            Lm = lagrange_matrix(nodes, self.sq[idx].ravel()).reshape(len(idx), q, p)
            self.panel_pieces.append(idx)
            self.panel_interp.append(Lm)
        with np.errstate(divide="ignore"):
            self.log_in = np.log(self.sq / b[:, None])      # log(s/b) <= 0
            self.log_out = np.log(a[:, None] / self.sq)     # log(a/s) <= 0 (-inf at a = 0)
            self.log_ratio = np.log(a / b)                  # -inf for the first piece
        self.log_sR = np.log(self.sq / self.R)

    def _values_at_q(self, F):
        """Interpolate mode values F (n_r, K, B) to all piece quadrature points."""
        K, B = F.shape[1:]
        out = np.empty((self.S, self.sq.shape[1], K, B), dtype=np.complex128)
        p = self.order
        for P, (idx, Lm) in enumerate(zip(self.panel_pieces, self.panel_interp)):
            out[idx] = np.einsum("sqj,jkb->sqkb", Lm, F[P * p:(P + 1) * p], optimize=True)
        return out

    @staticmethod
    def _pow(logx, kappa):
        """x**kappa from log x, with 0**0 = 1."""
        with np.errstate(invalid="ignore"):
            e = np.multiply.outer(logx, kappa)
        e = np.where(np.isnan(e), 0.0, e)
        return np.exp(e)

    def integrals(self, F, kappa, beta=0, logweight=False, kinds=("inner", "outer"),
                  max_block=4_000_000):
        """Inner/outer radial integrals of mode data.

        F has shape (n_r, K, B), kappa shape (K,).  Returns a dict with
        ``inner`` and/or ``outer`` at the radial nodes (n_r, K, B) and
        ``inner_R``, the inner integral at r = R (K, B).
        """
        F = np.asarray(F, dtype=np.complex128)
        kappa = np.asarray(kappa, dtype=float)
        K, B = F.shape[1:]
        step = max(1, max_block // max(1, self.S * self.sq.shape[1] * B))
        if K > step:
            parts = [self._integrals(F[:, i:i + step], kappa[i:i + step], beta, logweight, kinds)
                     for i in range(0, K, step)]
            return {key: np.concatenate([pt[key] for pt in parts], axis=-2) for key in parts[0]}
        return self._integrals(F, kappa, beta, logweight, kinds)

    def _integrals(self, F, kappa, beta, logweight, kinds):
        Fq = self._values_at_q(F)
        w = self.wq * self.sq ** beta
        if logweight:
            w = w * self.log_sR
        ratio = self._pow(self.log_ratio, kappa)
        res = {}
        if "inner" in kinds:
            kern = self._pow(self.log_in, kappa) * w[:, :, None]
            loc = np.einsum("sqk,sqkb->skb", kern, Fq, optimize=True)
            cum = kernels.sweep_inner(ratio, loc)
            res["inner"] = cum[self.node_station]
            res["inner_R"] = cum[-1]
        if "outer" in kinds:
            kern = self._pow(self.log_out, kappa) * w[:, :, None]
            loc = np.einsum("sqk,sqkb->skb", kern, Fq, optimize=True)
            cum = kernels.sweep_outer(ratio, loc)
            res["outer"] = cum[self.node_station]
        return res


def mode_numbers(n):
    return np.rint(np.fft.fftfreq(n) * n).astype(int)


def to_modes(grid: DomainGrid, u):
    """Field values (N, *trail) -> angular modes (n_r, n_theta, B) plus trailing shape."""
    u = np.asarray(u)
    trail = u.shape[1:]
    U = np.fft.fft(u.reshape(grid.n_theta, grid.n_r, -1), axis=0) / grid.n_theta
    return np.ascontiguousarray(U.transpose(1, 0, 2)), trail


def from_modes(grid: DomainGrid, U, trail):
    u = np.fft.ifft(U.transpose(1, 0, 2), axis=0) * grid.n_theta
    return u.reshape((grid.N,) + tuple(trail))


def trig_eval_matrix(ks, thetas):
    """E[l, k] = exp(i k theta_l); the Nyquist mode -n/2 is read as a cosine."""
    ks = np.asarray(ks)
    E = np.exp(1j * np.multiply.outer(thetas, ks))
    n = len(ks)
    if n % 2 == 0:
        nyq = ks == -n // 2
        E[:, nyq] = np.cos(np.multiply.outer(thetas, ks[nyq]))
    return E


def _require_disc(grid):
    if grid.kind != "disc":
        raise InvalidArgument("this operator is implemented for disc grids only")


class CauchyOperator:
    """Area Cauchy transform  T u(z) = -(1/pi) int_D u(zeta) / (zeta - z) dA.

    Mode k of u feeds mode k-1 of Tu:
      k >= 1:  (Tu)_{k-1}(r) = -2 int_r^R (r/s)^{k-1} u_k(s) ds
      k <= 0:  (Tu)_{k-1}(r) =  2 int_0^r (s/r)^{1-k} u_k(s) ds
    """

    def __init__(self, grid: DomainGrid, q: int = 10):
        _require_disc(grid)
        self.grid = grid
        self.sweeper = RadialSweeper(grid, q)
        n = grid.n_theta
        self.k = mode_numbers(n)
        self.pos = np.nonzero(self.k >= 1)[0]
        self.neg = np.nonzero((self.k <= 0) & (self.k > -n // 2))[0]
        self.out_pos = (self.k[self.pos] - 1) % n
        self.out_neg = (self.k[self.neg] - 1) % n
        self._Eb = trig_eval_matrix(self.k, grid.boundary_theta)

    def apply(self, u, boundary=False):
        g = self.grid
        U, trail = to_modes(g, u)
        out = np.zeros_like(U)
        sw = self.sweeper
        res = sw.integrals(U[:, self.pos], self.k[self.pos] - 1.0, kinds=("outer",))
        out[:, self.out_pos] = -2.0 * res["outer"]
        res_n = sw.integrals(U[:, self.neg], 1.0 - self.k[self.neg], kinds=("inner",))
        out[:, self.out_neg] = 2.0 * res_n["inner"]
        vals = from_modes(g, out, trail)
        if not boundary:
            return vals
        modes_R = np.zeros(out.shape[1:], dtype=np.complex128)
        modes_R[self.out_neg] = 2.0 * res_n["inner_R"]
        bvals = (self._Eb @ modes_R).reshape((g.M,) + tuple(trail))
        return vals, bvals


class DirichletGreen:
    """Solution operator of -Laplace w = F, w = 0 on the boundary of the disc.

    Mode kernels: g_0 = -log(r_>/R), g_k = ((r_</r_>)^|k| - (r s/R^2)^|k|) / (2|k|).
    ``normal_derivative`` returns the outward normal derivative of the
    *negated* solution, i.e. the volume term of the Dirichlet-to-Neumann map
    for psi = psi_0 - G(v psi).
    """

    def __init__(self, grid: DomainGrid, q: int = 10):
        _require_disc(grid)
        self.grid = grid
        self.sweeper = RadialSweeper(grid, q)
        self.k = mode_numbers(grid.n_theta)
        self.absk = np.abs(self.k).astype(float)
        self.R = grid.radius
        self._Eb = trig_eval_matrix(self.k, grid.boundary_theta)

    def apply(self, F):
        g = self.grid
        U, trail = to_modes(g, F)
        sw = self.sweeper
        res = sw.integrals(U, self.absk, beta=1)
        rho = (g.r / self.R)[:, None]
        out = np.empty_like(U)
        nz = self.k != 0
        kk = self.absk[nz]
        out[:, nz] = (res["inner"][:, nz] + res["outer"][:, nz]
                      - (rho ** kk)[:, :, None] * res["inner_R"][None, nz]) / (2.0 * kk)[None, :, None]
        z0 = np.nonzero(~nz)[0]
        res_log = sw.integrals(U[:, z0], np.zeros(1), beta=1, logweight=True, kinds=("outer",))
        out[:, z0] = -np.log(rho)[:, :, None] * res["inner"][:, z0] - res_log["outer"]
        return from_modes(g, out, trail)

    def normal_derivative_modes(self, F):
        U, trail = to_modes(self.grid, F)
        res = self.sweeper.integrals(U, self.absk, beta=1, kinds=("inner",))
        return res["inner_R"] / self.R, trail

    def normal_derivative(self, F):
        modes, trail = self.normal_derivative_modes(F)
        return (self._Eb @ modes).reshape((self.grid.M,) + tuple(trail))


def harmonic_extension_matrix(grid: DomainGrid):
    """H with (H f)[node] = band-limited harmonic extension of boundary samples f."""
    _require_disc(grid)
    M = grid.M
    kb = mode_numbers(M)
    Fm = np.exp(-1j * np.multiply.outer(kb, grid.boundary_theta)) / M  # (M modes, M nodes)
    E = trig_eval_matrix(kb, grid.theta)                               # (n_theta, M modes)
    rho = grid.r / grid.radius
    powers = rho[:, None] ** np.abs(kb)[None, :]                        # (n_r, M modes)
    H = np.einsum("ak,ik,kl->ail", E, powers, Fm, optimize=True)
    return H.reshape(grid.N, M)


def boundary_dtn0_matrix(grid: DomainGrid):
    """Free DtN map (v = 0) on boundary samples: the Fourier multiplier |k|/R."""
    _require_disc(grid)
    M = grid.M
    kb = mode_numbers(M)
    Fm = np.exp(-1j * np.multiply.outer(kb, grid.boundary_theta)) / M
    E = trig_eval_matrix(kb, grid.boundary_theta)
    return (E * (np.abs(kb) / grid.radius)[None, :]) @ Fm
