"""Slowly/regularly varying function calculus and the theorems' normalizers.

A slowly varying function is held in Karamata form l(x) = sigma *
exp(int_1^x eta(t)/t dt).  The eta presets are exactly the families the
analysis needs: eta = 0 (constants), the log-power family
eta(t) = c1 (ln t)^-a, the "log" preset eta(t) = 1/(1 + ln t) (which gives
l(x) = sigma (1 + ln x)), and tabulated eta with log-linear interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SlowlyVaryingSpec",
    "sv_eval",
    "sv_eta",
    "ell_beta",
    "MonotoneMap",
    "monotone_inverse",
    "solve_h_alpha",
    "norm_thm1",
    "norm_thm23",
    "check_ell_ratio",
]

_PRESETS = ("zero", "log-power", "log", "custom")


@dataclass(frozen=True)
class SlowlyVaryingSpec:
    """Karamata representation of a slowly varying function."""

    sigma: float = 1.0
    preset: str = "zero"
    c1: float = 1.0
    a: float = 0.75
    # custom preset: eta tabulated at (ln t, eta) nodes, log-linear in between,
    # eta = 0 beyond the last node.
    table: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise ValueError("sigma must be positive")
        if self.preset not in _PRESETS:
            raise ValueError(f"unknown eta preset {self.preset!r}")
        if self.preset == "log-power" and not 0.0 < self.a < 1.0:
            raise ValueError("log-power preset needs a in (0, 1)")
        if self.preset == "custom" and len(self.table) < 2:
            raise ValueError("custom preset needs at least two (ln t, eta) nodes")

    @property
    def is_constant(self) -> bool:
        return self.preset == "zero"


def sv_eta(spec: SlowlyVaryingSpec, t) -> np.ndarray:
    """eta(t) of the Karamata representation, vectorized."""
    t = np.asarray(t, dtype=float)
    if spec.preset == "zero":
        return np.zeros_like(t)
    if spec.preset == "log-power":
        with np.errstate(divide="ignore"):
            out = spec.c1 * np.log(t) ** (-spec.a)
        return np.where(t > 1.0, out, np.inf)
    if spec.preset == "log":
        return 1.0 / (1.0 + np.log(t))
    v = np.log(t)
    lnt = np.array([p[0] for p in spec.table])
    et = np.array([p[1] for p in spec.table])
    return np.interp(v, lnt, et, left=et[0], right=0.0)


def sv_eval(spec: SlowlyVaryingSpec, x) -> float | np.ndarray:
    """l(x) = sigma exp(int_1^x eta(t)/t dt); closed forms for the presets.

    x = 1 is allowed and returns sigma (empty integral); x < 1 is an error.
    """
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 1.0):
        raise ValueError("sv_eval requires x >= 1")
    if spec.preset == "zero":
        out = np.full_like(xs, spec.sigma)
    elif spec.preset == "log-power":
        # int_1^x c1 (ln t)^{-a} dt/t = c1 (ln x)^{1-a} / (1-a)
        lx = np.log(xs)
        out = spec.sigma * np.exp(spec.c1 * lx ** (1.0 - spec.a) / (1.0 - spec.a))
    elif spec.preset == "log":
        out = spec.sigma * (1.0 + np.log(xs))
    else:
        out = spec.sigma * np.exp(_custom_integral(spec, np.log(xs)))
    if np.ndim(x) == 0:
        return float(out)
    return out


def _custom_integral(spec: SlowlyVaryingSpec, v) -> np.ndarray:
    """int_0^v eta(e^s) ds for tabulated eta, exact on the trapezoid mesh."""
    lnt = np.array([p[0] for p in spec.table])
    et = np.array([p[1] for p in spec.table])
    if lnt[0] > 0.0:
        lnt = np.concatenate([[0.0], lnt])
        et = np.concatenate([[et[0]], et])
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (et[1:] + et[:-1]) * np.diff(lnt))])
    v = np.asarray(v, dtype=float)
    out = np.interp(v, lnt, cum)
    # piecewise-linear eta integrates to the quadratic correction inside a cell
    idx = np.clip(np.searchsorted(lnt, v, side="right") - 1, 0, len(lnt) - 2)
    v0 = lnt[idx]
    frac = v - v0
    slope = (et[idx + 1] - et[idx]) / (lnt[idx + 1] - lnt[idx])
    out_in = cum[idx] + et[idx] * frac + 0.5 * slope * frac**2
    inside = v < lnt[-1]
    out = np.where(inside, out_in, cum[-1] + et[-1] * 0.0 + (v - lnt[-1]) * 0.0)
    # beyond the table eta = 0: integral stays at cum[-1]
    return np.where(inside, out_in, cum[-1])


def ell_beta(spec: SlowlyVaryingSpec, beta: float, x) -> float | np.ndarray:
    """l_beta(x) = x^(1/beta) l(x^(1/beta))^(1/beta)."""
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    xs = np.asarray(x, dtype=float)
    r = xs ** (1.0 / beta)
    if np.any(r < 1.0):
        raise ValueError("ell_beta requires x^(1/beta) >= 1")
    out = r * np.asarray(sv_eval(spec, r)) ** (1.0 / beta)
    if np.ndim(x) == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# Generalized inverses
# ---------------------------------------------------------------------------


class MonotoneMap:
    """A map g on (A, inf), strictly increasing on a validated log grid.

    The inverse g^<-(x) = inf{s > A : g(s) >= x} is computed by bracketing on
    a cached log-spaced grid (1024 points per decade, grown on demand) plus
    local bisection refinement to 1e-9 relative.
    """

    PTS_PER_DECADE = 1024

    def __init__(self, fwd, A: float, s_hi: float | None = None):
        self.fwd = fwd
        self.A = float(A)
        s_lo = self.A * (1.0 + 1.0 / self.PTS_PER_DECADE) if self.A > 0 else 1e-12
        s_hi = s_hi if s_hi is not None else max(1e6, 1e3 * s_lo)
        self._grid = np.geomspace(s_lo, s_hi, self._npts(s_lo, s_hi))
        self._vals = np.asarray(fwd(self._grid), dtype=float)
        self._validate()

    @classmethod
    def _npts(cls, lo: float, hi: float) -> int:
        return max(16, int(math.log10(hi / lo) * cls.PTS_PER_DECADE) + 1)

    def _validate(self):
        if np.any(np.diff(self._vals) <= 0.0):
            bad = self._grid[np.argmin(np.diff(self._vals))]
            raise ValueError(
                f"map is not strictly increasing on the grid near s={bad:.6g}; "
                "raise the domain threshold A"
            )

    def _extend_to(self, x: float):
        while self._vals[-1] < x:
            lo, hi = self._grid[-1], self._grid[-1] * 1e3
            if hi > 1e300:
                raise OverflowError("monotone map range exhausted")
            g = np.geomspace(lo, hi, self._npts(lo, hi))[1:]
            v = np.asarray(self.fwd(g), dtype=float)
            self._grid = np.concatenate([self._grid, g])
            self._vals = np.concatenate([self._vals, v])
            self._validate()

    def inverse(self, x: float) -> float:
        """inf{s > A : g(s) >= x}; +inf above the range (empty-set sentinel)."""
        if not np.isfinite(x):
            return math.inf
        if x <= self._vals[0]:
            return self._grid[0]
        try:
            self._extend_to(x)
        except OverflowError:
            return math.inf
        j = int(np.searchsorted(self._vals, x, side="left"))
        lo, hi = self._grid[j - 1], self._grid[j]
        # bisection: robust, ~50 iterations to relative 1e-12
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if self.fwd(mid) >= x:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-12 * hi:
                break
        return hi


def monotone_inverse(m: MonotoneMap, x: float) -> float:
    return m.inverse(x)


# ---------------------------------------------------------------------------
# h_alpha and the normalizing factors
# ---------------------------------------------------------------------------


def solve_h_alpha(
    h: SlowlyVaryingSpec, alpha: float, N: float, tol: float = 1e-8
) -> float:
    """Fixed point y = h(N^(1/alpha) y^(1/alpha)), one representative of the
    asymptotic-equivalence class defining h_alpha.

    Plain iteration from y0 = h(N^(1/alpha)) contracts with rate
    ~ eta_h/alpha -> 0; damping guards pathological eta.
    """
    if N <= 1.0:
        raise ValueError("solve_h_alpha requires N > 1")
    if h.is_constant:
        return h.sigma
    root = N ** (1.0 / alpha)
    y = float(sv_eval(h, root))
    for _ in range(500):
        arg = root * y ** (1.0 / alpha)
        hy = float(sv_eval(h, max(arg, 1.0)))
        resid = abs(hy / y - 1.0)
        if resid <= tol:
            return hy
        y = 0.5 * y + 0.5 * hy
    raise RuntimeError(f"h_alpha iteration did not converge at N={N}")


def norm_thm1(
    alpha: float,
    beta: float,
    ell: SlowlyVaryingSpec,
    h: SlowlyVaryingSpec,
    N: int,
) -> float:
    """B_N = N^(1 + 1/alpha - beta) l(N) h_alpha(N)^(1/alpha)."""
    if not (1.0 < alpha < 2.0 and 1.0 / alpha < beta < 1.0):
        raise ValueError(f"theorem 1 needs 1<alpha<2, 1/alpha<beta<1; got {alpha}, {beta}")
    return (
        float(N) ** (1.0 + 1.0 / alpha - beta)
        * float(sv_eval(ell, float(N)))
        * solve_h_alpha(h, alpha, float(N)) ** (1.0 / alpha)
    )


def thm23_norm_map(
    alpha: float, beta: float, ell: SlowlyVaryingSpec, h: SlowlyVaryingSpec
) -> MonotoneMap:
    """The outer map F(s) = (l_beta^<-(s))^alpha / h(l_beta^<-(s)).

    Its generalized inverse evaluated at N is the Thm 2/3 normalizer.
    """
    inner = MonotoneMap(lambda s: ell_beta(ell, beta, s), A=1.0)

    def outer(s):
        ss = np.atleast_1d(np.asarray(s, dtype=float))
        inv = np.array([inner.inverse(v) for v in ss])
        inv = np.maximum(inv, 1.0 + 1e-12)
        out = inv**alpha / np.asarray(sv_eval(h, inv))
        return out if np.ndim(s) else float(out[0])

    lb0 = float(ell_beta(ell, beta, 2.0))
    return MonotoneMap(outer, A=lb0)


def norm_thm23(
    alpha: float,
    beta: float,
    ell: SlowlyVaryingSpec,
    h: SlowlyVaryingSpec,
    N: int,
) -> float:
    """((l_beta^<-)^alpha / (h o l_beta^<-))^<- (N), by nested inversion."""
    if not (1.0 < alpha * beta < 2.0):
        raise ValueError(f"theorems 2-3 need alpha*beta in (1,2); got {alpha * beta}")
    return thm23_norm_map(alpha, beta, ell, h).inverse(float(N))


def check_ell_ratio(ell: SlowlyVaryingSpec, beta: float, xs) -> np.ndarray:
    """l(x l(x)^(1/beta)) / l(x) along xs; -> 1 iff condition (ell) holds."""
    xs = np.asarray(xs, dtype=float)
    if np.any(np.diff(xs) <= 0.0) or np.any(xs <= 1.0):
        raise ValueError("xs must be increasing and > 1")
    lx = np.asarray(sv_eval(ell, xs))
    return np.asarray(sv_eval(ell, xs * lx ** (1.0 / beta))) / lx
