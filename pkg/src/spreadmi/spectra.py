"""Limiting eigenvalue laws of spreading-sequence correlation matrices.

An :class:`EigenDistribution` is a probability law on ``[0, inf)`` built
from point masses plus an optional continuous part, normalized to unit
mass and unit mean (the power constraint on unit-norm spreading
sequences).  The module evaluates three objects for such a law:

* the real-axis Hilbert transform ``C(gamma) = int rho(lam)/(gamma-lam)``
  for ``gamma`` strictly below the support,
* the R-transform ``R(z)``, defined through ``C(R(z) + 1/z) = z``, with
  closed forms for the Marchenko-Pastur and Welch-bound-equality laws and
  a safeguarded numeric inversion for everything else,
* the running integral ``G(t) = int_0^t R(z) dz``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import ConstraintViolation, NumericsError

# closed-form tags
MP = "mp"
WBE = "wbe"
GENERIC = "generic"

MASS_TOL = 1e-10
MEAN_TOL = 1e-10
PI_TOL = 1e-8

# continuous densities are tabulated on panels x order Gauss-Legendre nodes
_PANELS = 32
_ORDER = 64


@dataclass(frozen=True, eq=False)
class TabulatedDensity:
    """Continuous spectral component with a precomputed quadrature rule.

    ``nodes``/``weights`` integrate smooth functions against the density:
    ``int f(lam) rho_c(lam) dlam ~= weights @ f(nodes)``.  ``pdf`` is the
    pointwise density, kept for plotting and independent checks.
    """

    lo: float
    hi: float
    nodes: np.ndarray
    weights: np.ndarray
    pdf: Callable[[np.ndarray], np.ndarray]

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    @property
    def mean(self) -> float:
        return float(self.weights @ self.nodes)


def _mp_edges(beta: float) -> tuple[float, float]:
    return (1.0 - math.sqrt(beta)) ** 2, (1.0 + math.sqrt(beta)) ** 2


def _mp_density(beta: float) -> TabulatedDensity:
    # lam = a + (b-a) sin^2(u) turns the square-root edge factors into
    # (b-a) sin(u) cos(u), so the transformed integrand is smooth and the
    # composite Gauss-Legendre rule converges spectrally.
    a, b = _mp_edges(beta)
    x, w = np.polynomial.legendre.leggauss(_ORDER)
    edges = np.linspace(0.0, math.pi / 2.0, _PANELS + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    u = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wu = (half[:, None] * w[None, :]).ravel()
    lam = a + (b - a) * np.sin(u) ** 2
    weights = wu * (b - a) ** 2 * np.sin(2.0 * u) ** 2 / (4.0 * math.pi * beta * lam)

    def pdf(x, _a=a, _b=b, _beta=beta):
        x = np.asarray(x, dtype=float)
        inside = np.clip(x - _a, 0.0, None) * np.clip(_b - x, 0.0, None)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.sqrt(inside) / (2.0 * math.pi * _beta * x)
        return np.where(inside > 0.0, val, 0.0)

    return TabulatedDensity(lo=a, hi=b, nodes=lam, weights=weights, pdf=pdf)


@dataclass(frozen=True, eq=False)
class EigenDistribution:
    """Limiting eigenvalue law of the correlation matrix of spreading sequences.

    Parameters
    ----------
    beta : float
        Load (users per chip), ``beta = K/L > 0``.
    atoms : tuple of (location, weight)
        Point masses; locations are non-negative, weights in ``(0, 1]``.
    density : TabulatedDensity, optional
        Continuous part on a finite support.
    tag : str
        One of ``MP``, ``WBE``, ``GENERIC``; selects closed-form fast
        paths for the R-transform.

    The constructor enforces unit total mass and unit mean (both to
    1e-10) and, for ``beta > 1``, the mandatory zero eigenvalue with
    weight ``1 - 1/beta``.
    """

    beta: float
    atoms: tuple[tuple[float, float], ...]
    density: TabulatedDensity | None = None
    tag: str = GENERIC

    def __post_init__(self):
        if not self.beta > 0.0:
            raise ValueError(f"load beta must be positive, got {self.beta}")
        if self.tag not in (MP, WBE, GENERIC):
            raise ValueError(f"unknown closed-form tag {self.tag!r}")
        for loc, wgt in self.atoms:
            if loc < 0.0 or not math.isfinite(loc):
                raise ConstraintViolation(f"atom location {loc} outside [0, inf)")
            if not 0.0 < wgt <= 1.0:
                raise ConstraintViolation(f"atom weight {wgt} outside (0, 1]")
        if self.density is not None and not math.isfinite(self.density.hi):
            raise ConstraintViolation("continuous support must be bounded")
        mass = sum(w for _, w in self.atoms)
        mean = sum(l * w for l, w in self.atoms)
        if self.density is not None:
            mass += self.density.mass
            mean += self.density.mean
        if abs(mass - 1.0) > MASS_TOL:
            raise ConstraintViolation(
                f"total mass {mass!r} != 1 (probability normalization)")
        if abs(mean - 1.0) > MEAN_TOL:
            raise ConstraintViolation(
                f"mean eigenvalue {mean!r} != 1 (spreading-power normalization)")
        if self.beta > 1.0:
            # the trivial rank deficiency contributes weight 1 - 1/beta at
            # zero; the non-trivial part may add more on top
            zero_w = sum(w for l, w in self.atoms if l == 0.0)
            if zero_w < 1.0 - 1.0 / self.beta - MASS_TOL:
                raise ConstraintViolation(
                    f"load {self.beta} > 1 requires a zero eigenvalue of weight "
                    f"at least 1 - 1/beta = {1.0 - 1.0 / self.beta!r}, got "
                    f"{zero_w!r}")

    # -- cached array views -------------------------------------------------

    @cached_property
    def _atom_loc(self) -> np.ndarray:
        return np.array([l for l, _ in self.atoms], dtype=float)

    @cached_property
    def _atom_w(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms], dtype=float)

    @cached_property
    def _atoms_plain(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        # plain-float view for the scalar hot path
        return (tuple(float(l) for l, _ in self.atoms),
                tuple(float(w) for _, w in self.atoms))

    # -- basic descriptors ---------------------------------------------------

    @property
    def lambda_min(self) -> float:
        lo = math.inf
        if self.atoms:
            lo = min(l for l, _ in self.atoms)
        if self.density is not None:
            lo = min(lo, self.density.lo)
        return lo

    @property
    def lambda_max(self) -> float:
        hi = 0.0
        if self.atoms:
            hi = max(l for l, _ in self.atoms)
        if self.density is not None:
            hi = max(hi, self.density.hi)
        return hi

    @property
    def mean(self) -> float:
        m = sum(l * w for l, w in self.atoms)
        if self.density is not None:
            m += self.density.mean
        return m

    @property
    def has_zero_atom(self) -> bool:
        return any(l == 0.0 for l, _ in self.atoms)

    def cdf(self, x):
        """Right-continuous distribution function, vectorized in ``x``."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for loc, wgt in self.atoms:
            out = out + wgt * (x >= loc)
        if self.density is not None:
            xs, fs = self._cdf_table
            out = out + np.interp(x, xs, fs, left=0.0, right=fs[-1])
        return out if out.ndim else float(out)

    @cached_property
    def _cdf_table(self) -> tuple[np.ndarray, np.ndarray]:
        d = self.density
        xs = np.concatenate(([d.lo], d.nodes, [d.hi]))
        fs = np.concatenate(([0.0], np.cumsum(d.weights), [d.mass]))
        return xs, fs


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def make_mp_law(beta: float) -> EigenDistribution:
    """Marchenko-Pastur law at load ``beta``.

    Point mass ``(1 - 1/beta)^+`` at zero plus the continuous density
    ``sqrt((lam-a)(b-lam)) / (2 pi beta lam)`` on ``[a, b]`` with
    ``a = (1-sqrt(beta))^2`` and ``b = (1+sqrt(beta))^2``.
    """
    if not beta > 0.0:
        raise ValueError(f"load beta must be positive, got {beta}")
    atoms = ()
    if beta > 1.0:
        atoms = ((0.0, 1.0 - 1.0 / beta),)
    return EigenDistribution(beta=beta, atoms=atoms, density=_mp_density(beta), tag=MP)


def make_wbe_law(beta: float) -> EigenDistribution:
    """Two-atom law of Welch-bound-equality sequences: weight ``1 - 1/beta``
    at zero and ``1/beta`` at ``lam = beta``.  Requires ``beta > 1`` (the
    orthogonal regime ``beta <= 1`` is trivial and handled upstream)."""
    if not beta > 1.0:
        raise ValueError(f"WBE law needs an overloaded system (beta > 1), got {beta}")
    atoms = ((0.0, 1.0 - 1.0 / beta), (float(beta), 1.0 / beta))
    return EigenDistribution(beta=beta, atoms=atoms, density=None, tag=WBE)


def make_discrete_law(pi_atoms, beta: float) -> EigenDistribution:
    """Purely atomic admissible law from user-supplied non-zero spectrum.

    ``pi_atoms`` is a sequence of ``(location, weight)`` pairs describing
    the law of the non-trivial eigenvalues; the mandatory zero atom of
    weight ``1 - 1/beta`` is prepended automatically.  The pairs must
    satisfy the two admissibility constraints: weights summing to one
    (probability normalization) and mean location equal to ``beta``
    (spreading-power normalization), each to 1e-8.
    """
    if not beta > 1.0:
        raise ValueError(f"discrete admissible laws need beta > 1, got {beta}")
    pi_atoms = [(float(l), float(w)) for l, w in pi_atoms]
    for loc, wgt in pi_atoms:
        if loc < 0.0:
            raise ConstraintViolation(f"pi-atom location {loc} outside [0, inf)")
        if wgt <= 0.0:
            raise ConstraintViolation(f"pi-atom weight {wgt} must be positive")
    total = sum(w for _, w in pi_atoms)
    if abs(total - 1.0) > PI_TOL:
        raise ConstraintViolation(
            f"pi-atom weights sum to {total!r}, not 1 (probability normalization)")
    pi_mean = sum(l * w for l, w in pi_atoms)
    if abs(pi_mean - beta) > PI_TOL:
        raise ConstraintViolation(
            f"pi mean {pi_mean!r} != beta = {beta} (spreading-power normalization)")
    zero_w = 1.0 - 1.0 / beta + sum(w / beta for l, w in pi_atoms if l == 0.0)
    merged = [(0.0, zero_w)]
    merged += [(l, w / beta) for l, w in pi_atoms if l > 0.0]
    return EigenDistribution(beta=beta, atoms=tuple(merged), density=None, tag=GENERIC)


def as_generic(dist: EigenDistribution) -> EigenDistribution:
    """Copy of ``dist`` with the closed-form tag dropped, forcing the
    R-transform through the numeric inversion path."""
    return EigenDistribution(beta=dist.beta, atoms=dist.atoms,
                             density=dist.density, tag=GENERIC)


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------


def hilbert(dist: EigenDistribution, gamma):
    """Hilbert transform ``C(gamma) = int rho(lam)/(gamma - lam) dlam``.

    Defined for ``gamma`` strictly below the support infimum; the value is
    negative and strictly decreasing in ``gamma`` there.  Accepts scalar
    or array ``gamma``.
    """
    g = np.asarray(gamma, dtype=float)
    if np.any(g >= dist.lambda_min):
        raise ValueError(
            f"gamma must lie strictly below the support infimum "
            f"{dist.lambda_min!r}")
    out = _hilbert_unchecked(dist, g)
    return out if out.ndim else float(out)


def _hilbert_unchecked(dist, g):
    gg = g[..., None]
    out = np.sum(dist._atom_w / (gg - dist._atom_loc), axis=-1)
    if dist.density is not None:
        out = out + np.sum(dist.density.weights / (gg - dist.density.nodes), axis=-1)
    return out


def _hilbert_deriv(dist, g):
    gg = g[..., None]
    out = -np.sum(dist._atom_w / (gg - dist._atom_loc) ** 2, axis=-1)
    if dist.density is not None:
        out = out - np.sum(dist.density.weights / (gg - dist.density.nodes) ** 2,
                           axis=-1)
    return out


def z_min(dist: EigenDistribution, edge_offset: float = 1e-9) -> float:
    """Lower end of the solvable R-transform domain ``(z_min, 0)``.

    ``z_min`` is the limit of the Hilbert transform at the support edge.
    Laws carrying a zero atom (every admissible law with ``beta > 1``)
    have ``z_min = -inf``; otherwise the limit is estimated just below
    the edge.
    """
    if dist.has_zero_atom:
        return -math.inf
    lo = dist.lambda_min
    scale = max(1.0, abs(lo))
    return float(hilbert(dist, lo - edge_offset * scale))


def r_transform(dist: EigenDistribution, z):
    """R-transform of the law, for ``z <= 0`` (scalar or array).

    ``z = 0`` returns the mean.  Laws tagged ``MP`` and ``WBE`` use their
    closed forms; ``GENERIC`` laws invert the Hilbert transform by
    bracketed bisection plus Newton polish and return ``gamma - 1/z``.
    """
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr > 0.0):
        raise ValueError("r_transform is only evaluated on z <= 0")
    beta = dist.beta
    if dist.tag == MP:
        out = 1.0 / (1.0 - beta * z_arr)
    elif dist.tag == WBE:
        out = 2.0 / (1.0 - beta * z_arr
                     + np.sqrt((beta * z_arr - 1.0) ** 2 + 4.0 * z_arr))
    else:
        if z_arr.ndim == 0 and dist.density is None:
            z_val = float(z_arr)
            if z_val == 0.0:
                return dist.mean
            return _invert_hilbert_scalar(dist, z_val) - 1.0 / z_val
        out = np.where(z_arr == 0.0, dist.mean, 1.0)
        neg = z_arr < 0.0
        if np.any(neg):
            zneg = np.atleast_1d(z_arr[neg])
            gamma = _invert_hilbert(dist, zneg)
            rvals = gamma - 1.0 / zneg
            if out.ndim:
                out[neg] = rvals
            else:
                out = rvals.reshape(())
    return out if out.ndim else float(out)


def _invert_hilbert_scalar(dist, z, max_expand=200):
    """Plain-float inversion for purely atomic laws (the solver hot path)."""
    locs, ws = dist._atoms_plain
    edge = dist.lambda_min
    scale = max(1.0, abs(edge))

    def cval(g):
        acc = 0.0
        for l, w in zip(locs, ws):
            acc += w / (g - l)
        return acc

    step = scale
    for _ in range(max_expand):
        if cval(edge - step) < z or step < 1e-300:
            break
        step *= 0.5
    hi = edge - step
    if cval(hi) >= z:
        raise NumericsError(
            f"no bracket for R-transform inversion: z={z!r} lies at or below "
            f"z_min ~= {z_min(dist)!r} of this law")
    lo = edge - 2.0 * scale
    for _ in range(max_expand):
        if cval(lo) > z:
            break
        lo = edge - 2.0 * (edge - lo)
    else:
        raise NumericsError(
            f"no lower bracket for R-transform inversion down to gamma={lo!r}")

    while hi - lo > 1e-15 * max(1.0, abs(lo)):
        mid = 0.5 * (lo + hi)
        if cval(mid) > z:
            lo = mid
        else:
            hi = mid
    gamma = 0.5 * (lo + hi)
    for _ in range(3):
        deriv = 0.0
        for l, w in zip(locs, ws):
            deriv -= w / (gamma - l) ** 2
        cand = gamma - (cval(gamma) - z) / deriv
        if not (math.isfinite(cand) and cand < edge):
            break
        gamma = cand
    return gamma


def _invert_hilbert(dist, z, max_expand=200, bisect_iters=100, newton_iters=3):
    """Solve ``C(gamma) = z`` for ``gamma`` below the support, elementwise.

    The transform is strictly decreasing with range ``(z_min, 0)``, so a
    bracket always exists for admissible ``z``; the upper end is pushed
    toward the support edge until ``C`` falls below ``z``, the lower end
    is doubled away until ``C`` rises above ``z``.
    """
    edge = dist.lambda_min
    scale = max(1.0, abs(edge))

    # upper end: push gamma toward the support edge until C drops below z
    step = np.full_like(z, scale)
    hi = edge - step
    for _ in range(max_expand):
        short = _hilbert_unchecked(dist, hi) >= z
        if not short.any() or step.min() < 1e-300:
            break
        step = np.where(short, 0.5 * step, step)
        hi = edge - step
    short = _hilbert_unchecked(dist, hi) >= z
    if short.any():
        k = int(np.argmax(short))
        raise NumericsError(
            f"no bracket for R-transform inversion: z={z[k]!r} lies at or "
            f"below z_min ~= {z_min(dist)!r} of this law")

    # lower end: double the distance from the edge until C rises above z
    lo = np.full_like(z, edge - 2.0 * scale)
    for _ in range(max_expand):
        short = _hilbert_unchecked(dist, lo) <= z
        if not short.any():
            break
        lo = np.where(short, edge - 2.0 * (edge - lo), lo)
    else:
        raise NumericsError(
            f"no lower bracket for R-transform inversion down to gamma="
            f"{lo.min()!r}")

    for _ in range(bisect_iters):
        mid = 0.5 * (lo + hi)
        above = _hilbert_unchecked(dist, mid) > z
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    gamma = 0.5 * (lo + hi)

    for _ in range(newton_iters):
        resid = _hilbert_unchecked(dist, gamma) - z
        stepn = resid / _hilbert_deriv(dist, gamma)
        cand = gamma - stepn
        ok = np.isfinite(cand) & (cand < edge)
        gamma = np.where(ok, cand, gamma)
    return gamma


def g_integral(dist: EigenDistribution, t: float) -> float:
    """Integral of the R-transform from 0 to ``t`` (``t <= 0``).

    ``G(0) = 0`` and ``G(t) <= 0`` for ``t < 0`` since the R-transform is
    positive on the integration range.
    """
    t = float(t)
    if t > 0.0:
        raise ValueError("g_integral is only evaluated on t <= 0")
    if t == 0.0:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(lambda s: r_transform(dist, s), 0.0, t,
                                  epsabs=1e-12, epsrel=1e-12, limit=200)
    if not math.isfinite(val) or err > 1e-8:
        raise NumericsError(
            f"quadrature of the R-transform on [{t}, 0] did not converge "
            f"(estimate {val!r}, error bound {err!r})")
    return val
