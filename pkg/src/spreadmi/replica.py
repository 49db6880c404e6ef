"""Coupled fixed-point equations of the decoupled channel and the
large-system average mutual information.

The two unknowns are the per-user residual error ``E`` and the effective
inverse noise level ``snr`` of the equivalent scalar channel.  They solve

    E   = mmse(prior, snr)
    snr = R(-E / noise_var) / noise_var

where ``R`` is the R-transform of the limiting eigenvalue law.  At a
fixed point the average mutual information per user is

    C = -snr*E/2 - G(-E/noise_var)/2 - log(2*pi/snr)/2 - 1/2 + h(u; snr)

with ``G`` the integrated R-transform and ``h`` the output entropy.  The
free energy differs from ``C`` by the constant
``(1 + log(2*pi*noise_var)) / (2*beta)``; when several fixed points
coexist the one of minimal free energy is selected.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .channel import InputPrior, mmse, output_entropy
from .errors import NumericsError
from .spectra import EigenDistribution, g_integral, r_transform

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """A large-system instance: input law, eigenvalue law, AWGN variance."""

    prior: InputPrior
    spectrum: EigenDistribution
    noise_var: float

    def __post_init__(self):
        if not self.noise_var > 0.0:
            raise ValueError(f"noise variance must be positive, got {self.noise_var}")


@dataclass(frozen=True)
class SaddleSolution:
    """A fixed point with its diagnostics and information quantities.

    ``mmse`` is the residual error ``E`` in ``[0, 1]``; ``snr`` the
    effective inverse noise level; ``residual`` the remaining fixed-point
    defect; ``free_energy`` and ``mutual_information`` are in nats.
    """

    mmse: float
    snr: float
    iterations: int
    residual: float
    free_energy: float
    mutual_information: float


@dataclass(frozen=True)
class SolveOptions:
    damping: float = 0.5
    step_tol: float = 1e-12
    max_iter: int = 100_000
    accept_tol: float = 1e-9
    polish_iters: int = 40
    initial_snr_scales: tuple[float, ...] = (1e-3, 1.0, 10.0, 100.0)

    def __post_init__(self):
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")


def _snr_update(spec: SystemSpec, snr: float) -> float:
    err = mmse(spec.prior, snr)
    return r_transform(spec.spectrum, -err / spec.noise_var) / spec.noise_var


def _iterate(spec, snr0, opt):
    """Damped fixed-point iteration followed by a secant polish."""
    snr = snr0
    steps = 0
    for steps in range(1, opt.max_iter + 1):
        nxt = (1.0 - opt.damping) * snr + opt.damping * _snr_update(spec, snr)
        done = abs(nxt - snr) <= opt.step_tol * max(1.0, abs(snr))
        snr = nxt
        if done:
            break

    # secant refinement on the defect h(snr) = snr - update(snr)
    def defect(s):
        return s - _snr_update(spec, s)

    a = snr
    fa = defect(a)
    b = snr * (1.0 + 1e-7) + 1e-12
    fb = defect(b)
    for _ in range(opt.polish_iters):
        if abs(fa) <= 1e-14 * max(1.0, abs(a)) or fb == fa:
            break
        c = a - fa * (a - b) / (fa - fb)
        if not math.isfinite(c) or c <= 0.0:
            break
        b, fb = a, fa
        a, fa = c, defect(c)
    if abs(fa) < abs(defect(snr)):
        snr = a
    return snr, abs(defect(snr)), steps


def solve_saddle(spec: SystemSpec, options: SolveOptions | None = None) -> list[SaddleSolution]:
    """All distinct fixed points reachable by damped iteration from the
    configured starting grid, sorted by free energy (ascending).

    Raises :class:`NumericsError` when no start converges within
    tolerance.
    """
    opt = options or SolveOptions()
    trace = []
    found: list[tuple[float, float, int]] = []
    for scale in opt.initial_snr_scales:
        snr0 = scale / spec.noise_var
        snr, residual, steps = _iterate(spec, snr0, opt)
        trace.append((snr0, snr, residual, steps))
        if residual <= opt.accept_tol * max(1.0, snr) and snr > 0.0:
            if not any(abs(snr - s) < 1e-8 * max(1.0, s) for s, _, _ in found):
                found.append((snr, residual, steps))
    if not found:
        lines = ", ".join(
            f"start {s0:.3g} -> snr {s:.6g} (residual {r:.3g}, {n} steps)"
            for s0, s, r, n in trace)
        raise NumericsError(f"no converged fixed point: {lines}")

    solutions = []
    for snr, residual, steps in found:
        err = mmse(spec.prior, snr)
        info = _information_at(spec, err, snr)
        fe = info + _offset(spec)
        solutions.append(SaddleSolution(
            mmse=err, snr=snr, iterations=steps, residual=residual,
            free_energy=fe, mutual_information=info))
    solutions.sort(key=lambda s: s.free_energy)
    if len(solutions) > 1:
        logger.info("found %d coexisting fixed points at noise_var=%g: %s",
                    len(solutions), spec.noise_var,
                    [round(s.snr, 6) for s in solutions])
    return solutions


def _offset(spec: SystemSpec) -> float:
    beta = spec.spectrum.beta
    return (1.0 + math.log(2.0 * math.pi * spec.noise_var)) / (2.0 * beta)


def _information_at(spec: SystemSpec, err: float, snr: float) -> float:
    g_val = g_integral(spec.spectrum, -err / spec.noise_var)
    ent = output_entropy(spec.prior, snr)
    return (-0.5 * snr * err - 0.5 * g_val
            - 0.5 * math.log(2.0 * math.pi / snr) - 0.5 + ent)


def free_energy(spec: SystemSpec, err: float, snr: float) -> float:
    """Free-energy functional at arbitrary ``(E, snr)``, not necessarily a
    fixed point.  At a fixed point it exceeds the mutual information by
    exactly ``(1 + log(2 pi noise_var)) / (2 beta)``."""
    if not 0.0 <= err <= 1.0:
        raise ValueError(f"residual error must lie in [0, 1], got {err}")
    if not snr > 0.0:
        raise ValueError(f"inverse noise level must be positive, got {snr}")
    return _information_at(spec, err, snr) + _offset(spec)


def mutual_information(spec: SystemSpec, options: SolveOptions | None = None) -> SaddleSolution:
    """Average per-user mutual information of the system, in nats.

    Solves the fixed-point equations and, when several solutions coexist,
    returns the one minimizing the free energy.
    """
    return solve_saddle(spec, options)[0]
