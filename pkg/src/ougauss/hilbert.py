"""Bilinear forms of the noise's Hilbert space on step functions.

A :class:`StepFunction` is a finite sum of pieces ``w * h(t) * 1[a, b)(t)``
with a smooth factor ``h``.  Its Lebesgue-Stieltjes measure splits into
point masses ``+w h(a)`` at ``a`` and ``-w h(b)`` at ``b`` plus the density
``w h'(t)`` on ``[a, b)``, and every form below integrates a continuous
covariance against two such measures:

    <f, g> = sum over (atom|density) x (atom|density) of  int int R dnu_f dnu_g.

Because ``R`` is continuous, no component ever meets a non-integrable
singularity.  The diagonal and the origin, where ``R`` is only Holder, are
always segment boundaries of the graded rules in :mod:`._quadrature`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from . import _quadrature as quad
from .errors import IntegrationError, ParameterDomainError
from .kernels import KernelSpec, eval_kernel, fbm_covariance

__all__ = [
    "SmoothFactor",
    "Piece",
    "StepFunction",
    "BilinearResult",
    "KeyInequalityResult",
    "inner_h",
    "inner_h1",
    "inner_h2",
    "inner_with_kernel",
    "verify_key_inequality",
    "zeta_increment_variance",
    "disjoint_support_bound",
    "exp_weight",
    "indicator",
]


@dataclass(frozen=True)
class SmoothFactor:
    """``coef`` (constant), ``coef * exp(rate * (t - anchor))`` or ``coef * t**power``."""

    kind: str = "constant"
    coef: float = 1.0
    rate: float = 0.0
    anchor: float = 0.0
    power: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "exponential", "power"):
            raise ValueError(f"unknown smooth factor kind {self.kind!r}")
        if self.kind == "power" and self.power <= 0:
            raise ParameterDomainError("power factors need a positive exponent")

    @classmethod
    def constant(cls, coef: float = 1.0) -> "SmoothFactor":
        return cls("constant", coef)

    @classmethod
    def exponential(cls, rate: float, anchor: float = 0.0, coef: float = 1.0) -> "SmoothFactor":
        return cls("exponential", coef, rate=rate, anchor=anchor)

    @classmethod
    def powerlaw(cls, power: float, coef: float = 1.0) -> "SmoothFactor":
        return cls("power", coef, power=power)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.full(t.shape, self.coef)
        if self.kind == "exponential":
            return self.coef * np.exp(self.rate * (t - self.anchor))
        return self.coef * t**self.power

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.zeros(t.shape)
        if self.kind == "exponential":
            return self.rate * self(t)
        with np.errstate(divide="ignore"):
            return self.coef * self.power * t ** (self.power - 1.0)

    @property
    def scale(self) -> float:
        """Length over which the factor varies appreciably."""
        if self.kind == "exponential" and self.rate != 0.0:
            return 2.0 / abs(self.rate)
        return math.inf


@dataclass(frozen=True)
class Piece:
    a: float
    b: float
    weight: float = 1.0
    factor: SmoothFactor = field(default_factory=SmoothFactor)

    def __post_init__(self):
        if not (0.0 <= self.a < self.b):
            raise ParameterDomainError(f"piece interval [{self.a}, {self.b}) is empty or negative")


@dataclass(frozen=True)
class StepFunction:
    pieces: tuple[Piece, ...]
    T: float

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        for p in self.pieces:
            if p.b > self.T:
                raise ParameterDomainError(f"piece [{p.a}, {p.b}) exceeds the domain end {self.T}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for p in self.pieces:
            inside = (t >= p.a) & (t < p.b)
            out = out + np.where(inside, p.weight * p.factor(np.where(inside, t, p.a)), 0.0)
        return out

    def __add__(self, other: "StepFunction") -> "StepFunction":
        return StepFunction(self.pieces + other.pieces, max(self.T, other.T))

    def __mul__(self, c: float) -> "StepFunction":
        return StepFunction(tuple(Piece(p.a, p.b, c * p.weight, p.factor) for p in self.pieces), self.T)

    __rmul__ = __mul__

    def __neg__(self) -> "StepFunction":
        return self * -1.0

    def __sub__(self, other: "StepFunction") -> "StepFunction":
        return self + (-other)

    @property
    def support(self) -> tuple[float, float]:
        return min(p.a for p in self.pieces), max(p.b for p in self.pieces)

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        """Point masses of the measure of ``f`` extended by zero."""
        mass: dict[float, float] = {}
        for p in self.pieces:
            mass[p.a] = mass.get(p.a, 0.0) + p.weight * float(p.factor(p.a))
            mass[p.b] = mass.get(p.b, 0.0) - p.weight * float(p.factor(p.b))
        locs = np.array(sorted(mass))
        masses = np.array([mass[x] for x in locs])
        keep = masses != 0.0
        return locs[keep], masses[keep]

    def densities(self) -> list[tuple[float, float, Callable, float]]:
        out = []
        for p in self.pieces:
            if p.factor.kind == "constant" or p.weight == 0.0:
                continue
            fac, w = p.factor, p.weight
            out.append((p.a, p.b, lambda t, fac=fac, w=w: w * fac.derivative(t), fac.scale))
        return out


def indicator(a: float, b: float, T: float | None = None, weight: float = 1.0) -> StepFunction:
    """``weight * 1[a, b)``."""
    return StepFunction((Piece(a, b, weight),), b if T is None else T)


def exp_weight(rate: float, a: float, b: float, anchor: float = 0.0, T: float | None = None,
               weight: float = 1.0) -> StepFunction:
    """``weight * exp(rate * (t - anchor)) * 1[a, b)``."""
    return StepFunction((Piece(a, b, weight, SmoothFactor.exponential(rate, anchor)),),
                        b if T is None else T)


@dataclass(frozen=True)
class BilinearResult:
    value: float
    abs_error_estimate: float
    diagnostics: tuple[str, ...] = ()

    def __float__(self) -> float:
        return self.value


Kernel = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _atom_density(K: Kernel, x: float, a: float, b: float, dens, scale: float, order: int) -> float:
    return quad.integrate_1d(lambda s: K(np.full(s.shape, x), s) * dens(s), a, b,
                             breaks=(x, 0.0), scale=scale, order=order)


def _density_density(K: Kernel, f_seg, g_seg, order: int) -> float:
    a, b, df, sf = f_seg
    c, d, dg, sg = g_seg
    xr, wr = quad.graded_rule(order, quad.mid_panels(b - a, sf))
    total = 0.0
    for lo, hi in quad.segments(c, d, (a, b)):
        xo, wo = quad.graded_rule(order, quad.mid_panels(hi - lo, sg))
        s = lo + (hi - lo) * xo
        ws = (hi - lo) * wo * dg(s)
        sc = np.clip(s, a, b)[:, None]
        inner = 0.0
        for t, wt in ((a + (sc - a) * xr, (sc - a) * wr), (sc + (b - sc) * xr, (b - sc) * wr)):
            inner = inner + np.sum(K(s[:, None], t) * df(t) * wt, axis=1)
        total += float(np.dot(ws, inner))
    return total


def _components(K: Kernel, f: StepFunction, g: StepFunction, order: int) -> tuple[float, float]:
    """Smooth part of the form at one quadrature order, plus its magnitude."""
    xf, mf = f.atoms()
    xg, mg = g.atoms()
    df, dg = f.densities(), g.densities()
    total, mag = 0.0, 0.0
    for x, m in zip(xf, mf):
        for seg in dg:
            v = m * _atom_density(K, x, seg[0], seg[1], seg[2], seg[3], order)
            total, mag = total + v, mag + abs(v)
    for y, m in zip(xg, mg):
        for seg in df:
            v = m * _atom_density(K, y, seg[0], seg[1], seg[2], seg[3], order)
            total, mag = total + v, mag + abs(v)
    for fs in df:
        for gs in dg:
            v = _density_density(K, fs, gs, order)
            total, mag = total + v, mag + abs(v)
    return total, mag


def inner_with_kernel(K: Kernel, f: StepFunction, g: StepFunction) -> BilinearResult:
    """``int int K(s, t) nu_f(dt) nu_g(ds)`` for an arbitrary continuous kernel."""
    xf, mf = f.atoms()
    xg, mg = g.atoms()
    aa = 0.0
    aa_mag = 0.0
    if len(xf) and len(xg):
        block = mf[:, None] * K(xf[:, None], xg[None, :]) * mg[None, :]
        aa = float(block.sum())
        aa_mag = float(np.abs(block).sum())
    hi_val, mag = _components(K, f, g, quad.HIGH_ORDER)
    lo_val, _ = _components(K, f, g, quad.LOW_ORDER)
    value = aa + hi_val
    err = abs(hi_val - lo_val) + 8 * np.finfo(float).eps * (aa_mag + mag)
    if not (np.isfinite(value) and np.isfinite(err)):
        raise IntegrationError("non-finite bilinear form; check kernel singularities near t = 0")
    return BilinearResult(value, float(err))


def _check_domain(f: StepFunction, g: StepFunction):
    for p in f.pieces + g.pieces:
        if p.a < 0:
            raise ParameterDomainError("step functions live on [0, T)")


def inner_h(f: StepFunction, g: StepFunction, spec: KernelSpec) -> BilinearResult:
    """Inner product under the kernel of ``spec``; ``E[G(f) G(g)]``."""
    _check_domain(f, g)
    return inner_with_kernel(lambda s, t: eval_kernel(spec, s, t), f, g)


def inner_h1(f: StepFunction, g: StepFunction, effective_H: float, scale: float = 1.0) -> BilinearResult:
    """Inner product of ``scale`` times fractional Brownian motion at ``effective_H``."""
    if not 0.0 < effective_H < 1.0 or effective_H == 0.5:
        raise ParameterDomainError(f"effective_H must lie in (0,1) minus 1/2, got {effective_H}")
    _check_domain(f, g)
    return inner_with_kernel(lambda s, t: fbm_covariance(effective_H, s, t, scale), f, g)


def _power_moment(f: StepFunction, H: float, order: int) -> float:
    """``int |f(t)| t^(H-1) dt`` via ``u = t^H``, which removes the singular weight."""
    total = 0.0
    for p in f.pieces:
        fac, w = p.factor, p.weight
        fn = lambda u, fac=fac, w=w: np.abs(w * fac(u ** (1.0 / H))) / H  # noqa: E731
        scale = fac.scale
        if np.isfinite(scale):
            # translate the t-scale of the exponential into the u variable
            scale = scale * H * max(p.b, 1e-300) ** (H - 1.0)
        total += quad.integrate_1d(fn, p.a**H, p.b**H, scale=scale, order=order)
    return total


def inner_h2(f: StepFunction, g: StepFunction, effective_H: float, C_prime: float) -> BilinearResult:
    """``C' * (int |f| t^(H-1) dt) * (int |g| s^(H-1) ds)``.

    Pieces of one function are treated additively, i.e. ``|f|`` is bounded
    by the sum of the absolute pieces; for non-overlapping pieces this is
    exact.
    """
    if C_prime < 0:
        raise ParameterDomainError("C' must be non-negative")
    if C_prime == 0:
        return BilinearResult(0.0, 0.0)
    H = effective_H
    if not 0.0 < H < 1.0:
        raise ParameterDomainError(f"effective_H must lie in (0, 1), got {H}")
    If_hi, Ig_hi = _power_moment(f, H, quad.HIGH_ORDER), _power_moment(g, H, quad.HIGH_ORDER)
    If_lo, Ig_lo = _power_moment(f, H, quad.LOW_ORDER), _power_moment(g, H, quad.LOW_ORDER)
    value = C_prime * If_hi * Ig_hi
    err = abs(value - C_prime * If_lo * Ig_lo) + 4 * np.finfo(float).eps * value
    return BilinearResult(value, err)


@dataclass(frozen=True)
class KeyInequalityResult:
    """``|<f,g> - <f,g>_1| <= <f,g>_2`` with the pieces needed to audit it.

    ``verdict`` is ``"holds"`` when the left side does not exceed the right,
    ``"indeterminate"`` when it exceeds it by less than the combined error
    estimate, and ``"violated"`` otherwise.
    """

    lhs: float
    rhs: float
    margin: float
    error: float
    verdict: str
    full: BilinearResult
    fbm_part: BilinearResult
    bound: BilinearResult

    @property
    def satisfied(self) -> bool:
        return self.verdict != "violated"


def verify_key_inequality(spec: KernelSpec, f: StepFunction, g: StepFunction,
                          C_prime: float | None = None) -> KeyInequalityResult:
    """Compare the kernel's form with its fBm part and the power-weight bound.

    Without ``C_prime`` the constant is estimated by
    :func:`ougauss.hypothesis.check_hypothesis` over the joint support.
    """
    spec.require_hypothesis_exponent()
    if C_prime is None:
        from .hypothesis import check_hypothesis

        T = max(f.T, g.T)
        C_prime = check_hypothesis(spec, T, 64).estimated_C_prime
        if not np.isfinite(C_prime):
            raise ParameterDomainError(f"{spec.label} has no finite C' estimate")
    full = inner_h(f, g, spec)
    part = inner_h1(f, g, spec.effective_H, spec.fbm_scale)
    bound = inner_h2(f, g, spec.effective_H, C_prime)
    lhs = abs(full.value - part.value)
    err = full.abs_error_estimate + part.abs_error_estimate + bound.abs_error_estimate
    margin = bound.value - lhs
    if margin >= 0:
        verdict = "holds"
    elif -margin <= err:
        verdict = "indeterminate"
    else:
        verdict = "violated"
    return KeyInequalityResult(lhs, bound.value, margin, err, verdict, full, part, bound)


def zeta_increment_variance(spec: KernelSpec, theta: float, i: int, delta: float) -> float:
    """``E[(zeta_{t_i} - zeta_{t_{i-1}})^2]`` with ``zeta_t = int_0^t e^(-theta s) dG_s``."""
    if i < 1 or delta <= 0 or theta <= 0:
        raise ParameterDomainError("need i >= 1, delta > 0, theta > 0")
    a, b = (i - 1) * delta, i * delta
    m = exp_weight(-theta, a, b)
    return inner_h(m, m, spec).value


def disjoint_support_bound(f: StepFunction, g: StepFunction, spec: KernelSpec,
                           C_prime: float) -> BilinearResult:
    """Bound on ``|<f, g>|`` for supports ``[a, b]`` and ``[c, d]`` with ``b <= c``.

    The bound integrates ``|f(t) g(s)| [C_H (s - t)^(2H-2) + C' (ts)^(H-1)]``
    with ``C_H = |H (2H - 1)|`` at the effective exponent, scaled by the
    kernel's fBm coefficient.  Supports that share an endpoint are accepted
    as disjoint (half-open intervals) and flagged in the diagnostics.
    """
    spec.require_hypothesis_exponent()
    (a, b), (c, d) = f.support, g.support
    if b > c:
        if d <= a:
            return disjoint_support_bound(g, f, spec, C_prime)
        raise ParameterDomainError("supports overlap")
    H = spec.effective_H
    CH = spec.fbm_scale * abs(H * (2 * H - 1))
    diag = ("supports share the endpoint %g" % b,) if b == c else ()

    def near(order):
        total = 0.0
        for pf in f.pieces:
            for pg in g.pieces:
                xr, wr = quad.graded_rule(order, quad.mid_panels(pf.b - pf.a, pf.factor.scale))
                xo, wo = quad.graded_rule(order, quad.mid_panels(pg.b - pg.a, pg.factor.scale))
                s = pg.a + (pg.b - pg.a) * xo
                t = pf.a + (pf.b - pf.a) * xr
                gs = np.abs(pg.weight * pg.factor(s)) * (pg.b - pg.a) * wo
                ft = np.abs(pf.weight * pf.factor(t)) * (pf.b - pf.a) * wr
                with np.errstate(divide="ignore"):
                    ker = (s[:, None] - t[None, :]) ** (2 * H - 2)
                total += float(gs @ ker @ ft)
        return total

    hi, lo = near(quad.HIGH_ORDER), near(quad.LOW_ORDER)
    h2 = inner_h2(f, g, H, C_prime)
    value = CH * hi + h2.value
    err = CH * abs(hi - lo) + h2.abs_error_estimate
    return BilinearResult(value, err, diag)


def random_step_function(rng: np.random.Generator, T: float, max_pieces: int = 3,
                         kinds: Iterable[str] = ("constant", "exponential", "power")) -> StepFunction:
    """Random non-overlapping step function on ``[0, T)`` for property tests."""
    kinds = tuple(kinds)
    n = int(rng.integers(1, max_pieces + 1))
    cuts = np.sort(rng.uniform(0.0, T, size=2 * n))
    pieces = []
    for k in range(n):
        a, b = float(cuts[2 * k]), float(cuts[2 * k + 1])
        if b - a < 1e-3 * T:
            b = min(T, a + 1e-3 * T)
        kind = kinds[int(rng.integers(len(kinds)))]
        if kind == "exponential":
            fac = SmoothFactor.exponential(float(rng.uniform(-1.5, 1.5)), anchor=a)
        elif kind == "power":
            fac = SmoothFactor.powerlaw(float(rng.uniform(0.5, 2.0)))
        else:
            fac = SmoothFactor.constant()
        pieces.append(Piece(a, b, float(rng.normal()), fac))
    return StepFunction(tuple(pieces), T)
