"""Covariance kernels of the driving Gaussian noises.

Every kernel is written as ``R(s, t) = E[G_s G_t]`` together with its
derivative in the second argument and the residual mixed partial

    Phi(s, t) = d^2/ds dt [R(s, t) - c * R_h(s, t)],

where ``R_h`` is the fractional Brownian motion covariance at the kernel's
effective Hurst exponent ``h`` and ``c`` (``fbm_scale``) is the constant that
cancels the diagonal singularity ``|t - s|^(2h - 2)`` of ``R``.  Families
whose singular part has no constant coefficient use ``c = 1``.

Closed forms are used for every family; :func:`phi_fd` provides the central
finite-difference route used to cross-check them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy import integrate, special

from .errors import ParameterDomainError, PrecisionError, SingularityError

__all__ = [
    "Family",
    "KernelSpec",
    "kernel",
    "eval_kernel",
    "eval_dR_dt",
    "eval_phi",
    "phi_fd",
    "fbm_covariance",
    "variance",
    "gram_matrix",
    "CONFORMING_FAMILIES",
    "NONCONFORMING_FAMILIES",
]


class Family(str, enum.Enum):
    FBm = "FBm"
    SubFBm = "SubFBm"
    BiFBm = "BiFBm"
    GenSubFBm = "GenSubFBm"
    BojdeckiSum = "BojdeckiSum"
    TalarczykMax = "TalarczykMax"
    HoudreMixed = "HoudreMixed"
    WeightedFBm = "WeightedFBm"
    OdlyzkoType = "OdlyzkoType"
    TalarczykComplement = "TalarczykComplement"


CONFORMING_FAMILIES = (
    Family.FBm,
    Family.SubFBm,
    Family.BiFBm,
    Family.GenSubFBm,
    Family.BojdeckiSum,
    Family.TalarczykMax,
    Family.HoudreMixed,
)
NONCONFORMING_FAMILIES = (
    Family.WeightedFBm,
    Family.OdlyzkoType,
    Family.TalarczykComplement,
)


def _open_unit(name: str, value: float) -> None:
    if not 0.0 < value < 1.0:
        raise ParameterDomainError(f"{name} must lie in (0, 1), got {value}")


def _check_fbm(p):
    _open_unit("H", p["H"])


def _check_bi(p):
    _open_unit("H", p["H"])
    if not 0.0 < p["K"] < 2.0:
        raise ParameterDomainError(f"K must lie in (0, 2), got {p['K']}")
    _open_unit("H*K", p["H"] * p["K"])


def _check_gamma(p):
    _open_unit("gamma", p["gamma"])


def _check_houdre(p):
    _open_unit("H", p["H"])
    _open_unit("K", p["K"])


def _check_weighted(p):
    a, b = p["a"], p["b"]
    if not a > -1.0:
        raise ParameterDomainError(f"a must exceed -1, got {a}")
    if not abs(b) < 1.0:
        raise ParameterDomainError(f"|b| must be < 1, got {b}")
    if not abs(b) < a + 1.0:
        raise ParameterDomainError(f"|b| must be < a + 1, got a={a}, b={b}")


def _check_odlyzko(p):
    K = p["K"]
    if not 0.0 < K < 2.0:
        raise ParameterDomainError(f"K must lie in (0, 2), got {K}")
    if K == 1.0:
        # the two-case covariance formula is undefined at K = 1
        raise ParameterDomainError("K = 1 is not covered by the OdlyzkoType covariance")


# ---------------------------------------------------------------------------
# covariance functions: (params, lo, hi) with lo <= hi, symmetric by construction
# ---------------------------------------------------------------------------


def _R_fbm(p, lo, hi):
    e = 2.0 * p["H"]
    return 0.5 * (lo**e + hi**e - (hi - lo) ** e)


def _R_sub(p, lo, hi):
    e = 2.0 * p["H"]
    return lo**e + hi**e - 0.5 * ((lo + hi) ** e + (hi - lo) ** e)


def _R_bi(p, lo, hi):
    H, K = p["H"], p["K"]
    return 2.0**-K * ((lo ** (2 * H) + hi ** (2 * H)) ** K - (hi - lo) ** (2 * H * K))


def _R_gensub(p, lo, hi):
    H, K = p["H"], p["K"]
    e = 2 * H * K
    return (lo ** (2 * H) + hi ** (2 * H)) ** K - 0.5 * ((lo + hi) ** e + (hi - lo) ** e)


def _R_bojdecki(p, lo, hi):
    e = 2.0 * p["H"]
    return (lo + hi) ** e - (hi - lo) ** e


def _R_talmax(p, lo, hi):
    # the mixed derivative of (s v t)^g carries a measure on the diagonal that
    # pointwise checks of Phi cannot see; the Hilbert forms integrate it exactly
    g = p["gamma"]
    return hi**g - (hi - lo) ** g


def _R_houdre(p, lo, hi):
    H, K = p["H"], p["K"]
    return 0.5 * (lo**H + hi**H - K * (lo + hi) ** H - (1.0 - K) * (hi - lo) ** H)


def _R_weighted(p, lo, hi):
    a, b = p["a"], p["b"]
    e = a + b + 1.0
    beta = special.beta(a + 1.0, b + 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(hi > 0, lo / np.where(hi > 0, hi, 1.0), 0.0)
    return beta * (lo**e + hi**e * special.betainc(a + 1.0, b + 1.0, x))


def _R_odlyzko(p, lo, hi):
    K = p["K"]
    if K < 1.0:
        return math.gamma(1.0 - K) / K * (lo**K + hi**K - (lo + hi) ** K)
    return math.gamma(2.0 - K) / (K * (K - 1.0)) * ((lo + hi) ** K - lo**K - hi**K)


def _R_talcomp(p, lo, hi):
    g = p["gamma"]
    return (lo + hi) ** g - hi**g


# ---------------------------------------------------------------------------
# dR/dt in the second argument; s != t, s, t > 0
# ---------------------------------------------------------------------------


def _absp(d, e):
    """sign(d) * |d|**e."""
    return np.sign(d) * np.abs(d) ** e


def _dR_fbm(p, s, t):
    H = p["H"]
    return H * t ** (2 * H - 1) - H * _absp(t - s, 2 * H - 1)


def _dR_sub(p, s, t):
    H = p["H"]
    return 2 * H * t ** (2 * H - 1) - H * (s + t) ** (2 * H - 1) - H * _absp(t - s, 2 * H - 1)


def _dR_bi(p, s, t):
    H, K = p["H"], p["K"]
    base = s ** (2 * H) + t ** (2 * H)
    return 2.0**-K * (
        2 * H * K * base ** (K - 1) * t ** (2 * H - 1) - 2 * H * K * _absp(t - s, 2 * H * K - 1)
    )


def _dR_gensub(p, s, t):
    H, K = p["H"], p["K"]
    e = 2 * H * K
    base = s ** (2 * H) + t ** (2 * H)
    return (
        2 * H * K * base ** (K - 1) * t ** (2 * H - 1)
        - 0.5 * e * (s + t) ** (e - 1)
        - 0.5 * e * _absp(t - s, e - 1)
    )


def _dR_bojdecki(p, s, t):
    e = 2 * p["H"]
    return e * (s + t) ** (e - 1) - e * _absp(t - s, e - 1)


def _dR_talmax(p, s, t):
    g = p["gamma"]
    return g * t ** (g - 1) * (t > s) - g * _absp(t - s, g - 1)


def _dR_houdre(p, s, t):
    H, K = p["H"], p["K"]
    return 0.5 * H * (t ** (H - 1) - K * (s + t) ** (H - 1) - (1 - K) * _absp(t - s, H - 1))


def _dR_weighted(p, s, t):
    a, b = p["a"], p["b"]
    e = a + b + 1.0
    beta = special.beta(a + 1.0, b + 1.0)
    below = beta * e * t ** (e - 1) + t**a * np.abs(s - t) ** b
    ratio = np.minimum(s / t, 1.0)
    above = (
        e * t ** (e - 1) * beta * special.betainc(a + 1.0, b + 1.0, ratio)
        - s ** (a + 1) * np.abs(t - s) ** b / t
    )
    return np.where(t < s, below, above)


def _dR_odlyzko(p, s, t):
    K = p["K"]
    if K < 1.0:
        return math.gamma(1.0 - K) * (t ** (K - 1) - (s + t) ** (K - 1))
    return math.gamma(2.0 - K) / (K - 1.0) * ((s + t) ** (K - 1) - t ** (K - 1))


def _dR_talcomp(p, s, t):
    g = p["gamma"]
    return g * (s + t) ** (g - 1) - g * t ** (g - 1) * (t > s)


# ---------------------------------------------------------------------------
# closed-form residual mixed partials Phi; s != t, s, t > 0
# ---------------------------------------------------------------------------


def _phi_fbm(p, s, t):
    return np.zeros(np.broadcast(s, t).shape)


def _phi_sub(p, s, t):
    H = p["H"]
    return -H * (2 * H - 1) * (s + t) ** (2 * H - 2)


def _bi_mixed(H, K, s, t):
    # mixed partial of (s^2H + t^2H)^K
    return K * (K - 1) * 4 * H * H * (s * t) ** (2 * H - 1) * (s ** (2 * H) + t ** (2 * H)) ** (K - 2)


def _phi_bi(p, s, t):
    return 2.0 ** -p["K"] * _bi_mixed(p["H"], p["K"], s, t)


def _phi_gensub(p, s, t):
    H, K = p["H"], p["K"]
    e = 2 * H * K
    return _bi_mixed(H, K, s, t) - 0.5 * e * (e - 1) * (s + t) ** (e - 2)


def _phi_bojdecki(p, s, t):
    e = 2 * p["H"]
    return e * (e - 1) * (s + t) ** (e - 2)


def _phi_houdre(p, s, t):
    H, K = p["H"], p["K"]
    return -0.5 * K * H * (H - 1) * (s + t) ** (H - 2)


def _phi_weighted(p, s, t):
    a, b = p["a"], p["b"]
    d = np.abs(t - s) ** (b - 1)
    return b * (np.minimum(s, t) ** a - 0.5 * (b + 1)) * d


def _phi_odlyzko(p, s, t):
    K = p["K"]
    return math.gamma(2.0 - K) * (s + t) ** (K - 2) - 0.5 * K * (K - 1) * np.abs(t - s) ** (K - 2)


def _phi_talcomp(p, s, t):
    g = p["gamma"]
    return g * (g - 1) * (s + t) ** (g - 2) - 0.5 * g * (g - 1) * np.abs(t - s) ** (g - 2)


@dataclass(frozen=True)
class _FamilyDef:
    params: tuple[str, ...]
    check: Callable
    R: Callable
    dR_dt: Callable
    phi: Callable
    effective_H: Callable
    fbm_scale: Callable


_FAMILIES: dict[Family, _FamilyDef] = {
    Family.FBm: _FamilyDef(("H",), _check_fbm, _R_fbm, _dR_fbm, _phi_fbm,
                           lambda p: p["H"], lambda p: 1.0),
    Family.SubFBm: _FamilyDef(("H",), _check_fbm, _R_sub, _dR_sub, _phi_sub,
                              lambda p: p["H"], lambda p: 1.0),
    Family.BiFBm: _FamilyDef(("H", "K"), _check_bi, _R_bi, _dR_bi, _phi_bi,
                             lambda p: p["H"] * p["K"], lambda p: 2.0 ** (1.0 - p["K"])),
    Family.GenSubFBm: _FamilyDef(("H", "K"), _check_bi, _R_gensub, _dR_gensub, _phi_gensub,
                                 lambda p: p["H"] * p["K"], lambda p: 1.0),
    Family.BojdeckiSum: _FamilyDef(("H",), _check_fbm, _R_bojdecki, _dR_bojdecki, _phi_bojdecki,
                                   lambda p: p["H"], lambda p: 2.0),
    Family.TalarczykMax: _FamilyDef(("gamma",), _check_gamma, _R_talmax, _dR_talmax, _phi_fbm,
                                    lambda p: 0.5 * p["gamma"], lambda p: 2.0),
    Family.HoudreMixed: _FamilyDef(("H", "K"), _check_houdre, _R_houdre, _dR_houdre, _phi_houdre,
                                   lambda p: 0.5 * p["H"], lambda p: 1.0 - p["K"]),
    Family.WeightedFBm: _FamilyDef(("a", "b"), _check_weighted, _R_weighted, _dR_weighted,
                                   _phi_weighted, lambda p: 0.5 * (p["b"] + 1.0), lambda p: 1.0),
    Family.OdlyzkoType: _FamilyDef(("K",), _check_odlyzko, _R_odlyzko, _dR_odlyzko, _phi_odlyzko,
                                   lambda p: 0.5 * p["K"], lambda p: 1.0),
    Family.TalarczykComplement: _FamilyDef(("gamma",), _check_gamma, _R_talcomp, _dR_talcomp, _phi_talcomp,
                                           lambda p: 0.5 * p["gamma"], lambda p: 1.0),
}


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family with its parameters.

    ``params`` is stored as a sorted tuple of ``(name, value)`` pairs so that
    specs are hashable and can key factorization caches.  ``effective_H`` and
    ``fbm_scale`` are derived once at construction.
    """

    family: Family
    params: tuple[tuple[str, float], ...]
    effective_H: float = field(init=False)
    fbm_scale: float = field(init=False)

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        d = _FAMILIES[fam]
        given = dict(self.params)
        missing = [k for k in d.params if k not in given]
        extra = [k for k in given if k not in d.params]
        if missing or extra:
            raise ParameterDomainError(
                f"{fam.value} takes parameters {d.params}; missing {missing}, unexpected {extra}"
            )
        p = {k: float(given[k]) for k in d.params}
        d.check(p)
        object.__setattr__(self, "params", tuple(sorted(p.items())))
        object.__setattr__(self, "effective_H", float(d.effective_H(p)))
        object.__setattr__(self, "fbm_scale", float(d.fbm_scale(p)))

    @property
    def p(self) -> Mapping[str, float]:
        return dict(self.params)

    @property
    def label(self) -> str:
        inner = ",".join(f"{k}={v:g}" for k, v in self.params)
        return f"{self.family.value}({inner})"

    def require_hypothesis_exponent(self) -> None:
        """Reject exponents excluded by the covariance hypothesis."""
        h = self.effective_H
        if not 0.0 < h < 1.0 or h == 0.5:
            raise ParameterDomainError(
                f"effective_H must lie in (0, 1/2) or (1/2, 1), got {h} for {self.label}"
            )


def kernel(family: str | Family, **params: float) -> KernelSpec:
    """Build a :class:`KernelSpec`, e.g. ``kernel("SubFBm", H=0.75)``."""
    try:
        fam = Family(family)
    except ValueError:
        raise ParameterDomainError(f"unknown kernel family {family!r}; "
                                   f"choose from {[f.value for f in Family]}") from None
    return KernelSpec(fam, tuple(sorted(params.items())))


def _as_times(s, t):
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise ParameterDomainError("times must be non-negative")
    return s, t


def eval_kernel(spec: KernelSpec, s, t):
    """Covariance ``R(s, t)``; scalars in, float out; arrays broadcast."""
    s, t = _as_times(s, t)
    lo = np.minimum(s, t)
    hi = np.maximum(s, t)
    out = _FAMILIES[spec.family].R(spec.p, lo, hi)
    return float(out) if np.ndim(out) == 0 else out


def variance(spec: KernelSpec, t):
    """``E[G_t^2] = R(t, t)``."""
    return eval_kernel(spec, t, t)


def fbm_covariance(H: float, s, t, scale: float = 1.0):
    """``scale * R_H(s, t)`` for fractional Brownian motion."""
    s, t = _as_times(s, t)
    lo = np.minimum(s, t)
    hi = np.maximum(s, t)
    out = scale * _R_fbm({"H": H}, lo, hi)
    return float(out) if np.ndim(out) == 0 else out


def _off_diagonal(s, t):
    s, t = _as_times(s, t)
    if np.any(s <= 0) or np.any(t <= 0):
        raise ParameterDomainError("derivatives need s, t > 0")
    if np.any(s == t):
        raise SingularityError("derivative requested on the diagonal s = t")
    return s, t


def eval_dR_dt(spec: KernelSpec, s, t):
    """Partial derivative of ``R(s, t)`` in ``t`` off the diagonal."""
    s, t = _off_diagonal(s, t)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = _FAMILIES[spec.family].dR_dt(spec.p, s, t)
    return float(out) if np.ndim(out) == 0 else out


def eval_phi(spec: KernelSpec, s, t):
    """Closed-form residual mixed partial ``Phi(s, t)`` off the diagonal."""
    s, t = _off_diagonal(s, t)
    out = _FAMILIES[spec.family].phi(spec.p, s, t)
    return float(out) if np.ndim(out) == 0 else out


def _residual(spec: KernelSpec, s, t):
    return eval_kernel(spec, s, t) - fbm_covariance(spec.effective_H, s, t, spec.fbm_scale)


_MIN_REL_STEP = 1e-7


def phi_fd(spec: KernelSpec, s: float, t: float, h: float | None = None) -> float:
    """Central finite-difference estimate of ``Phi(s, t)``.

    The default step is ``eps**(1/4) * min(s, t)``, further limited to a
    quarter of the distance to the diagonal so the stencil never straddles it.
    """
    s, t = float(s), float(t)
    _off_diagonal(s, t)
    if h is None:
        h = np.finfo(float).eps ** 0.25 * min(s, t)
        h = min(h, 0.25 * abs(s - t))
    if h < _MIN_REL_STEP * max(s, t, 1.0) or h >= min(s, t):
        raise PrecisionError(f"finite-difference step {h:g} unusable at (s={s}, t={t})")
    D = _residual
    num = D(spec, s + h, t + h) - D(spec, s + h, t - h) - D(spec, s - h, t + h) + D(spec, s - h, t - h)
    return float(num / (4.0 * h * h))


def weighted_residual_quad(a: float, b: float, lo: float, hi: float) -> float:
    """``int_lo^hi u^a (hi - u)^b du`` by adaptive quadrature.

    For ``b < 0`` the endpoint singularity at ``u = hi`` is removed with
    ``u = hi - v^(1/(1+b))``, which turns the integrand into ``u^a / (1+b)``.
    """
    if hi <= lo:
        return 0.0
    if b < 0:
        q = 1.0 / (1.0 + b)
        val, err = integrate.quad(lambda v: (hi - v**q) ** a * q, 0.0, (hi - lo) ** (1.0 + b),
                                  epsabs=1e-13, epsrel=1e-12, limit=200)
    else:
        val, err = integrate.quad(lambda u: u**a * (hi - u) ** b, lo, hi,
                                  epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


def gram_matrix(spec: KernelSpec, times) -> np.ndarray:
    """``[R(t_i, t_j)]`` for the given times."""
    t = np.asarray(times, dtype=float)
    return eval_kernel(spec, t[:, None], t[None, :])
