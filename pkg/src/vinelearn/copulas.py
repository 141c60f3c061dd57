"""
Parametric bivariate copula families.

Every family here is exchangeable, C(u, v) = C(v, u), so the order of the
two arguments never changes a density value.  The conditional distribution
function ``h(u | v) = dC(u, v) / dv`` and its inverse drive both the
pseudo-observation recursion of a vine and conditional sampling.

Parameter domains
-----------------
=============  ======================
Independence   no parameter (theta=0)
Gaussian       rho in (-1, 1)
Clayton        theta in (0, inf)
Frank          theta in R \\ {0}
Gumbel         theta in [1, inf)
=============  ======================
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate, optimize, special, stats

from .errors import ConvergenceError, DegenerateDataError, DomainError, ParameterError

#: Clamp applied to every u, v before log/power operations.
EPS = 1e-10

#: Tail grids for the three-way family check.
LOWER_TAIL_GRID = 0.02 * np.arange(1, 11)
UPPER_TAIL_GRID = 0.80 + 0.02 * np.arange(10)


class Family(str, Enum):
    INDEPENDENCE = "Independence"
    GAUSSIAN = "Gaussian"
    CLAYTON = "Clayton"
    FRANK = "Frank"
    GUMBEL = "Gumbel"

    def __str__(self):
        return self.value


CANDIDATES = (Family.INDEPENDENCE, Family.GAUSSIAN, Family.CLAYTON,
              Family.FRANK, Family.GUMBEL)

# Search bounds for maximum likelihood; Clayton and Frank bounds are mirrored
# for negative Kendall tau where the family allows it.
_FIT_BOUNDS = {
    Family.GAUSSIAN: (-0.999, 0.999),
    Family.CLAYTON: (1e-4, 28.0),
    Family.FRANK: (1e-4, 40.0),
    Family.GUMBEL: (1.0, 20.0),
}


def _check_theta(family, theta):
    if not np.isfinite(theta):
        raise ParameterError(f"{family} parameter must be finite, got {theta}")
    if family is Family.INDEPENDENCE:
        return
    if family is Family.GAUSSIAN and not -1.0 < theta < 1.0:
        raise ParameterError(f"Gaussian rho must lie in (-1, 1), got {theta}")
    if family is Family.CLAYTON and not theta > 0.0:
        raise ParameterError(f"Clayton theta must be > 0, got {theta}")
    if family is Family.FRANK and theta == 0.0:
        raise ParameterError("Frank theta must be nonzero")
    if family is Family.GUMBEL and not theta >= 1.0:
        raise ParameterError(f"Gumbel theta must be >= 1, got {theta}")


@dataclass(frozen=True)
class BivariateCopula:
    """A pair-copula: a family tag plus its scalar parameter."""

    family: Family
    theta: float = 0.0

    def __post_init__(self):
        family = Family(self.family)
        theta = 0.0 if family is Family.INDEPENDENCE else float(self.theta)
        _check_theta(family, theta)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "theta", theta)

    @property
    def n_params(self):
        return 0 if self.family is Family.INDEPENDENCE else 1

    @property
    def is_independence(self):
        return self.family is Family.INDEPENDENCE

    def pdf(self, u, v):
        return density(self, u, v)

    def logpdf(self, u, v):
        return log_density(self, u, v)

    def cdf(self, u, v):
        return cdf(self, u, v)

    def h(self, u, v):
        return h(self, u, v)

    def h_inverse(self, p, v):
        return h_inverse(self, p, v)

    def tau(self):
        return theta_to_tau(self.family, self.theta)

    def __repr__(self):
        if self.is_independence:
            return "BivariateCopula(Independence)"
        return f"BivariateCopula({self.family.value}, theta={self.theta:.6g})"


INDEPENDENCE = BivariateCopula(Family.INDEPENDENCE)


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def _unit(x, name, closed=False):
    arr = np.asarray(x, dtype=float)
    if closed:
        bad = ~((arr >= 0.0) & (arr <= 1.0))
    else:
        bad = ~((arr > 0.0) & (arr < 1.0))
    if np.any(bad):
        interval = "[0, 1]" if closed else "(0, 1)"
        raise DomainError(f"{name} must lie in {interval}; got {arr[bad].ravel()[:3]}")
    return arr


def _result(arr, scalar):
    return float(arr) if scalar else arr


def _is_scalar(*xs):
    return all(np.ndim(x) == 0 for x in xs)


def _clip(x):
    return np.clip(x, EPS, 1.0 - EPS)


# ---------------------------------------------------------------------------
# family kernels; inputs are clipped arrays broadcast to a common shape
# ---------------------------------------------------------------------------

def _clayton_log_sum(theta, u, v):
    # log(u^-theta + v^-theta - 1) without overflow
    a = -theta * np.log(u)
    b = -theta * np.log(v)
    m = np.maximum(a, b)
    return m + np.log(np.exp(a - m) + np.exp(b - m) - np.exp(-m))


def _gumbel_log_a(theta, u, v):
    x = -np.log(u)
    y = -np.log(v)
    return np.logaddexp(theta * np.log(x), theta * np.log(y)), x, y


def _log_density(c, u, v):
    t = c.theta
    f = c.family
    if f is Family.INDEPENDENCE:
        return np.zeros(np.broadcast(u, v).shape)
    if f is Family.GAUSSIAN:
        a = special.ndtri(u)
        b = special.ndtri(v)
        r2 = 1.0 - t * t
        return -0.5 * np.log(r2) - (t * t * (a * a + b * b) - 2.0 * t * a * b) / (2.0 * r2)
    if f is Family.CLAYTON:
        lsum = _clayton_log_sum(t, u, v)
        return (np.log1p(t) - (1.0 + t) * (np.log(u) + np.log(v))
                - (2.0 + 1.0 / t) * lsum)
    if f is Family.FRANK:
        g = np.expm1(-t)
        a = np.expm1(-t * u)
        b = np.expm1(-t * v)
        return np.log(-t * g) - t * (u + v) - 2.0 * np.log(np.abs(g + a * b))
    if f is Family.GUMBEL:
        log_a, x, y = _gumbel_log_a(t, u, v)
        w = np.exp(log_a / t)
        return (-w + x + y + (t - 1.0) * (np.log(x) + np.log(y))
                + (1.0 / t - 2.0) * log_a + np.log(w + t - 1.0))
    raise ParameterError(f"unknown family {f}")


def _cdf(c, u, v):
    t = c.theta
    f = c.family
    if f is Family.INDEPENDENCE:
        return u * v
    if f is Family.GAUSSIAN:
        return _bvn_cdf(special.ndtri(u), special.ndtri(v), t)
    if f is Family.CLAYTON:
        return np.exp(-_clayton_log_sum(t, u, v) / t)
    if f is Family.FRANK:
        g = np.expm1(-t)
        return -np.log1p(np.expm1(-t * u) * np.expm1(-t * v) / g) / t
    if f is Family.GUMBEL:
        log_a, _, _ = _gumbel_log_a(t, u, v)
        return np.exp(-np.exp(log_a / t))
    raise ParameterError(f"unknown family {f}")


def _h(c, u, v):
    t = c.theta
    f = c.family
    if f is Family.INDEPENDENCE:
        return u * np.ones_like(v)
    if f is Family.GAUSSIAN:
        a = special.ndtri(u)
        b = special.ndtri(v)
        return special.ndtr((a - t * b) / math.sqrt(1.0 - t * t))
    if f is Family.CLAYTON:
        lsum = _clayton_log_sum(t, u, v)
        return np.exp(-(t + 1.0) * np.log(v) - (1.0 + 1.0 / t) * lsum)
    if f is Family.FRANK:
        g = np.expm1(-t)
        a = np.expm1(-t * u)
        b = np.expm1(-t * v)
        return a * np.exp(-t * v) / (g + a * b)
    if f is Family.GUMBEL:
        log_a, x, y = _gumbel_log_a(t, u, v)
        w = np.exp(log_a / t)
        return np.exp(-w + (1.0 / t - 1.0) * log_a + (t - 1.0) * np.log(y) + y)
    raise ParameterError(f"unknown family {f}")


def _h_inverse(c, p, v, tol=1e-10, max_iter=200):
    t = c.theta
    f = c.family
    if f is Family.INDEPENDENCE:
        return p * np.ones_like(v)
    if f is Family.GAUSSIAN:
        return special.ndtr(special.ndtri(p) * math.sqrt(1.0 - t * t) + t * special.ndtri(v))
    if f is Family.CLAYTON:
        e = np.expm1(-t / (1.0 + t) * np.log(p))
        log_inner = np.logaddexp(0.0, -t * np.log(v) + np.log(e))
        return np.exp(-log_inner / t)
    if f is Family.FRANK:
        g = np.expm1(-t)
        b = np.expm1(-t * v)
        a = p * g / (1.0 + b * (1.0 - p))
        return -np.log1p(a) / t
    return _bisect_h(c, p, v, tol, max_iter)


def _bisect_h(c, p, v, tol, max_iter):
    """Vectorised bisection on h(. | v) = p; h is increasing in u."""
    p, v = np.broadcast_arrays(p, v)
    lo = np.full(p.shape, EPS)
    hi = np.full(p.shape, 1.0 - EPS)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        below = _h(c, mid, v) < p
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= tol * 1e-3):
            break
    u = 0.5 * (lo + hi)
    resid = np.abs(_h(c, u, v) - p)
    # only interior targets are required to be matched
    interior = (p > _h(c, np.full(p.shape, EPS), v)) & (p < _h(c, np.full(p.shape, 1 - EPS), v))
    if np.any(resid[interior] > 1e-7):
        raise ConvergenceError(f"h-inverse did not converge for {c!r}")
    return u


def _bvn_cdf(h_, k, rho):
    """Standard bivariate normal CDF via Owen's T function."""
    h_, k = np.broadcast_arrays(np.asarray(h_, float), np.asarray(k, float))
    if rho == 0.0:
        return special.ndtr(h_) * special.ndtr(k)
    h_ = np.where(h_ == 0.0, 1e-15, h_)
    k = np.where(k == 0.0, 1e-15, k)
    s = math.sqrt(1.0 - rho * rho)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        a_h = (k - rho * h_) / (h_ * s)
        a_k = (h_ - rho * k) / (k * s)
    beta = np.where(h_ * k < 0.0, 0.5, 0.0)
    val = (0.5 * special.ndtr(h_) + 0.5 * special.ndtr(k)
           - special.owens_t(h_, a_h) - special.owens_t(k, a_k) - beta)
    return np.clip(val, 0.0, 1.0)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def log_density(c, u, v):
    """Log of the copula density at (u, v), both in (0, 1)."""
    scalar = _is_scalar(u, v)
    u = _clip(_unit(u, "u"))
    v = _clip(_unit(v, "v"))
    return _result(_log_density(c, u, v), scalar)


def density(c, u, v):
    """
    Copula density c(u, v; theta).

    Parameters
    ----------
    c : BivariateCopula
    u, v : float or array_like
        Points strictly inside (0, 1).

    Returns
    -------
    float or ndarray
        Nonnegative density values; exactly 1 for the independence copula.
    """
    scalar = _is_scalar(u, v)
    u = _clip(_unit(u, "u"))
    v = _clip(_unit(v, "v"))
    if c.is_independence:
        return _result(np.ones(np.broadcast(u, v).shape), scalar)
    return _result(np.exp(_log_density(c, u, v)), scalar)


def cdf(c, u, v):
    """Copula distribution function; accepts the closed square [0, 1]^2."""
    scalar = _is_scalar(u, v)
    u = _unit(u, "u", closed=True)
    v = _unit(v, "v", closed=True)
    u, v = np.broadcast_arrays(u, v)
    val = _cdf(c, _clip(u), _clip(v))
    val = np.where(u == 1.0, v, np.where(v == 1.0, u, val))
    val = np.where((u == 0.0) | (v == 0.0), 0.0, val)
    return _result(np.clip(val, 0.0, 1.0), scalar)


def h(c, u, v):
    """Conditional distribution h(u | v) = dC(u, v)/dv."""
    scalar = _is_scalar(u, v)
    u = _clip(_unit(u, "u"))
    v = _clip(_unit(v, "v"))
    return _result(np.clip(_h(c, u, v), 0.0, 1.0), scalar)


def h_inverse(c, p, v):
    """
    Inverse of ``h(. | v)``: the u with h(u | v) = p.

    Closed forms are used for every family except Gumbel, which falls back
    to bracketed bisection on (EPS, 1 - EPS).
    """
    scalar = _is_scalar(p, v)
    p = _clip(_unit(p, "p"))
    v = _clip(_unit(v, "v"))
    u = _h_inverse(c, p, v)
    return _result(_clip(u), scalar)


def loglik(c, u, v):
    """Sum of log-densities over a paired sample; exactly 0 for independence."""
    if c.is_independence:
        _unit(u, "u"), _unit(v, "v")
        return 0.0
    return float(np.sum(log_density(c, u, v)))


def simulate(c, n, rng=None):
    """Draw ``n`` pairs from ``c`` by conditional inversion.  Returns (u, v)."""
    rng = np.random.default_rng(rng)
    v = _clip(rng.random(n))
    w = _clip(rng.random(n))
    return h_inverse(c, w, v), v


# ---------------------------------------------------------------------------
# dependence measures and estimation
# ---------------------------------------------------------------------------

def _tie_pairs(x):
    _, counts = np.unique(x, return_counts=True)
    return float(np.sum(counts * (counts - 1) / 2.0))


def kendall_tau(u, v):
    """
    Kendall's tau-a: (concordant - discordant) / (n choose 2).

    Tied pairs contribute zero.  Computed in O(n log n) by rescaling scipy's
    tau-b with the tie counts.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError("u and v must be 1-D arrays of equal length")
    n = u.size
    if n < 2:
        raise ValueError("kendall_tau needs at least two observations")
    if np.ptp(u) == 0.0 or np.ptp(v) == 0.0:
        raise DegenerateDataError("kendall_tau is undefined for a constant column")
    n0 = n * (n - 1) / 2.0
    tau_b = stats.kendalltau(u, v).statistic
    # concordant minus discordant is an integer; rounding it removes the
    # round-off of the rescaling
    s = round(tau_b * math.sqrt((n0 - _tie_pairs(u)) * (n0 - _tie_pairs(v))))
    return float(np.clip(s / n0, -1.0, 1.0))


def _frank_tau(theta):
    if theta == 0.0:
        return 0.0
    debye, _ = integrate.quad(lambda s: s / math.expm1(s) if s != 0.0 else 1.0, 0.0, theta)
    return 1.0 + 4.0 / theta * (debye / theta - 1.0)


def theta_to_tau(family, theta):
    """Theoretical Kendall tau of a family at parameter ``theta``."""
    family = Family(family)
    _check_theta(family, theta)
    if family is Family.INDEPENDENCE:
        return 0.0
    if family is Family.GAUSSIAN:
        return 2.0 / math.pi * math.asin(theta)
    if family is Family.CLAYTON:
        return theta / (theta + 2.0)
    if family is Family.GUMBEL:
        return 1.0 - 1.0 / theta
    return _frank_tau(theta)


def tau_to_theta(family, tau):
    """Invert Kendall's tau to the family parameter (moment-style estimate)."""
    family = Family(family)
    if not -1.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (-1, 1), got {tau}")
    if family is Family.INDEPENDENCE:
        return 0.0
    if family is Family.GAUSSIAN:
        return math.sin(math.pi * tau / 2.0)
    if family in (Family.CLAYTON, Family.GUMBEL) and tau <= 0.0:
        raise ValueError(f"{family} requires tau > 0, got {tau}")
    if family is Family.CLAYTON:
        return 2.0 * tau / (1.0 - tau)
    if family is Family.GUMBEL:
        return 1.0 / (1.0 - tau)
    if tau == 0.0:
        raise ValueError("Frank requires tau != 0")
    sign = 1.0 if tau > 0 else -1.0
    target = abs(tau)
    hi = 1.0
    while _frank_tau(hi) < target:
        hi *= 2.0
        if hi > 1e6:
            raise ValueError(f"tau={tau} is beyond numerical reach of the Frank family")
    theta = optimize.brentq(lambda t: _frank_tau(t) - target, 1e-12, hi, xtol=1e-13, rtol=1e-14)
    return sign * theta


def _pair(u, v, min_n):
    u = _unit(u, "u")
    v = _unit(v, "v")
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError("u and v must be 1-D arrays of equal length")
    if u.size < min_n:
        raise ValueError(f"need at least {min_n} observations, got {u.size}")
    return u, v


def default_min_improvement(n):
    """Log-likelihood gain a one-parameter family must exceed to beat independence."""
    return 0.5 * math.log(n)


def _loglik_kernel(family, u, v):
    """
    Fast ``theta -> sum log c(u, v; theta)`` for repeated evaluation.

    Parameter-free transforms of the sample are computed once; the
    Gaussian case reduces to three sufficient statistics.
    """
    n = u.size
    if family is Family.GAUSSIAN:
        a = special.ndtri(u)
        b = special.ndtri(v)
        s2 = float(np.sum(a * a + b * b))
        s11 = float(np.sum(a * b))

        def kernel(t):
            r2 = 1.0 - t * t
            return -0.5 * n * math.log(r2) - (t * t * s2 - 2.0 * t * s11) / (2.0 * r2)
        return kernel
    if family is Family.CLAYTON:
        lu, lv = np.log(u), np.log(v)
        slog = float(np.sum(lu + lv))

        def kernel(t):
            a = -t * lu
            b = -t * lv
            m = np.maximum(a, b)
            lsum = m + np.log(np.exp(a - m) + np.exp(b - m) - np.exp(-m))
            return n * math.log1p(t) - (1.0 + t) * slog - (2.0 + 1.0 / t) * float(np.sum(lsum))
        return kernel
    if family is Family.GUMBEL:
        x, y = -np.log(u), -np.log(v)
        lx, ly = np.log(x), np.log(y)
        sxy = float(np.sum(x + y))
        slxy = float(np.sum(lx + ly))

        def kernel(t):
            log_a = np.logaddexp(t * lx, t * ly)
            w = np.exp(log_a / t)
            return float(-np.sum(w) + sxy + (t - 1.0) * slxy
                         + (1.0 / t - 2.0) * np.sum(log_a) + np.sum(np.log(w + t - 1.0)))
        return kernel
    if family is Family.FRANK:
        suv = float(np.sum(u + v))

        def kernel(t):
            g = math.expm1(-t)
            a = np.expm1(-t * u)
            b = np.expm1(-t * v)
            return n * math.log(-t * g) - t * suv - 2.0 * float(np.sum(np.log(np.abs(g + a * b))))
        return kernel
    raise ParameterError(f"no likelihood kernel for {family}")


def fit_mle(family, u, v, tau=None, min_improvement=None):
    """
    Maximum likelihood fit of one family to a paired sample.

    The bounded 1-D search is compared against the tau-inversion starting
    value and the better of the two kept.  The fit collapses to the
    independence copula when the optimum fails, or when its log-likelihood
    gain over independence does not exceed ``min_improvement`` (default
    ``0.5 * log(n)``, one BIC parameter).
    """
    family = Family(family)
    u, v = _pair(u, v, 10)
    if family is Family.INDEPENDENCE:
        return INDEPENDENCE
    if min_improvement is None:
        min_improvement = default_min_improvement(u.size)
    if tau is None:
        tau = kendall_tau(u, v)
    uc, vc = _clip(u), _clip(v)

    lo, hi = _FIT_BOUNDS[family]
    if family in (Family.CLAYTON, Family.GUMBEL) and tau <= 0.0:
        return INDEPENDENCE
    if family is Family.FRANK and tau < 0.0:
        lo, hi = -hi, -lo
    try:
        init = tau_to_theta(family, float(np.clip(tau, -0.99, 0.99))) if tau != 0.0 else lo
    except ValueError:
        init = lo
    init = float(np.clip(init, lo, hi))

    kernel = _loglik_kernel(family, uc, vc)

    def neg_ll(theta):
        # extreme trial parameters may overflow; they are simply rejected
        with np.errstate(all="ignore"):
            val = -kernel(theta)
        return val if np.isfinite(val) else 1e300

    try:
        res = optimize.minimize_scalar(neg_ll, bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-7})
        candidates = [(res.fun, float(res.x)), (neg_ll(init), init)]
    except (ValueError, FloatingPointError, ParameterError):
        candidates = [(neg_ll(init), init)]
    best_nll, best_theta = min(candidates)
    if not np.isfinite(best_nll) or -best_nll <= min_improvement:
        return INDEPENDENCE
    return BivariateCopula(family, best_theta)


def _empirical_copula(u, v, grid):
    iu = (u[:, None] <= grid[None, :]).astype(float)
    iv = (v[:, None] <= grid[None, :]).astype(float)
    return iu.T @ iv / u.size


def tail_distance(c, u, v, grid, empirical=None):
    """
    L2 distance between the empirical copula and ``c``'s CDF on ``grid`` x ``grid``.

    ``empirical`` may carry the precomputed empirical copula on that grid.
    """
    emp = _empirical_copula(np.asarray(u), np.asarray(v), grid) if empirical is None else empirical
    gu, gv = np.meshgrid(grid, grid, indexing="ij")
    return float(np.sqrt(np.sum((emp - cdf(c, gu, gv)) ** 2)))


def select_family(u, v, candidates=CANDIDATES, min_improvement=None, return_votes=False):
    """
    Three-way hard-voting family selection.

    Every candidate is fitted by :func:`fit_mle`; one vote goes to the best
    log-likelihood, one to the smallest lower-tail distance and one to the
    smallest upper-tail distance.  Two matching votes win, otherwise the
    likelihood vote decides.
    """
    u, v = _pair(u, v, 10)
    tau = kendall_tau(u, v)
    fits = []
    seen = set()
    for fam in candidates:
        cop = fit_mle(fam, u, v, tau=tau, min_improvement=min_improvement)
        if cop not in seen:
            seen.add(cop)
            fits.append(cop)

    lls = [loglik(c, u, v) for c in fits]
    vote_ll = fits[int(np.argmax(lls))]
    if len(fits) == 1:
        votes = (vote_ll, vote_ll, vote_ll)
    else:
        emp_lo = _empirical_copula(u, v, LOWER_TAIL_GRID)
        emp_hi = _empirical_copula(u, v, UPPER_TAIL_GRID)
        lower = [tail_distance(c, u, v, LOWER_TAIL_GRID, emp_lo) for c in fits]
        upper = [tail_distance(c, u, v, UPPER_TAIL_GRID, emp_hi) for c in fits]
        votes = (vote_ll, fits[int(np.argmin(lower))], fits[int(np.argmin(upper))])
    winner = votes[1] if votes[1] == votes[2] else votes[0]
    if return_votes:
        return winner, votes
    return winner
