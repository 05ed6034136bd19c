"""Descent (H) and variance (G) reduction factors as functions of the risk.

With Gaussian data the scalar residual ``w = <a, x - x*> - eps`` has the law
of ``sqrt(2 r) z - eps`` with ``z`` standard normal, so

    H_c(r) = P(|w| <= c),    G_c(r) = E[min(w**2, c**2)] / E[w**2].

Closed forms are provided per noise family, plus two independent oracles:
nested quadrature and Monte Carlo.  Every closed form is written as
``body`` and ``tail`` pieces so that both small-c ratios (H/G, H**2/G as
c -> 0) and large-c values (H, G -> 1) keep full precision.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy import integrate, special

from .noise import Gaussian, NoiseModel, RademacherLike, SymmetricExponential, Uniform

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


class ReductionPair(NamedTuple):
    H: float
    G: float


class MonteCarloPair(NamedTuple):
    H: float
    G: float
    se_H: float
    se_G: float


class QuadratureError(RuntimeError):
    pass


def _clip01(x):
    return np.clip(x, 0.0, 1.0)


# -- Gaussian noise -----------------------------------------------------------


def h_gaussian(r, sigma, c):
    """erf(c / sqrt(4 (r + sigma**2/2))); 1 when r = sigma = 0."""
    r, sigma, c = np.broadcast_arrays(*map(np.asarray, (r, sigma, c)))
    s2 = 2.0 * r + sigma**2
    with np.errstate(divide="ignore", invalid="ignore"):
        h = special.erf(c / np.sqrt(2.0 * s2))
    h = np.where((s2 == 0) | np.isinf(c), 1.0, h)
    return h[()] if h.ndim == 0 else h


def _gauss_body_second_moment(z):
    """F(z) = E[xi**2 ; |xi| <= z] for standard normal xi."""
    return special.erf(z / _SQRT2) - math.sqrt(2.0 / math.pi) * z * np.exp(-0.5 * z * z)


def g_gaussian(r, sigma, c):
    """F(z) + z**2 erfc(z/sqrt 2) with z = c / sqrt(2 r + sigma**2)."""
    r, sigma, c = np.broadcast_arrays(*map(np.asarray, (r, sigma, c)))
    s2 = 2.0 * r + sigma**2
    with np.errstate(divide="ignore", invalid="ignore"):
        z = c / np.sqrt(s2)
        g = _gauss_body_second_moment(z) + z * z * special.erfc(z / _SQRT2)
    g = np.where((s2 == 0) | np.isinf(c), 1.0, _clip01(g))
    return g[()] if g.ndim == 0 else g


# -- Rademacher-like noise ----------------------------------------------------


def _shifted_pieces(mu, s, c):
    """For w = mu + s*xi: P(|w|<=c), E[w^2; |w|<=c], P(|w|>c)."""
    alpha = (-c - mu) / s
    beta = (c - mu) / s
    body = 0.5 * (special.erf((c - mu) / (s * _SQRT2)) + special.erf((c + mu) / (s * _SQRT2)))
    tail = 0.5 * (special.erfc((c - mu) / (s * _SQRT2)) + special.erfc((c + mu) / (s * _SQRT2)))
    pa = np.exp(-0.5 * alpha**2) / _SQRT2PI
    pb = np.exp(-0.5 * beta**2) / _SQRT2PI
    m2 = (mu**2 + s**2) * body + 2.0 * mu * s * (pa - pb) + s**2 * (alpha * pa - beta * pb)
    return body, m2, tail


def _rademacher_moments(r, p, lam, c):
    """(H, E[min(w^2, c^2)]) on broadcast arrays, finite c, r > 0."""
    s = np.sqrt(2.0 * r)
    b0, m0, t0 = _shifted_pieces(0.0, s, c)
    b1, m1, t1 = _shifted_pieces(lam, s, c)
    h_body = (1 - p) * b0 + p * b1
    tail = (1 - p) * t0 + p * t1
    h = np.where(tail < 0.5, 1.0 - tail, h_body)
    second = (1 - p) * m0 + p * m1 + c**2 * tail
    return h, second


def _rademacher_rest(p, lam, c):
    h = np.where(lam <= c, 1.0, 1.0 - p)
    g = np.where(lam <= c, 1.0, (c / lam) ** 2)
    return h, g


def h_rademacher(r, p, lam, c):
    r, p, lam, c = np.broadcast_arrays(*map(np.asarray, (r, p, lam, c)))
    with np.errstate(divide="ignore", invalid="ignore"):
        h, _ = _rademacher_moments(r, p, lam, c)
    h = np.where(r == 0, _rademacher_rest(p, lam, c)[0], h)
    h = np.where(np.isinf(c), 1.0, _clip01(h))
    return h[()] if h.ndim == 0 else h


def g_rademacher(r, p, lam, c):
    r, p, lam, c = np.broadcast_arrays(*map(np.asarray, (r, p, lam, c)))
    with np.errstate(divide="ignore", invalid="ignore"):
        _, second = _rademacher_moments(r, p, lam, c)
        g = second / (2.0 * r + p * lam**2)
    g = np.where(r == 0, _rademacher_rest(p, lam, c)[1], g)
    g = np.where(np.isinf(c), 1.0, _clip01(g))
    return g[()] if g.ndim == 0 else g


# -- exact piecewise Gaussian integrals (uniform and Laplace noise) ----------
#
# Conditioning on xi, the probability and second moment of w = s*xi + e over
# an interval [lo, hi] are piecewise functions of xi of the form
# poly(xi) * exp(logc + beta*xi), which integrate against the standard normal
# density in closed form.


def _log_phi_diff(a: float, b: float) -> float:
    """log(Phi(b) - Phi(a)) for a < b, stable in both tails."""
    if a >= b:
        return -math.inf
    if a > 0:
        la, lb = float(special.log_ndtr(-a)), float(special.log_ndtr(-b))
        if la == -math.inf:
            return -math.inf
        return la + math.log(-math.expm1(lb - la))
    la, lb = float(special.log_ndtr(a)), float(special.log_ndtr(b))
    if lb == -math.inf:
        return -math.inf
    return lb + math.log(-math.expm1(la - lb))


def _shift_poly(coefs, beta):
    """Coefficients of q(v) = p(v + beta), low order first."""
    n = len(coefs)
    out = [0.0] * n
    for k, ck in enumerate(coefs):
        if ck == 0.0:
            continue
        bp = 1.0
        for j in range(k, -1, -1):
            out[j] += ck * math.comb(k, j) * bp
            bp *= beta
    return out


def _poly_gauss_integral(coefs, beta, logc, a, b):
    """Integral over [a, b] of poly(x) exp(logc + beta x) phi(x) dx."""
    if a >= b:
        return 0.0
    lead = logc + 0.5 * beta * beta
    a2, b2 = a - beta, b - beta
    q = _shift_poly(coefs, beta) if beta else list(coefs)
    ea = math.exp(lead - 0.5 * a2 * a2) / _SQRT2PI if math.isfinite(a2) else 0.0
    eb = math.exp(lead - 0.5 * b2 * b2) / _SQRT2PI if math.isfinite(b2) else 0.0
    j_prev2 = math.exp(lead + _log_phi_diff(a2, b2))
    total = q[0] * j_prev2
    if len(q) == 1:
        return total
    j_prev = ea - eb
    total += q[1] * j_prev
    apow = a2 if ea else 0.0
    bpow = b2 if eb else 0.0
    for j in range(2, len(q)):
        jj = (j - 1) * j_prev2 + apow * ea - bpow * eb
        total += q[j] * jj
        j_prev2, j_prev = j_prev, jj
        apow *= a2
        bpow *= b2
    return total


def _polymul(p, q):
    out = [0.0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def _polysub(p, q):
    n = max(len(p), len(q))
    p = list(p) + [0.0] * (n - len(p))
    q = list(q) + [0.0] * (n - len(q))
    return [a - b for a, b in zip(p, q)]


def _cube(p):
    return _polymul(_polymul(p, p), p)


def _regions(breaks):
    pts = sorted(b for b in breaks if math.isfinite(b))
    edges = [-math.inf, *pts, math.inf]
    for a, b in zip(edges[:-1], edges[1:]):
        if a < b:
            if math.isinf(a) and math.isinf(b):
                mid = 0.0
            elif math.isinf(a):
                mid = b - 1.0
            elif math.isinf(b):
                mid = a + 1.0
            else:
                mid = 0.5 * (a + b)
            yield a, b, mid


def _uniform_interval(M, s, lo, hi):
    """P(lo <= w <= hi) and E[w^2; lo <= w <= hi] for w = s xi + U[-M, M]."""
    breaks = [(lo - M) / s, (lo + M) / s]
    if math.isfinite(hi):
        breaks += [(hi - M) / s, (hi + M) / s]
    m0 = m2 = 0.0
    for a, b, x in _regions(breaks):
        lower_clamped = lo - s * x < -M
        upper_clamped = (hi - s * x) > M
        e1 = -M if lower_clamped else lo - s * x
        e2 = M if upper_clamped else hi - s * x
        if e1 >= e2:
            continue
        e1p = [-M] if lower_clamped else [lo, -s]
        e2p = [M] if upper_clamped else [hi, -s]
        w1 = [-M, s] if lower_clamped else [lo]
        w2 = [M, s] if upper_clamped else [hi]
        p0 = [v / (2 * M) for v in _polysub(e2p, e1p)]
        p2 = [v / (6 * M) for v in _polysub(_cube(w2), _cube(w1))]
        m0 += _poly_gauss_integral(p0, 0.0, 0.0, a, b)
        m2 += _poly_gauss_integral(p2, 0.0, 0.0, a, b)
    return m0, m2


def _laplace_endpoint(rate, s, edge, negative):
    """Antiderivative terms of the Laplace CDF and (x+e)^2-moment at e = edge - s xi.

    Returns two lists of (poly, beta, logc) for the probability and the
    second moment; x + e equals the constant ``edge`` at the endpoint.
    """
    b = rate
    if edge == math.inf:
        return [([1.0], 0.0, 0.0)], [([2 / b**2, 0.0, s * s], 0.0, 0.0)]
    if negative:
        k2 = 0.5 * (edge**2 - 2 * edge / b + 2 / b**2)
        return [([0.5], -b * s, b * edge)], [([k2], -b * s, b * edge)]
    k2 = 0.5 * (edge**2 + 2 * edge / b + 2 / b**2)
    return (
        [([1.0], 0.0, 0.0), ([-0.5], b * s, -b * edge)],
        [([2 / b**2, 0.0, s * s], 0.0, 0.0), ([-k2], b * s, -b * edge)],
    )


def _merge(plus, minus):
    acc = {}
    for sign, terms in ((1.0, plus), (-1.0, minus)):
        for poly, beta, logc in terms:
            key = (beta, logc)
            acc[key] = _polysub(acc.get(key, [0.0]), [-sign * v for v in poly])
    return [(poly, beta, logc) for (beta, logc), poly in acc.items() if any(poly)]


def _laplace_interval(rate, s, lo, hi):
    """P(lo <= w <= hi) and E[w^2; lo <= w <= hi] for w = s xi + Laplace(rate)."""
    breaks = [lo / s] + ([hi / s] if math.isfinite(hi) else [])
    m0 = m2 = 0.0
    for a, b, x in _regions(breaks):
        lo_neg = lo - s * x < 0
        hi_neg = hi - s * x < 0
        f0_hi, f2_hi = _laplace_endpoint(rate, s, hi, hi_neg)
        f0_lo, f2_lo = _laplace_endpoint(rate, s, lo, lo_neg)
        for poly, beta, logc in _merge(f0_hi, f0_lo):
            m0 += _poly_gauss_integral(poly, beta, logc, a, b)
        for poly, beta, logc in _merge(f2_hi, f2_lo):
            m2 += _poly_gauss_integral(poly, beta, logc, a, b)
    return m0, m2


def _rest_moments(noise, c):
    """(P(|eps| <= c), E[eps^2; |eps| <= c], P(|eps| > c)) with no data term."""
    if isinstance(noise, Uniform):
        M = noise.M
        cc = min(c, M)
        return cc / M, cc**3 / (3 * M), max(0.0, 1.0 - c / M)
    b = noise.rate
    t = math.exp(-b * c)
    return -math.expm1(-b * c), 2 / b**2 - t * (c * c + 2 * c / b + 2 / b**2), t


def _continuous_pair(noise, r, c):
    """(H, G) for uniform or Laplace noise, finite c > 0."""
    var = 2.0 * r + noise.variance()
    # below this ratio the data term moves H and G by less than ~1e-12
    if 2.0 * r <= 1e-24 * noise.variance():
        body, m2, tail = _rest_moments(noise, c)
    else:
        s = math.sqrt(2.0 * r)
        interval = _uniform_interval if isinstance(noise, Uniform) else _laplace_interval
        param = noise.M if isinstance(noise, Uniform) else noise.rate
        body, m2 = interval(param, s, -c, c)
        tail = 2.0 * interval(param, s, c, math.inf)[0]
    h = 1.0 - tail if tail < 0.5 else body
    g = (m2 + c * c * tail) / var
    return ReductionPair(min(max(h, 0.0), 1.0), min(max(g, 0.0), 1.0))


def _scalar_family(fn):
    def wrapped(r, param, c):
        if np.ndim(r) == 0 and np.ndim(param) == 0 and np.ndim(c) == 0:
            return fn(float(r), float(param), float(c))
        r, param, c = np.broadcast_arrays(*map(np.asarray, (r, param, c)))
        out = np.array([fn(float(a), float(b), float(x)) for a, b, x in zip(r.ravel(), param.ravel(), c.ravel())])
        return out.reshape(r.shape)

    wrapped.__name__ = fn.__name__
    wrapped.__doc__ = fn.__doc__
    return wrapped


def _edge(r, c, family_fn):
    if r < 0:
        raise ValueError(f"risk must be nonnegative, got {r}")
    if c < 0:
        raise ValueError(f"threshold must be nonnegative, got {c}")
    if math.isinf(c):
        return ReductionPair(1.0, 1.0)
    if c == 0:
        return ReductionPair(0.0, 0.0)
    return family_fn()


@_scalar_family
def h_uniform(r, M, c):
    return _edge(r, c, lambda: _continuous_pair(Uniform(M), r, c)).H


@_scalar_family
def g_uniform(r, M, c):
    return _edge(r, c, lambda: _continuous_pair(Uniform(M), r, c)).G


@_scalar_family
def h_sym_exponential(r, rate, c):
    return _edge(r, c, lambda: _continuous_pair(SymmetricExponential(rate), r, c)).H


@_scalar_family
def g_sym_exponential(r, rate, c):
    return _edge(r, c, lambda: _continuous_pair(SymmetricExponential(rate), r, c)).G


# -- dispatch -----------------------------------------------------------------


def _gaussian_scalar(r, sigma, c):
    s2 = 2.0 * r + sigma * sigma
    if s2 == 0:
        return ReductionPair(1.0, 1.0)
    z = c / math.sqrt(s2)
    h = math.erf(z / _SQRT2)
    g = h - math.sqrt(2.0 / math.pi) * z * math.exp(-0.5 * z * z) + z * z * math.erfc(z / _SQRT2)
    return ReductionPair(h, min(max(g, 0.0), 1.0))


def _shifted_scalar(mu, s, c):
    alpha = (-c - mu) / s
    beta = (c - mu) / s
    u, v = (c - mu) / (s * _SQRT2), (c + mu) / (s * _SQRT2)
    body = 0.5 * (math.erf(u) + math.erf(v))
    tail = 0.5 * (math.erfc(u) + math.erfc(v))
    pa = math.exp(-0.5 * alpha * alpha) / _SQRT2PI
    pb = math.exp(-0.5 * beta * beta) / _SQRT2PI
    m2 = (mu * mu + s * s) * body + 2.0 * mu * s * (pa - pb) + s * s * (alpha * pa - beta * pb)
    return body, m2, tail


def _rademacher_scalar(r, p, lam, c):
    if c == 0:
        return ReductionPair(0.0, 0.0)
    if r == 0:
        return ReductionPair(1.0, 1.0) if lam <= c else ReductionPair(1.0 - p, (c / lam) ** 2)
    s = math.sqrt(2.0 * r)
    b0, m0, t0 = _shifted_scalar(0.0, s, c)
    b1, m1, t1 = _shifted_scalar(lam, s, c)
    tail = (1 - p) * t0 + p * t1
    h = 1.0 - tail if tail < 0.5 else (1 - p) * b0 + p * b1
    g = ((1 - p) * m0 + p * m1 + c * c * tail) / (2.0 * r + p * lam * lam)
    return ReductionPair(min(max(h, 0.0), 1.0), min(max(g, 0.0), 1.0))


def reduction(noise: NoiseModel, r: float, c: float) -> ReductionPair:
    """(H, G) at risk ``r`` and threshold ``c`` (``c = inf`` means unclipped)."""
    r, c = float(r), float(c)
    if r < 0:
        raise ValueError(f"risk must be nonnegative, got {r}")
    if c < 0:
        raise ValueError(f"threshold must be nonnegative, got {c}")
    if math.isinf(c):
        return ReductionPair(1.0, 1.0)
    if isinstance(noise, Gaussian):
        return _gaussian_scalar(r, noise.sigma, c)
    if isinstance(noise, RademacherLike):
        return _rademacher_scalar(r, noise.p, noise.lam, c)
    if isinstance(noise, (Uniform, SymmetricExponential)):
        if c == 0:
            return ReductionPair(0.0, 0.0)
        return _continuous_pair(noise, r, c)
    raise TypeError(f"unsupported noise model {noise!r}")


def reduction_grid(noise: NoiseModel, r: float, c) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (H, G) over an array of thresholds at fixed risk."""
    c = np.asarray(c, dtype=float)
    if isinstance(noise, Gaussian):
        return np.asarray(h_gaussian(r, noise.sigma, c)), np.asarray(g_gaussian(r, noise.sigma, c))
    if isinstance(noise, RademacherLike):
        return (
            np.asarray(h_rademacher(r, noise.p, noise.lam, c)),
            np.asarray(g_rademacher(r, noise.p, noise.lam, c)),
        )
    pairs = [reduction(noise, r, ci) for ci in c.ravel()]
    h = np.array([p.H for p in pairs]).reshape(c.shape)
    g = np.array([p.G for p in pairs]).reshape(c.shape)
    return h, g


def density_at_zero(noise: NoiseModel, r: float) -> float:
    """Density of w at 0; ``inf`` when w has an atom there."""
    s = math.sqrt(2.0 * r)
    if isinstance(noise, Gaussian):
        var = 2.0 * r + noise.sigma**2
        return math.inf if var == 0 else 1.0 / math.sqrt(2 * math.pi * var)
    if isinstance(noise, RademacherLike):
        if s == 0:
            return math.inf if noise.p < 1 else 0.0
        phi = lambda x: math.exp(-0.5 * x * x) / _SQRT2PI  # noqa: E731
        return ((1 - noise.p) * phi(0.0) + noise.p * phi(noise.lam / s)) / s
    if isinstance(noise, Uniform):
        if s == 0:
            return 1.0 / (2 * noise.M)
        return math.erf(noise.M / (s * _SQRT2)) / (2 * noise.M)
    if isinstance(noise, SymmetricExponential):
        b = noise.rate
        return b * 0.5 * float(special.erfcx(b * s / _SQRT2))
    raise TypeError(f"unsupported noise model {noise!r}")


# -- oracle 1: nested quadrature ---------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
_Z_MAX = 12.0
_SUBPANELS = 12


def _gauss_expect_kinked(shift, scale, c):
    """E over y ~ N(0,1) of [1{|scale y + shift| <= c}, min((scale y + shift)^2, c^2)].

    Composite Gauss-Legendre on [-Z, Z], split at the kinks |w| = c so each
    panel integrates an analytic function.  ``shift`` may be an array.
    """
    shift = np.atleast_1d(np.asarray(shift, dtype=float))
    k1 = np.clip((-c - shift) / scale, -_Z_MAX, _Z_MAX)
    k2 = np.clip((c - shift) / scale, -_Z_MAX, _Z_MAX)
    edges = np.stack([np.full_like(k1, -_Z_MAX), k1, k2, np.full_like(k1, _Z_MAX)], axis=-1)
    frac = np.linspace(0.0, 1.0, _SUBPANELS + 1)
    h_out = np.zeros(shift.shape)
    m_out = np.zeros(shift.shape)
    for p in range(3):
        lo, hi = edges[:, p], edges[:, p + 1]
        sub = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
        a, b = sub[:, :-1], sub[:, 1:]
        half = 0.5 * (b - a)
        y = 0.5 * (a + b)[..., None] + half[..., None] * _GL_NODES
        wts = half[..., None] * _GL_WEIGHTS * np.exp(-0.5 * y * y) / _SQRT2PI
        w = scale * y + shift[:, None, None]
        inside = p == 1
        h_out += (wts * inside).sum(axis=(1, 2))
        m_out += (wts * (w * w if inside else c * c)).sum(axis=(1, 2))
    return h_out, m_out


def _quad_density(fn, lo, hi, points):
    pts = sorted({p for p in points if lo < p < hi})
    val, err = integrate.quad_vec(fn, lo, hi, points=pts or None, epsabs=1e-12, epsrel=1e-12)
    return np.asarray(val), float(np.max(err))


def _kink_points(c, s):
    # the smoothed kink at e = c has width ~ s; resolve it explicitly so the
    # adaptive rule cannot step over it on a long interval
    return [c] + [c + sign * k * s for k in (0.5, 1, 2, 4, 8, 12) for sign in (-1, 1)]


def _rest_integrand(c):
    def f(e):
        return np.array([1.0 * (abs(e) <= c), min(e * e, c * c)])

    return f


def reduction_oracle_quadrature(noise: NoiseModel, r: float, c: float) -> ReductionPair:
    """(H, G) by numerical integration, independent of the closed forms.

    The Gaussian data component is integrated by composite Gauss-Legendre
    panels split at the clipping kinks; the noise expectation is an exact sum
    over atoms, Gauss-Hermite (Gaussian noise), or adaptive Gauss-Kronrod
    (uniform and Laplace), split at the kinks.  Raises ``QuadratureError``
    when the error estimate exceeds 1e-6.
    """
    if r < 0:
        raise ValueError(f"risk must be nonnegative, got {r}")
    if math.isinf(c):
        return ReductionPair(1.0, 1.0)
    if c == 0:
        return ReductionPair(0.0, 0.0)
    s = math.sqrt(2.0 * r)
    var = 2.0 * r + noise.variance()
    if var == 0:
        return ReductionPair(1.0, 1.0)
    err = 0.0

    if isinstance(noise, RademacherLike):
        atoms = np.array([0.0, noise.lam, -noise.lam])
        probs = np.array([1 - noise.p, noise.p / 2, noise.p / 2])
        if s == 0:
            h = float(np.sum(probs * (np.abs(atoms) <= c)))
            m = float(np.sum(probs * np.minimum(atoms**2, c * c)))
        else:
            hz, mz = _gauss_expect_kinked(atoms, s, c)
            h, m = float(probs @ hz), float(probs @ mz)

    elif isinstance(noise, Gaussian):
        sig = noise.sigma
        if min(s, sig) == 0:
            hz, mz = _gauss_expect_kinked(0.0, max(s, sig), c)
            h, m = float(hz[0]), float(mz[0])
        else:
            # outer Gauss-Hermite over the narrower Gaussian component
            narrow, wide = min(s, sig), max(s, sig)
            results = []
            for n in (100, 200):
                x, wt = np.polynomial.hermite_e.hermegauss(n)
                wt = wt / _SQRT2PI
                hz, mz = _gauss_expect_kinked(narrow * x, wide, c)
                results.append((float(wt @ hz), float(wt @ mz)))
            (h1, m1), (h, m) = results
            err = max(abs(h - h1), abs(m - m1) / var)

    elif isinstance(noise, Uniform):
        M = noise.M
        if s == 0:
            fn = _rest_integrand(c)
        else:
            fn = lambda e: np.array([v[0] for v in _gauss_expect_kinked(e, s, c)])  # noqa: E731
        val, err = _quad_density(fn, 0.0, M, _kink_points(c, s))
        h, m = val / M
        err /= M

    elif isinstance(noise, SymmetricExponential):
        b = noise.rate
        if s == 0:
            base = _rest_integrand(c)
        else:
            base = lambda e: np.array([v[0] for v in _gauss_expect_kinked(e, s, c)])  # noqa: E731
        fn = lambda e: b * math.exp(-b * e) * base(e)  # noqa: E731
        val, err = _quad_density(fn, 0.0, 40.0 / b, _kink_points(c, s))
        h, m = val

    else:
        raise TypeError(f"unsupported noise model {noise!r}")

    if err > 1e-6:
        raise QuadratureError(f"quadrature error estimate {err:.3g} exceeds 1e-6")
    return ReductionPair(min(max(h, 0.0), 1.0), min(max(m / var, 0.0), 1.0))


# -- oracle 2: Monte Carlo ------------------------------------------------------


def reduction_oracle_montecarlo(
    noise: NoiseModel, r: float, c, n_samples: int, rng: np.random.Generator, batch: int = 1_000_000
) -> MonteCarloPair:
    """Monte Carlo (H, G) with standard errors.

    ``c`` may be an array; every threshold is evaluated on the same samples.
    The denominator E[w^2] = 2r + sigma^2 is exact.
    """
    if n_samples < 1000:
        raise ValueError(f"n_samples must be >= 1000, got {n_samples}")
    c = np.atleast_1d(np.asarray(c, dtype=float))
    c2 = c * c
    cap = np.where(np.isfinite(c2), c2, 0.0)
    var = 2.0 * r + noise.variance()
    s = math.sqrt(2.0 * r)
    cnt = np.zeros(c.shape)
    s1 = np.zeros(c.shape)
    s2 = np.zeros(c.shape)
    done = 0
    while done < n_samples:
        k = min(batch, n_samples - done)
        w = s * rng.standard_normal(k) - noise.sample(rng, k)
        w2 = np.sort(w * w)
        idx = np.searchsorted(w2, c2, side="right")
        cs1 = np.concatenate([[0.0], np.cumsum(w2)])
        cs2 = np.concatenate([[0.0], np.cumsum(w2 * w2)])
        above = k - idx  # zero whenever c is infinite
        cnt += idx
        s1 += cs1[idx] + cap * above
        s2 += cs2[idx] + cap * cap * above
        done += k
    n = float(n_samples)
    h = cnt / n
    mean = s1 / n
    sd = np.sqrt(np.maximum(s2 / n - mean**2, 0.0) * n / (n - 1))
    se_h = np.sqrt(h * (1 - h) / (n - 1))
    out = MonteCarloPair(h, mean / var, se_h, sd / np.sqrt(n) / var)
    if out.H.size == 1:
        return MonteCarloPair(*(float(v[0]) for v in out))
    return out
