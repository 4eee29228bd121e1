"""Eigenvalue-index corrections, unperturbed spectra, tail fits and the
closed-form trigonometric sums used to accelerate conditionally convergent
series.

For the Dirichlet/Robin pair considered here, the q = 0 eigenvalues behave
like (n + delta_n)^2 where delta_n in [-1, 1] solves a scalar phase equation;
delta_n -> 1/2 with a cot(beta)/(pi*(n+1/2)) correction.  Everything below is
indexed so that delta_n exists for n >= 2, while the two lowest modes come
from direct root finding on the explicit q = 0 characteristic function.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import (
    PI,
    BoundaryAngle,
    GridFunction,
    Potential,
    SpectralData,
    as_angle,
    interpolant,
    make_grid,
    mucos,
    musin,
    _frozen,
)
from .errors import ConfigError, DomainError, NumericsError

DELTA_MIN_N = 2


def _phase_map(delta, n, beta: BoundaryAngle):
    """Right-hand side of the fixed-point equation for delta_n.

    With a Dirichlet left end the first arccos contribution is identically 1,
    leaving 1 - arccos(cos b / sqrt((n+d)^2 sin^2 b + cos^2 b)) / pi.
    """
    cb, sb = np.cos(beta.beta), np.sin(beta.beta)
    omega = n + delta
    arg = cb / np.sqrt(omega * omega * sb * sb + cb * cb)
    return 1.0 - np.arccos(arg) / PI


def solve_delta(beta: BoundaryAngle | float, n: int, tol: float = 1e-14) -> float:
    """Solve the phase equation for a single index n >= 2.

    Plain fixed-point iteration seeded at 1/2 (the map contracts like
    cot(beta)/n^2); bisection on [-1, 1] as a fallback for extreme angles.
    """
    if n < DELTA_MIN_N:
        raise ConfigError(f"delta_n is defined only for n >= {DELTA_MIN_N}")
    if tol <= 0:
        raise ConfigError("tol must be positive")
    beta = as_angle(beta)
    out = _solve_delta_array(beta, np.array([n], dtype=float), tol)
    return float(out[0])


def _solve_delta_array(beta: BoundaryAngle, ns: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    delta = np.full(ns.shape, 0.5)
    for _ in range(50):
        new = _phase_map(delta, ns, beta)
        if np.all(np.abs(new - delta) <= tol):
            delta = new
            break
        delta = new
    resid = np.abs(delta - _phase_map(delta, ns, beta))
    bad = resid > tol
    if bad.any():
        # The fixed point is unique on [-1, 1]; d - Phi(d) brackets it there.
        for i in np.flatnonzero(bad):
            lo, hi = -1.0, 1.0
            g = lambda d: d - float(_phase_map(d, ns[i], beta))
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if g(mid) > 0:
                    hi = mid
                else:
                    lo = mid
                if hi - lo < 1e-16:
                    break
            delta[i] = 0.5 * (lo + hi)
        resid = np.abs(delta - _phase_map(delta, ns, beta))
        if np.any(resid > 100 * tol):
            worst = int(np.argmax(resid))
            raise NumericsError(
                f"delta_n iteration stalled at n={int(ns[worst])}, residual {resid[worst]:.3e}"
            )
    return delta


@dataclass(frozen=True)
class DeltaSequence:
    """delta_n values for n = 2..n_max plus the two unperturbed low modes."""

    beta: BoundaryAngle
    values: np.ndarray  # index j holds delta_{j+2}
    low_modes: tuple[float, float]  # lambda_0, lambda_1 of the q = 0 problem

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))

    @property
    def n_max(self) -> int:
        return self.values.size + 1  # covers n = 2..n_max inclusive

    def delta(self, n) -> np.ndarray:
        n = np.asarray(n)
        return self.values[n - 2]

    def omega(self, n) -> np.ndarray:
        """n + delta_n for n >= 2 (the unperturbed lambda_n)."""
        n = np.asarray(n, dtype=float)
        return n + self.values[np.asarray(n, dtype=int) - 2]


def delta_sequence(beta: BoundaryAngle | float, n_max: int, tol: float = 1e-14) -> DeltaSequence:
    """delta_n for n = 2..n_max, plus root-found lambda_0, lambda_1 at q = 0."""
    beta = as_angle(beta)
    if n_max < DELTA_MIN_N:
        raise ConfigError("n_max must be at least 2")
    ns = np.arange(DELTA_MIN_N, n_max + 1, dtype=float)
    values = _solve_delta_array(beta, ns, tol)
    lam0, lam1 = _low_mode_lambdas(beta, float(values[0]))
    return DeltaSequence(beta, values, (lam0, lam1))


def characteristic_q0(beta: BoundaryAngle, mu) -> np.ndarray:
    """q = 0 characteristic function sin(l*pi)cos(b)/l + cos(l*pi)sin(b),
    continued through mu <= 0."""
    return musin(mu, PI) * np.cos(beta.beta) + mucos(mu, PI) * np.sin(beta.beta)


def _low_mode_lambdas(beta: BoundaryAngle, delta2: float) -> tuple[float, float]:
    """First two q = 0 eigenvalue square roots by scanning + Brent refinement.

    Returns signed square roots s with mu = s*|s| so that a negative ground
    eigenvalue is representable.
    """
    upper = 2.0 + delta2 - 0.45  # stay clear of the n = 2 asymptotic window
    s_lo = -1.0
    for _ in range(60):
        ss = np.linspace(s_lo, upper, 400)
        mus = ss * np.abs(ss)
        vals = characteristic_q0(beta, mus)
        sign_change = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)
        if sign_change.size >= 2:
            roots = []
            for idx in sign_change[:2]:
                f = lambda s: float(characteristic_q0(beta, s * abs(s)))
                roots.append(brentq(f, ss[idx], ss[idx + 1], xtol=1e-15, rtol=1e-15))
            return float(roots[0]), float(roots[1])
        s_lo = s_lo * 2.0 - 1.0
        if s_lo < -1e4:
            break
    raise NumericsError("failed to bracket the two lowest q = 0 eigenvalues")


def unperturbed_norming(mu) -> np.ndarray:
    """Closed form of the q = 0 norming constant: integral of (sin(lx)/l)^2.

    a(mu) = (pi/2 - sin(2*pi*l)/(4*l)) / mu, continued through mu <= 0 where
    it equals pi^3/3 at mu = 0 and the sinh analogue below.
    """
    mu = np.asarray(mu, dtype=float)
    out = np.empty(mu.shape, dtype=float)
    small = np.abs(mu) < 1e-4
    big = ~small
    if big.any():
        out[big] = (PI / 2.0 - musin(mu[big], 2.0 * PI) / 4.0) / mu[big]
    if small.any():
        t = 2.0 * PI
        m = mu[small]
        # series of (pi/2 - musin(mu, 2pi)/4)/mu around mu = 0
        out[small] = t**3 / 24.0 - m * t**5 / 480.0 + m * m * t**7 / 20160.0
    return out if out.ndim else float(out)


def unperturbed_spectrum(beta: BoundaryAngle | float, N: int, delta: DeltaSequence | None = None) -> SpectralData:
    """Spectral data of the q = 0 problem: lambda_n = n + delta_n for n >= 2,
    the two low modes from root finding, and closed-form norming constants."""
    beta = as_angle(beta)
    if N < 3:
        raise ConfigError("N must be at least 3")
    if delta is None or delta.n_max < N - 1:
        delta = delta_sequence(beta, max(N, 3))
    lam0, lam1 = delta.low_modes
    mu = np.empty(N)
    mu[0] = lam0 * abs(lam0)
    if N > 1:
        mu[1] = lam1 * abs(lam1)
    if N > 2:
        ns = np.arange(2, N)
        om = delta.omega(ns)
        mu[2:] = om * om
    return SpectralData(beta=beta.beta, mu=mu, norming=unperturbed_norming(mu), c_fit=0.0)


# ---------------------------------------------------------------------------
# Closed forms for the half-integer-frequency series
# ---------------------------------------------------------------------------


def sin_halfint_closed(x):
    """sum_{n>=2} sin((n+1/2)x)/(n+1/2) on (0, 2*pi)."""
    x = np.asarray(x, dtype=float)
    return PI / 2.0 - 2.0 * np.sin(x / 2.0) - (2.0 / 3.0) * np.sin(1.5 * x)


def cos_halfint_closed(x):
    """sum_{n>=2} cos((n+1/2)x)/(n+1/2)^2 on [0, 2*pi].

    The full n >= 0 sum is (pi^2 - pi*x)/2 (odd-harmonic cosine series); the
    two leading terms are removed explicitly.
    """
    x = np.asarray(x, dtype=float)
    full = (PI * PI - PI * x) / 2.0
    return full - 4.0 * np.cos(x / 2.0) - (4.0 / 9.0) * np.cos(1.5 * x)


def t_beta_closed_form(beta: BoundaryAngle | float, x: float, *, delta: DeltaSequence | None = None,
                       chunk: int = 20000, max_terms: int = 2_000_000) -> float:
    """Accelerated value of sum_{n>=2} sin((n+delta_n)x)/(n+delta_n).

    Splits off the half-integer part and its first cot(beta) correction in
    closed form; the remaining terms decay like 1/n^3 and are summed until
    three consecutive terms drop below 1e-14*(|sum|+1).
    """
    beta = as_angle(beta)
    if not (0.0 < x < 2.0 * PI):
        raise DomainError(f"x={x} outside (0, 2*pi)")
    total = float(sin_halfint_closed(x)) + (x * beta.cot / PI) * float(cos_halfint_closed(x))
    # residual series with O(1/n^3) terms
    n0 = DELTA_MIN_N
    tail = 0.0
    below = 0
    while n0 < max_terms:
        ns = np.arange(n0, min(n0 + chunk, max_terms), dtype=float)
        dl = _solve_delta_array(beta, ns)
        om = ns + dl
        half = ns + 0.5
        terms = (np.sin(om * x) / om
                 - np.sin(half * x) / half
                 - (x * beta.cot / PI) * np.cos(half * x) / (half * half))
        tail += float(terms.sum())
        thresh = 1e-14 * (abs(total + tail) + 1.0)
        small = np.abs(terms) < thresh
        # count trailing consecutive small terms across chunk boundaries
        below = _trailing_true(small, carry=below)
        if below >= 3:
            break
        n0 += chunk
    return total + tail


def _trailing_true(mask: np.ndarray, carry: int) -> int:
    if mask.all():
        return carry + mask.size
    last_false = int(np.flatnonzero(~mask)[-1])
    return mask.size - 1 - last_false


# ---------------------------------------------------------------------------
# Tail models fitted from finite data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AsymptoticModel:
    """Fitted tail description of a spectral sequence pair.

    c is the drift constant of the eigenvalue tail; l_seq and s_seq are the
    per-index remainders for n >= 2 (l_n = lambda_n - omega_n - c/(2 omega_n),
    s_n extracted from the norming-constant form).  q_mean, when known,
    should equal c.
    """

    c: float
    l_seq: np.ndarray
    s_seq: np.ndarray
    q_mean: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "l_seq", _frozen(self.l_seq))
        object.__setattr__(self, "s_seq", _frozen(self.s_seq))


def signed_sqrt(mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    return np.sign(mu) * np.sqrt(np.abs(mu))


def fit_c(data: SpectralData, delta: DeltaSequence) -> tuple[float, np.ndarray]:
    """Estimate the eigenvalue drift constant and per-index remainders.

    g_n := 2*omega_n*(lambda_n - omega_n) tends to c; a least-squares fit of
    g against [1, 1/omega] over the last third of the sequence extrapolates
    the limit.  Returns (c, l_seq) with l_seq aligned to n >= 2.
    """
    if data.count < 12:
        raise ConfigError("fit_c needs at least 12 data points")
    ns = np.arange(2, data.count)
    om = delta.omega(ns)
    lam = signed_sqrt(data.mu[2:])
    g = 2.0 * om * (lam - om)
    c = _tail_intercept(om, g, frac=1.0 / 3.0)
    # a non-Cauchy tail (fit_c_spread > 10%) is reported by validate(), not raised
    l_seq = lam - om - c / (2.0 * om)
    return float(c), l_seq


def fit_c_spread(data: SpectralData, delta: DeltaSequence) -> float:
    """Gap between the last-third and last-sixth tail fits (Cauchy check)."""
    ns = np.arange(2, data.count)
    om = delta.omega(ns)
    lam = signed_sqrt(data.mu[2:])
    g = 2.0 * om * (lam - om)
    return abs(_tail_intercept(om, g, 1.0 / 3.0) - _tail_intercept(om, g, 1.0 / 6.0))


def _tail_intercept(om: np.ndarray, g: np.ndarray, frac: float) -> float:
    m = max(4, int(np.ceil(om.size * frac)))
    omt, gt = om[-m:], g[-m:]
    A = np.column_stack([np.ones(omt.size), 1.0 / omt])
    coef, *_ = np.linalg.lstsq(A, gt, rcond=None)
    return float(coef[0])


def extract_s(data: SpectralData, delta: DeltaSequence) -> np.ndarray:
    """Invert the norming-constant tail form for s_n (n >= 2):
    a_n = pi/(2 omega^2) * (1 + 2 s_n/(pi omega))."""
    ns = np.arange(2, data.count)
    om = delta.omega(ns)
    return (data.norming[2:] * 2.0 * om * om / PI - 1.0) * PI * om / 2.0


def fit_s_coefficient(data: SpectralData, delta: DeltaSequence) -> float:
    """Tail coefficient sigma of the model s_n ~ sigma/omega, least squares
    over the last third.  Used to extend finite data when building kernels."""
    s = extract_s(data, delta)
    if s.size < 4:
        return 0.0
    om = delta.omega(np.arange(2, data.count))
    m = max(4, om.size // 3)
    w = 1.0 / om[-m:]
    denom = float(np.dot(w, w))
    if denom == 0.0:
        return 0.0
    return float(np.dot(s[-m:], w) / denom)


def asymptotic_lambda(model: AsymptoticModel, delta: DeltaSequence, n: int) -> float:
    """Tail form of lambda_n: omega + c/(2 omega) + l_n."""
    if n < DELTA_MIN_N:
        raise ConfigError("asymptotic_lambda needs n >= 2")
    om = float(delta.omega(n))
    l_n = float(model.l_seq[n - 2]) if n - 2 < model.l_seq.size else 0.0
    return om + model.c / (2.0 * om) + l_n


def asymptotic_norming(model: AsymptoticModel, delta: DeltaSequence, n: int) -> float:
    """Tail form of a_n: pi/(2 omega^2) * (1 + 2 s_n/(pi omega))."""
    if n < DELTA_MIN_N:
        raise ConfigError("asymptotic_norming needs n >= 2")
    om = float(delta.omega(n))
    s_n = float(model.s_seq[n - 2]) if n - 2 < model.s_seq.size else 0.0
    return PI / (2.0 * om * om) * (1.0 + 2.0 * s_n / (PI * om))


def remainder_series(model: AsymptoticModel, delta: DeltaSequence, t: float, which: str) -> tuple[float, float]:
    """Truncated remainder series with a tail-bound estimate.

    which='l': sum l_n sin(omega_n t); which='s': sum (s_n/omega_n) cos(omega_n t).
    The bound extrapolates sum |coef| past the truncation from the last decade
    of coefficients assuming the observed power-law decay.
    """
    if not (0.0 < t < 2.0 * PI):
        raise DomainError(f"t={t} outside (0, 2*pi)")
    if which not in ("l", "s"):
        raise ConfigError("which must be 'l' or 's'")
    seq = model.l_seq if which == "l" else model.s_seq
    N = seq.size
    ns = np.arange(2, N + 2)
    om = delta.omega(ns)
    if which == "l":
        value = float(np.sum(seq * np.sin(om * t)))
        coef = np.abs(seq)
    else:
        coef = np.abs(seq / om)
        value = float(np.sum((seq / om) * np.cos(om * t)))
    tail = _tail_bound(om, coef)
    return value, tail


def _tail_bound(om: np.ndarray, coef: np.ndarray) -> float:
    m = max(4, om.size // 10)
    c_tail, o_tail = coef[-m:], om[-m:]
    pos = c_tail > 0
    if pos.sum() < 2:
        return 0.0
    # fit |coef| ~ A / omega^p on the last decade, then bound the tail sum
    logc, logo = np.log(c_tail[pos]), np.log(o_tail[pos])
    p, logA = np.polyfit(logo, logc, 1)
    p = -p
    A = float(np.exp(logA))
    if p <= 1.0 + 1e-9:
        return float(c_tail.mean() * om[-1])  # crude: slow decay, report scale
    N = float(om[-1])
    return A / ((p - 1.0) * N ** (p - 1.0))


# ---------------------------------------------------------------------------
# Refined tail checks for smooth potentials
# ---------------------------------------------------------------------------


def refined_asymptotics_check(q: Potential, q_prime: GridFunction, beta: BoundaryAngle | float,
                              data: SpectralData, n_lo: int = 10, n_hi: int | None = None) -> dict:
    """Report residuals of the sharpened eigenvalue/norming tails that hold
    for absolutely continuous potentials.

    lambda residual: lambda_n - (omega + [q]/(2 omega) + l_n) with
    l_n = (1/(4 pi omega^2)) * integral q'(x) sin(2 omega x) dx; the residual
    times n^3 should stay bounded.  Norming residual: relative defect of
    a_n * 2 omega^2/pi against 1 + [q]_b/(2 omega^2) + 2 s_n/(pi omega^2) with
    s_n = (1/4) * integral (pi-t) q'(t) cos(2 omega t) dt and
    [q]_b = (5/pi) * integral q + 2 (q(0) + cot b); again n^3-bounded.
    """
    beta = as_angle(beta)
    n_hi = n_hi if n_hi is not None else data.count - 1
    if n_hi >= data.count:
        raise ConfigError("n_hi beyond available data")
    delta = delta_sequence(beta, n_hi + 1)
    quad = make_grid(256, "gauss-legendre")
    qv = interpolant(q)(quad.nodes)
    qpv = interpolant(q_prime)(quad.nodes)
    q_int = float(np.dot(quad.weights, qv))
    q_mean = q_int / PI
    q0 = float(interpolant(q)(0.0))
    q_beta = 5.0 / PI * q_int + 2.0 * (q0 + beta.cot)

    ns = np.arange(n_lo, n_hi + 1)
    om = delta.omega(ns)
    lam = signed_sqrt(data.mu[ns])
    a = data.norming[ns]

    phase = 2.0 * np.outer(om, quad.nodes)
    l_n = (quad.weights * qpv * np.sin(phase)).sum(axis=1) / (4.0 * PI * om * om)
    s_n = 0.25 * (quad.weights * (PI - quad.nodes) * qpv * np.cos(phase)).sum(axis=1)

    lam_resid = lam - (om + q_mean / (2.0 * om) + l_n)
    a_rel = a * 2.0 * om * om / PI - 1.0 - q_beta / (2.0 * om * om) - 2.0 * s_n / (PI * om * om)

    n3 = ns.astype(float) ** 3
    return {
        "n": ns,
        "lambda_residual": lam_resid,
        "norming_residual": a_rel,
        "lambda_scaled": np.abs(lam_resid) * n3,
        "norming_scaled": np.abs(a_rel) * n3,
        "lambda_bounded": _bounded(np.abs(lam_resid) * n3),
        "norming_bounded": _bounded(np.abs(a_rel) * n3),
        "q_mean": q_mean,
        "q_beta": q_beta,
    }


def _bounded(scaled: np.ndarray, factor: float = 10.0) -> bool:
    med = float(np.median(scaled))
    return bool(scaled.max() <= factor * med + 1e-9)
