"""Pricing models: LIBOR market model caplet under a one-factor Euler
scheme with Black-formula validation, and a lognormal-rate
mortgage-backed-security present-value model with an arctan prepayment
response.

Both models consume uniforms through the same inverse-normal transform
(`inv_normal`), so pseudorandom and quasi-random generators are compared
like for like. Per-path evaluation is pure; the `*Model.payoffs` block
kernels are what the benchmark harness calls.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from numba import njit
from scipy.interpolate import CubicSpline

_TINY = 2.0**-53

# ---------------------------------------------------------------------------
# Inverse normal CDF
# ---------------------------------------------------------------------------
# Two rational approximations (central in r = (u - 1/2)**2, tail in
# v = sqrt(-2 ln u)), fit offline against high-precision quantiles by
# iteratively reweighted least squares in a Chebyshev basis and frozen
# here. Verified absolute error over the clamped domain: < 3e-10.

_PLOW = 0.0465
_RMAX = 0.20566225000000002  # (0.5 - _PLOW)**2
_VLO = 2.4772173769731336  # sqrt(-2 ln _PLOW)
_VSCALE = 0.16408352781008756  # 1 / (sqrt(-2 ln 2**-53) - _VLO)


@njit(cache=True, nogil=True, inline="always")
def _inv_normal(p):
    flip = p > 0.5
    pl = 1.0 - p if flip else p  # exact when p > 0.5
    if pl < _TINY:
        pl = _TINY
    if pl >= _PLOW:
        q = pl - 0.5
        u = q * q / _RMAX
        num = ((((((-0.2919273214264852 * u + 9.193512285907598) * u + -62.454377324061355) * u
                  + 170.0098658859532) * u + -211.46704297849197) * u + 113.93203453144044) * u
               + -21.62514930947088) * u + 3.8841077977297096
        den = ((((((-0.4290780287479735 * u + 6.969736103714354) * u + -36.143835067804716) * u
                  + 83.84882260510376) * u + -93.74669783914054) * u + 47.23127323999088) * u
               + -8.96090814172393) * u + 1.5495348220676615
        x = q * num / den
    else:
        w = (math.sqrt(-2.0 * math.log(pl)) - _VLO) * _VSCALE
        num = ((((((49.41588603624166 * w + 34.09554370467819) * w + -120.62391569766385) * w
                  + -36.11819081101896) * w + 77.35661807857605) * w + 12.678668433221901) * w
               + -15.636790505919562) * w + -3.141967925161121
        den = ((((((-0.0005317355830972598 * w + -8.101041244986659) * w + -2.3666362350675305) * w
                  + 19.91298298968798) * w + -1.4094956335739925) * w + -10.941521790794202) * w
               + 1.2762506234112334) * w + 1.8704632131064214
        x = num / den
    return -x if flip else x


@njit(cache=True, nogil=True)
def _inv_normal_fill(p, out):
    for i in range(p.size):
        out[i] = _inv_normal(p[i])


def inv_normal(u):
    """Standard normal quantile, absolute error < 1.2e-9.

    Inputs are clamped into [2**-53, 1 - 2**-53] first, so the result is
    always finite. Accepts scalars or arrays.
    """
    arr = np.asarray(u, dtype=np.float64)
    out = np.empty(arr.shape)
    _inv_normal_fill(arr.reshape(-1), out.reshape(-1))
    return float(out) if np.ndim(u) == 0 else out


def norm_cdf(x: float) -> float:
    """Standard normal CDF via the library error function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


# ---------------------------------------------------------------------------
# Yield curve
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class YieldCurve:
    """Treasury-style par yields: tenors in years, rates in percent."""

    tenors: np.ndarray
    rates: np.ndarray
    _spline: CubicSpline = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        t = np.asarray(self.tenors, dtype=np.float64)
        r = np.asarray(self.rates, dtype=np.float64)
        if t.size != r.size or t.size < 2:
            raise ValueError("need matching tenor/rate arrays of length >= 2")
        if t[0] <= 0 or np.any(np.diff(t) <= 0):
            raise ValueError("tenors must be positive and strictly increasing")
        object.__setattr__(self, "tenors", t)
        object.__setattr__(self, "rates", r)
        object.__setattr__(self, "_spline", CubicSpline(t, r, bc_type="natural"))


def load_yield_curve(path) -> YieldCurve:
    """Read a `tenor_years,rate_percent` CSV."""
    tenors, rates = [], []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != ["tenor_years", "rate_percent"]:
            raise ValueError(f"{path}: expected header tenor_years,rate_percent")
        for row in reader:
            tenors.append(float(row["tenor_years"]))
            rates.append(float(row["rate_percent"]))
    return YieldCurve(np.array(tenors), np.array(rates))


def default_curve() -> YieldCurve:
    """The packaged 2012-02-24 Treasury curve."""
    with resources.as_file(
        resources.files("rqmcbench.data").joinpath("treasury_2012-02-24.csv")
    ) as p:
        return load_yield_curve(p)


def spline_rate(curve: YieldCurve, t: float) -> float:
    """Natural-cubic-spline yield (percent) at time t; no extrapolation."""
    if not curve.tenors[0] <= t <= curve.tenors[-1]:
        raise ValueError(
            f"t={t} outside curve range [{curve.tenors[0]}, {curve.tenors[-1]}]"
        )
    return float(curve._spline(t))


def bond_prices(curve: YieldCurve, accrual: float, horizon: float) -> np.ndarray:
    """Zero-coupon prices B(0, n*accrual) for n = 1..horizon/accrual.

    Continuously compounded from spline yields read as percent:
    B(0, T) = exp(-y(T)/100 * T).
    """
    count = round(horizon / accrual)
    if abs(count * accrual - horizon) > 1e-9:
        raise ValueError("horizon must be an integer number of accrual periods")
    times = accrual * np.arange(1, count + 1)
    ys = np.array([spline_rate(curve, t) for t in times]) / 100.0
    return np.exp(-ys * times)


def init_libor(bonds: np.ndarray, accrual: float) -> np.ndarray:
    """Initial forward rates L_n(0) = (B_n - B_{n+1}) / (accrual * B_{n+1})."""
    b = np.asarray(bonds, dtype=np.float64)
    if np.any(b <= 0):
        raise ValueError("bond prices must be positive")
    return (b[:-1] - b[1:]) / (accrual * b[1:])


# ---------------------------------------------------------------------------
# LIBOR market model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LiborConfig:
    """Caplet setup: fixing time, accrual, strike, flat lognormal vol."""

    valuation_time: float = 0.0
    maturity: float = 5.0
    accrual: float = 0.5
    strike: float = 0.01
    sigma: float = 0.04

    def __post_init__(self):
        if not 0 <= self.valuation_time < self.maturity:
            raise ValueError("need 0 <= valuation time < maturity")
        if self.accrual <= 0 or self.strike <= 0 or self.sigma < 0:
            raise ValueError("accrual and strike must be positive, sigma >= 0")
        if abs(self.maturity / self.accrual - round(self.maturity / self.accrual)) > 1e-9:
            raise ValueError("maturity must be an integer number of accrual periods")

    @property
    def steps(self) -> int:
        """Euler steps = number of accrual periods to the fixing date."""
        return round(self.maturity / self.accrual)


def libor_euler_path(l0: np.ndarray, config: LiborConfig, z: np.ndarray):
    """Evolve the forward curve one maturity per step (grid t_i = T_i).

    l0 holds L_1(0)..L_n*(0); z one standard normal per step (single
    Brownian factor, constant volatility). At step i only the still-alive
    rates n = i+1..n* move; each drift is the running sum
    sum_j accrual*L_j*sigma^2 / (1 + accrual*L_j) over j = i+1..n,
    evaluated at the pre-step values. Returns (terminal rate L(T, T),
    fixings array L_n(T_n) for n = 1..n*). Negative rates are possible
    under the Euler step and are propagated untouched.
    """
    steps = config.steps
    if z.shape != (steps,):
        raise ValueError(f"need {steps} normals, got shape {z.shape}")
    if l0.shape != (steps,):
        raise ValueError(f"need {steps} initial rates, got shape {l0.shape}")
    delta = config.accrual
    sigma = config.sigma
    sig2 = sigma * sigma
    sqdt = math.sqrt(delta)
    rates = l0.astype(np.float64).copy()
    fixings = np.empty(steps)
    for i in range(steps):
        shock = sigma * sqdt * z[i]
        drift = 0.0
        for n in range(i, steps):
            dl = delta * rates[n]
            denom = 1.0 + dl
            if abs(denom) < 1e-12:
                raise FloatingPointError("drift denominator 1 + delta*L vanished")
            drift += sig2 * dl / denom
            rates[n] = rates[n] * (1.0 + drift * delta + shock)
        fixings[i] = rates[i]
    return fixings[-1], fixings


def caplet_discounted_payoff(
    terminal_rate: float, fixings: np.ndarray, config: LiborConfig, front_rate: float
) -> float:
    """Time-0 caplet payoff along one simulated path.

    Time-T value accrual*(L(T,T)-K)+ / (1 + accrual*L(T,T)), deflated by
    the rolling spot-measure account prod_j (1 + accrual*L_j(T_j)) over
    j = 0..n*-1; front_rate is the deterministic first-period rate L_0(0).
    """
    delta = config.accrual
    value = delta * max(terminal_rate - config.strike, 0.0) / (1.0 + delta * terminal_rate)
    value /= 1.0 + delta * front_rate
    for f in fixings[:-1]:
        value /= 1.0 + delta * f
    return value


def black_caplet(
    config: LiborConfig, forward: float, bond: float, sigma_prefactor: bool = False
) -> float:
    """Black caplet price accrual*B(0,T+d)*(L Phi(d1) - K Phi(d2)).

    d1,2 = [ln(L/K) +- sigma^2 (T-t)/2] / (sigma sqrt(T-t)). The leading
    factor is the accrual, as dimensional consistency with the payoff
    accrual*(L-K)+ requires; `sigma_prefactor=True` swaps it for sigma,
    a variant that circulates in some statements of the formula.
    """
    if forward <= 0 or config.strike <= 0:
        raise ValueError("forward and strike must be positive")
    tau = config.maturity - config.valuation_time
    lead = config.sigma if sigma_prefactor else config.accrual
    if config.sigma == 0 or tau == 0:
        return lead * bond * max(forward - config.strike, 0.0)
    vol = config.sigma * math.sqrt(tau)
    d1 = (math.log(forward / config.strike) + 0.5 * vol * vol) / vol
    d2 = d1 - vol
    return lead * bond * (forward * norm_cdf(d1) - config.strike * norm_cdf(d2))


@njit(cache=True, nogil=True)
def _libor_payoffs(u, l0, delta, sigma, strike, front_factor, out):
    """Discounted caplet payoffs for a block of paths (uniform input)."""
    npaths, steps = u.shape
    sig2 = sigma * sigma
    sqdt = math.sqrt(delta)
    rates = np.empty(steps)
    for p in range(npaths):
        for n in range(steps):
            rates[n] = l0[n]
        disc = front_factor
        for i in range(steps):
            shock = sigma * sqdt * _inv_normal(u[p, i])
            drift = 0.0
            for n in range(i, steps):
                dl = delta * rates[n]
                drift += sig2 * dl / (1.0 + dl)
                rates[n] = rates[n] * (1.0 + drift * delta + shock)
            if i < steps - 1:
                disc /= 1.0 + delta * rates[i]
        lt = rates[steps - 1]
        payoff = delta * max(lt - strike, 0.0) / (1.0 + delta * lt)
        out[p] = payoff * disc


class LiborModel:
    """Caplet pricing model bound to a yield curve; harness entry point."""

    name = "libor"

    def __init__(self, config: LiborConfig | None = None, curve: YieldCurve | None = None):
        self.config = config or LiborConfig()
        self.curve = curve or default_curve()
        c = self.config
        bonds = bond_prices(self.curve, c.accrual, c.maturity + c.accrual)
        self.bonds = bonds  # B(0, T_1)..B(0, T_{n*+1})
        self.initial_rates = init_libor(bonds, c.accrual)  # L_1(0)..L_n*(0)
        self.front_rate = (1.0 - bonds[0]) / (c.accrual * bonds[0])  # L_0(0), B_0 = 1
        self.dim = c.steps

    def payoffs(self, u: np.ndarray) -> np.ndarray:
        out = np.empty(u.shape[0])
        _libor_payoffs(
            u,
            self.initial_rates,
            self.config.accrual,
            self.config.sigma,
            self.config.strike,
            1.0 / (1.0 + self.config.accrual * self.front_rate),
            out,
        )
        return out

    def black_price(self, sigma_prefactor: bool = False) -> float:
        """Closed-form reference for the simulated caplet."""
        return black_caplet(
            self.config, float(self.initial_rates[-1]), float(self.bonds[-1]),
            sigma_prefactor,
        )


# ---------------------------------------------------------------------------
# Mortgage-backed security model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MbsConfig:
    """Prepayment-model constants; k0 = exp(-variance/2) normalizes the
    lognormal rate factor so E(i_k) = i_0 for every month k."""

    initial_rate: float = 0.007
    k1: float = 0.01
    k2: float = -0.005
    k3: float = 10.0
    k4: float = 0.5
    variance: float = 0.0004
    months: int = 360
    payment: float = 1.0

    def __post_init__(self):
        if self.initial_rate <= 0:
            raise ValueError("initial_rate must be positive")
        if self.variance < 0:
            raise ValueError("variance must be >= 0")
        if self.months < 1:
            raise ValueError("months must be >= 1")

    @property
    def k0(self) -> float:
        return math.exp(-self.variance / 2.0)

    @property
    def sigma_xi(self) -> float:
        return math.sqrt(self.variance)

    def annuity_ratios(self) -> np.ndarray:
        """c_k = sum_{j=0}^{months-k} (1 + i_0)**-j, k = 1..months."""
        j = np.arange(self.months, dtype=np.float64)
        return np.cumsum((1.0 + self.initial_rate) ** -j)[::-1].copy()


def mbs_pv(xi: np.ndarray, config: MbsConfig) -> float:
    """Present value sum u_k m_k of one path of monthly rate shocks.

    xi are N(0, sigma) draws. Single incremental pass:
    i_k = k0 e^{xi_k} i_{k-1}; w_k = k1 + k2 arctan(k3 i_k + k4);
    u_k = prod_{j<k} (1+i_j)^-1; r_k = prod_{0<j<k} (1-w_j);
    m_k = payment * r_k ((1-w_k) + w_k c_k).
    """
    xi = np.asarray(xi, dtype=np.float64)
    if xi.shape != (config.months,):
        raise ValueError(f"need {config.months} shocks, got shape {xi.shape}")
    ck = config.annuity_ratios()
    k0 = config.k0
    disc = 1.0
    remaining = 1.0
    rate = config.initial_rate
    prev_w = 0.0
    pv = 0.0
    for k in range(1, config.months + 1):
        disc /= 1.0 + rate  # u_k, built from i_0..i_{k-1}
        if k > 1:
            remaining *= 1.0 - prev_w
        rate = k0 * math.exp(xi[k - 1]) * rate
        w = config.k1 + config.k2 * math.atan(config.k3 * rate + config.k4)
        cashflow = config.payment * remaining * ((1.0 - w) + w * ck[k - 1])
        pv += disc * cashflow
        prev_w = w
    return pv


def mbs_trace(xi: np.ndarray, config: MbsConfig) -> dict[str, np.ndarray]:
    """Per-month diagnostics (u_k, m_k, r_k, w_k, i_k, c_k) for one path."""
    xi = np.asarray(xi, dtype=np.float64)
    months = config.months
    ck = config.annuity_ratios()
    k0 = config.k0
    out = {key: np.empty(months) for key in ("u", "m", "r", "w", "i", "c")}
    disc = 1.0
    remaining = 1.0
    rate = config.initial_rate
    prev_w = 0.0
    for k in range(1, months + 1):
        disc /= 1.0 + rate
        if k > 1:
            remaining *= 1.0 - prev_w
        rate = k0 * math.exp(xi[k - 1]) * rate
        w = config.k1 + config.k2 * math.atan(config.k3 * rate + config.k4)
        out["u"][k - 1] = disc
        out["r"][k - 1] = remaining
        out["i"][k - 1] = rate
        out["w"][k - 1] = w
        out["c"][k - 1] = ck[k - 1]
        out["m"][k - 1] = config.payment * remaining * ((1.0 - w) + w * ck[k - 1])
        prev_w = w
    return out


@njit(cache=True, nogil=True)
def _mbs_payoffs(u, i0, k0, k1, k2, k3, k4, sigma_xi, payment, ck, out):
    """Present values for a block of paths (uniform input)."""
    npaths, months = u.shape
    for p in range(npaths):
        disc = 1.0
        remaining = 1.0
        rate = i0
        prev_w = 0.0
        pv = 0.0
        for k in range(1, months + 1):
            disc /= 1.0 + rate
            if k > 1:
                remaining *= 1.0 - prev_w
            xi = sigma_xi * _inv_normal(u[p, k - 1])
            rate = k0 * math.exp(xi) * rate
            w = k1 + k2 * math.atan(k3 * rate + k4)
            pv += disc * payment * remaining * ((1.0 - w) + w * ck[k - 1])
            prev_w = w
        out[p] = pv


class MbsModel:
    """MBS present-value model; harness entry point."""

    name = "mbs"

    def __init__(self, config: MbsConfig | None = None):
        self.config = config or MbsConfig()
        self.dim = self.config.months
        self._ck = self.config.annuity_ratios()

    def payoffs(self, u: np.ndarray) -> np.ndarray:
        c = self.config
        out = np.empty(u.shape[0])
        _mbs_payoffs(
            u, c.initial_rate, c.k0, c.k1, c.k2, c.k3, c.k4,
            c.sigma_xi, c.payment, self._ck, out,
        )
        return out


# ---------------------------------------------------------------------------
# Built-in test models (known integrals, used by harness tests)
# ---------------------------------------------------------------------------


class ConstantModel:
    """f(x) = 1: every estimate is exactly 1, std is exactly 0."""

    name = "const1"

    def __init__(self, dim: int = 2):
        self.dim = dim

    def payoffs(self, u: np.ndarray) -> np.ndarray:
        return np.ones(u.shape[0])


class FirstCoordinateModel:
    """f(x) = x_1: integral 1/2, variance 1/12."""

    name = "x1"

    def __init__(self, dim: int = 2):
        self.dim = dim

    def payoffs(self, u: np.ndarray) -> np.ndarray:
        return u[:, 0].copy()
