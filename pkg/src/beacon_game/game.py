"""Utilities, the Markov/Jensen throughput bound and single-sensor equilibria.

Throughout, an equilibrium is computed from two effective numbers: the gain
``g`` multiplying the purchased power inside the logarithm, and the weight
``alpha_eff`` in front of the natural log. With those, the base station's
utility is ``alpha_eff * ln(1 + g P) - tau * rho * P`` for any number of
sensors once the beamformer has been fixed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelState, Scenario, sample_errors
from .errors import NumericError, ValidationError
from .hermitian import as_unit_vector, max_eigenpair, quad_forms

LN2 = math.log(2.0)


# ---------------------------------------------------------------------------
# Throughput, bound and utilities
# ---------------------------------------------------------------------------

def _snr_scale(scenario: Scenario) -> float:
    t = scenario.tau
    return t * scenario.N / (scenario.sigma2 * (1.0 - t))


def throughput(P, w, channels: ChannelState, i: int, scenario: Scenario, error_draw=None) -> float:
    """Throughput of sensor ``i`` for one channel realisation h_i = h_hat_i + e_i."""
    if P < 0:
        raise ValidationError(f"power must be >= 0, got {P}")
    w = as_unit_vector(w)
    h = channels.h_hat[i] if error_draw is None else channels.h_hat[i] + np.asarray(error_draw)
    gain = abs(np.vdot(h, w)) ** 2
    x = _snr_scale(scenario) * abs(channels.h_s[i]) ** 2 * gain * P
    t, N = scenario.tau, scenario.N
    return float((1.0 - t) / (2.0 * N) * math.log2(1.0 + x))


def gamma_from_gain(nu, P, scenario: Scenario):
    """Bound value for an effective gain nu = |h_s|^2 w^H Q w (array-friendly)."""
    t = scenario.tau
    x = _snr_scale(scenario) * np.asarray(nu) * P
    return (1.0 - t) / (2.0 * scenario.beta * scenario.N) * np.log2(1.0 + x)


def gamma_bound(P, w, channels: ChannelState, i: int, scenario: Scenario) -> float:
    """Markov/Jensen upper bound on Pr(D_i >= beta). Not capped at 1."""
    if P < 0:
        raise ValidationError(f"power must be >= 0, got {P}")
    w = as_unit_vector(w)
    mu = float(np.vdot(w, channels.q_mat[i] @ w).real)
    return float(gamma_from_gain(abs(channels.h_s[i]) ** 2 * mu, P, scenario))


def gamma_all(P, w, channels: ChannelState, scenario: Scenario) -> np.ndarray:
    w = as_unit_vector(w)
    return gamma_from_gain(quad_forms(channels.weighted(), w), P, scenario)


def utility_bs(rho, P, w, channels: ChannelState, scenario: Scenario) -> float:
    if P < 0 or rho < 0:
        raise ValidationError("price and power must be non-negative")
    return float(scenario.alpha * np.min(gamma_all(P, w, channels, scenario)) - scenario.tau * rho * P)


def utility_pb(rho, P, c) -> float:
    if P < 0:
        raise ValidationError(f"power must be >= 0, got {P}")
    return (rho - c) * P


# ---------------------------------------------------------------------------
# Closed-form equilibrium
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EffectiveGameParams:
    g: float
    alpha_eff: float
    tau: float
    c: float

    def __post_init__(self):
        if not self.g > 0:
            raise ValidationError(f"effective gain must be > 0, got {self.g}")
        if not self.alpha_eff > 0:
            raise ValidationError(f"alpha_eff must be > 0, got {self.alpha_eff}")
        if not 0 < self.tau < 1:
            raise ValidationError(f"tau must lie in (0, 1), got {self.tau}")
        if not self.c > 0:
            raise ValidationError(f"cost must be > 0, got {self.c}")

    @classmethod
    def from_nu(cls, nu: float, scenario: Scenario) -> "EffectiveGameParams":
        """Map nu = min_i |h_s_i|^2 w^H Q_i w to effective parameters."""
        t, N = scenario.tau, scenario.N
        g = t * N * nu / ((1.0 - t) * scenario.sigma2)
        alpha_eff = scenario.alpha * (1.0 - t) / (2.0 * N * scenario.beta * LN2)
        return cls(g, alpha_eff, t, scenario.c)

    def utility_bs(self, rho, P):
        return self.alpha_eff * np.log1p(self.g * P) - self.tau * rho * P


@dataclass
class Equilibrium:
    rho_star: float
    p_star: float
    w_star: np.ndarray | None
    nu_or_mu: float
    u_bs: float
    u_pb: float

    def antenna_powers(self):
        if self.w_star is None:
            return None
        return np.abs(self.w_star) ** 2 * self.p_star


def best_response_power(rho, params: EffectiveGameParams) -> float:
    """Follower's optimal purchase at price rho, clamped at zero."""
    if not rho > 0:
        raise ValidationError(f"price must be > 0, got {rho}")
    g = params.g
    return max(0.0, (params.alpha_eff * g / (params.tau * rho) - 1.0) / g)


def equilibrium_closed_form(params: EffectiveGameParams) -> Equilibrium:
    """Leader price sqrt(alpha_eff c g / tau) (at least c) and the follower's reply."""
    g, a, t, c = params.g, params.alpha_eff, params.tau, params.c
    rho = math.sqrt(a * c * g / t)
    if rho >= c:
        p = max(0.0, (math.sqrt(a * g / (t * c)) - 1.0) / g)
    else:
        rho = c
        p = best_response_power(rho, params)
    return Equilibrium(
        rho_star=rho,
        p_star=p,
        w_star=None,
        nu_or_mu=g,
        u_bs=float(params.utility_bs(rho, p)),
        u_pb=utility_pb(rho, p, c),
    )


def single_node_solve(channels: ChannelState, scenario: Scenario) -> Equilibrium:
    """Beamform on the top eigenvector of Q, then apply the closed form."""
    if channels.N != 1 or scenario.N != 1:
        raise ValidationError(f"single-node solver needs N = 1, got N = {channels.N}")
    mu, w = max_eigenpair(channels.q_mat[0])
    nu = abs(channels.h_s[0]) ** 2 * mu
    if not nu > 0:
        raise ValidationError("channel has zero gain; no power trade possible")
    eq = equilibrium_closed_form(EffectiveGameParams.from_nu(nu, scenario))
    eq.w_star = w
    eq.nu_or_mu = mu
    return eq


# ---------------------------------------------------------------------------
# Single-antenna case via the exponential approximation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChiSquareParams:
    theta2: float
    eta: float


def outage_threshold(scenario: Scenario, h_s2: float) -> float:
    """T such that D >= beta  <=>  |h|^2 >= T / P  (single sensor)."""
    t = scenario.tau
    return (4.0 ** (scenario.beta / (1.0 - t)) - 1.0) * (1.0 - t) * scenario.sigma2 / (t * h_s2)


def chi_square_params(channels: ChannelState, scenario: Scenario, sigma1_sq=None) -> ChiSquareParams:
    """Non-centrality and exponent for the M = 1 exponential approximation.

    ``sigma1_sq`` defaults to the channel's own error variance. The exponent
    is T / (sigma1^2 (1 + theta^2 / 2)), i.e. T over E|h|^2.
    """
    if channels.M != 1 or channels.N != 1:
        raise ValidationError(f"chi-square model needs M = N = 1, got M = {channels.M}, N = {channels.N}")
    if sigma1_sq is None:
        sigma1_sq = float(channels.sigma_mat[0, 0, 0].real)
    if not sigma1_sq > 0:
        raise ValidationError(f"sigma1_sq must be > 0, got {sigma1_sq}")
    theta2 = 2.0 * abs(channels.h_hat[0, 0]) ** 2 / sigma1_sq
    h_s2 = abs(channels.h_s[0]) ** 2
    eta = outage_threshold(scenario, h_s2) / (sigma1_sq * (1.0 + theta2 / 2.0))
    return ChiSquareParams(theta2, eta)


def exp_non_outage(P, eta):
    """Approximate non-outage probability exp(-eta / P)."""
    P = np.asarray(P, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(P > 0, np.exp(-eta / np.where(P > 0, P, 1.0)), 0.0)


def _m1_residuals(P, rho, eta, alpha_eff, tau, c):
    lhs = alpha_eff * eta * math.exp(-eta / P)
    rhs = tau * rho * P * P
    r1 = abs(lhs - rhs) / max(abs(lhs), abs(rhs))
    r2 = abs(eta / P - c / rho - 1.0)
    return r1, r2


def equilibrium_m1_exact(params: ChiSquareParams, alpha_eff, tau, c) -> Equilibrium:
    """Solve alpha' eta e^(-eta/P) = tau rho P^2 together with eta/P - c/rho = 1.

    The second equation gives rho = c P / (eta - P); substituting leaves a
    scalar residual on (0, eta) which is negative at both ends. The
    equilibrium is its largest root (the one on the concave branch of the
    follower's utility), bracketed by a grid scan and bisected.

    The root is returned even when the follower's utility there is negative;
    callers comparing against P = 0 should inspect ``u_bs``.
    """
    eta = params.eta
    if not eta > 0:
        raise ValidationError(f"eta must be > 0, got {eta}")

    def resid(P):
        return alpha_eff * eta * math.exp(-eta / P) - tau * c * P ** 3 / (eta - P)

    eps = 1e-9
    grid = eta * np.linspace(eps, 1.0 - eps, 4001)
    vals = np.array([resid(p) for p in grid])
    pos = np.flatnonzero(vals > 0)
    if pos.size == 0:
        raise NumericError(
            "no interior equilibrium: follower's marginal utility never reaches the price "
            f"(max residual {vals.max():.3e}); boundary P* = 0"
        )
    k = pos[-1]
    lo, hi = grid[k], grid[k + 1]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if resid(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    P = 0.5 * (lo + hi)
    # Newton polish on the scalar residual, kept only if it stays in the bracket.
    for _ in range(2):
        h = 1e-7 * P
        d = (resid(P + h) - resid(P - h)) / (2 * h)
        if d != 0:
            cand = P - resid(P) / d
            if grid[k] <= cand <= grid[k + 1] and abs(resid(cand)) <= abs(resid(P)):
                P = cand
    rho = c * P / (eta - P)
    u_bs = alpha_eff * math.exp(-eta / P) - tau * rho * P
    r1, r2 = _m1_residuals(P, rho, eta, alpha_eff, tau, c)
    if r1 > 1e-10 or r2 > 1e-10:
        raise NumericError(f"equilibrium residuals too large ({r1:.2e}, {r2:.2e})")
    return Equilibrium(rho, P, None, eta, u_bs, utility_pb(rho, P, c))


# ---------------------------------------------------------------------------
# Monte-Carlo non-outage
# ---------------------------------------------------------------------------

def estimate_non_outage(P, w, channels: ChannelState, i: int, scenario: Scenario, n_samples: int, stream):
    """Fraction of error draws whose throughput exceeds beta, with its binomial std. error."""
    if int(n_samples) < 1:
        raise ValidationError("n_samples must be >= 1")
    w = as_unit_vector(w)
    n = int(n_samples)
    e = sample_errors(channels.sigma_mat[i], stream, n)
    h = channels.h_hat[i][None, :] + e
    gain = np.abs(h.conj() @ w) ** 2
    x = _snr_scale(scenario) * abs(channels.h_s[i]) ** 2 * gain * P
    D = (1.0 - scenario.tau) / (2.0 * scenario.N) * np.log2(1.0 + x)
    p_hat = float(np.mean(D > scenario.beta))
    return p_hat, math.sqrt(p_hat * (1.0 - p_hat) / n)
