"""Seeded parameter sweeps over distance, error coefficient and antenna count.

Replication ``r`` of a sweep draws everything from ``RandomStream(base_seed, r)``:
sub-stream 0 places the sensors, 1 draws channel phases, 2 seeds the
solvers and 3 the Monte-Carlo checks. Placement and phases do not depend on
the sweep value, so every point of a curve sees the same layout.
"""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial
from pathlib import Path

import numpy as np

from .channel import ChannelState, Scenario, build_channels, channels_from_estimates, place_sensors
from .config import SweepConfig
from .errors import ValidationError
from .game import (
    EffectiveGameParams,
    chi_square_params,
    equilibrium_m1_exact,
    estimate_non_outage,
    gamma_all,
    gamma_from_gain,
    single_node_solve,
)
from .multinode import (
    WeightedInstance,
    equilibrium_from_nu,
    global_search,
    nu_bounds,
    solve_sdp_relaxation,
)
from .records import SweepRecord, fmt
from .rng import RandomStream

log = logging.getLogger(__name__)


def replication_stream(config: SweepConfig, rep: int) -> RandomStream:
    return RandomStream(config.base_seed, rep)


def replication_channels(scenario: Scenario, stream: RandomStream) -> ChannelState:
    if scenario.sensor_positions is not None:
        pos = np.asarray(scenario.sensor_positions, dtype=float)
    else:
        pos = place_sensors(scenario, stream.substream(0))
    return build_channels(scenario, pos, stream.substream(1))


def m1_channels(channels: ChannelState, config: SweepConfig) -> ChannelState:
    """Apply the sigma1^2 / theta^2 overrides to a single-antenna channel."""
    if channels.M != 1 or (config.theta2 is None and config.sigma1_sq is None):
        return channels
    sigma1 = config.sigma1_sq if config.sigma1_sq is not None else float(channels.sigma_mat[0, 0, 0].real)
    h = channels.h_hat.copy()
    if config.theta2 is not None:
        phase = np.exp(1j * np.angle(h))
        h = math.sqrt(config.theta2 * sigma1 / 2.0) * phase
    sigma = np.full_like(channels.sigma_mat, sigma1)
    return channels_from_estimates(h, sigma, channels.h_s, channels.sensor_positions)


class _Lazy:
    """Per-instance cache so several solvers share one SDP / search run."""

    def __init__(self, channels, config, stream):
        self.instance = WeightedInstance.from_channels(channels)
        self.config = config
        self.stream = stream
        self._bounds = self._sdp = self._gs = None

    def bounds(self):
        if self._bounds is None:
            self._bounds = nu_bounds(self.instance)
        return self._bounds

    def sdp(self):
        if self._sdp is None:
            self._sdp = solve_sdp_relaxation(self.instance, self.config.sdp_tol, self.stream.substream(0))
        return self._sdp

    def gs(self):
        if self._gs is None:
            self._gs = global_search(self.instance, self.config.gs_budget, self.stream.substream(1))
        return self._gs


def _solve(solver, channels, scenario, config, cache):
    """Return (equilibrium, nu, w, gamma_min) for one solver."""
    if solver == "closed_form":
        eq = single_node_solve(channels, scenario)
        nu = abs(channels.h_s[0]) ** 2 * eq.nu_or_mu
        return eq, nu, eq.w_star, float(gamma_from_gain(nu, eq.p_star, scenario))
    if solver == "m1_exact":
        chi = chi_square_params(channels, scenario, config.sigma1_sq)
        a_eff = EffectiveGameParams.from_nu(1.0, scenario).alpha_eff
        eq = equilibrium_m1_exact(chi, a_eff, scenario.tau, scenario.c)
        w = np.ones(1, dtype=complex)
        return eq, chi.eta, w, float(gamma_all(eq.p_star, w, channels, scenario).min())
    if solver in ("nu_min", "nu_max"):
        nu = cache.bounds()[0 if solver == "nu_min" else 1]
        w = None
    elif solver == "sdp":
        res = cache.sdp()
        nu, w = res.nu_sdp, res.w_sdp
    elif solver == "global_search":
        nu, w = cache.gs()
    else:
        raise ValidationError(f"unknown solver {solver!r}")
    eq = equilibrium_from_nu(nu, scenario)
    eq.w_star = w
    return eq, nu, w, float(gamma_from_gain(nu, eq.p_star, scenario))


def _non_outage_min(eq, w, channels, scenario, config, stream):
    if config.mc_samples <= 0 or w is None:
        return None
    mc = stream.substream(3)
    return min(
        estimate_non_outage(eq.p_star, w, channels, i, scenario, config.mc_samples, mc.substream(i))[0]
        for i in range(channels.N)
    )


def _records_for(value, rep, channels, scenario, config, stream):
    cache = _Lazy(channels, config, stream.substream(2))
    out = []
    for solver in config.solvers:
        eq, nu, w, gmin = _solve(solver, channels, scenario, config, cache)
        powers = None
        if w is not None and channels.M > 0:
            powers = tuple(float(p) for p in np.abs(w) ** 2 * eq.p_star)
        out.append(SweepRecord(
            sweep_value=float(value),
            replication=rep,
            seed=config.base_seed,
            solver=solver,
            nu=float(nu),
            rho_star=float(eq.rho_star),
            p_star=float(eq.p_star),
            u_bs=float(eq.u_bs),
            u_pb=float(eq.u_pb),
            gamma_min=gmin,
            p_nonoutage_hat=_non_outage_min(eq, w, channels, scenario, config, stream),
            per_antenna_power=powers,
        ))
    return out


def _scenario_at(config: SweepConfig, value) -> Scenario:
    sc = config.scenario
    if config.sweep_variable == "d":
        return sc.with_(pb_position=(float(value), 0.0))
    if config.sweep_variable == "M":
        if value != int(value) or value < 1:
            raise ValidationError(f"sweep.values: antenna counts must be positive integers, got {value}")
        return sc.with_(M=int(value))
    return sc


def _replication(config: SweepConfig, rep: int) -> list[SweepRecord]:
    stream = replication_stream(config, rep)
    out = []
    for value in config.sweep_values:
        if config.sweep_variable == "zeta":
            scenario = config.scenario
            channels = replication_channels(scenario, stream)
            z = value * float(channels.sigma_mat[0, 0, 0].real) if config.zeta_units == "default_multiple" else value
            sigma = channels.sigma_mat.copy()
            sigma[0, 0, 0] = z
            channels = channels_from_estimates(channels.h_hat, sigma, channels.h_s, channels.sensor_positions)
        else:
            scenario = _scenario_at(config, value)
            channels = m1_channels(replication_channels(scenario, stream), config)
        out.extend(_records_for(value, rep, channels, scenario, config, stream))
    return out


def _run(config: SweepConfig, jobs: int = 1) -> list[SweepRecord]:
    reps = range(config.replications)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(partial(_replication, config), reps))
    else:
        chunks = [_replication(config, r) for r in reps]
    records = [r for chunk in chunks for r in chunk]
    return sorted(records, key=SweepRecord.sort_key)


def run_distance_sweep(config: SweepConfig, jobs: int = 1) -> list[SweepRecord]:
    """Move the beacon along (d, 0) and solve every requested game at each d."""
    if config.sweep_variable != "d":
        raise ValidationError(f"sweep.variable: distance sweep needs 'd', got {config.sweep_variable!r}")
    _check_solvers(config)
    return _run(config, jobs)


def run_antenna_sweep(config: SweepConfig, jobs: int = 1) -> list[SweepRecord]:
    if config.sweep_variable != "M":
        raise ValidationError(f"sweep.variable: antenna sweep needs 'M', got {config.sweep_variable!r}")
    _check_solvers(config)
    return _run(config, jobs)


def run_uncertainty_sweep(config: SweepConfig, jobs: int = 1) -> list[SweepRecord]:
    """Raise the (1,1) error variance and record how the beamformer re-weights antennas."""
    sc = config.scenario
    if sc.N != 1:
        raise ValidationError(f"scenario.N: uncertainty sweep needs a single sensor, got N = {sc.N}")
    if sc.M < 2:
        raise ValidationError(f"scenario.M: uncertainty sweep needs M >= 2, got M = {sc.M}")
    if config.sweep_variable != "zeta":
        raise ValidationError(f"sweep.variable: uncertainty sweep needs 'zeta', got {config.sweep_variable!r}")
    if set(config.solvers) != {"closed_form"}:
        config = replace(config, solvers=("closed_form",))
    return _run(config, jobs)


def run_sweep(config: SweepConfig, jobs: int = 1) -> list[SweepRecord]:
    if config.sweep_variable == "zeta":
        return run_uncertainty_sweep(config, jobs)
    if config.sweep_variable == "M":
        return run_antenna_sweep(config, jobs)
    return run_distance_sweep(config, jobs)


def _check_solvers(config: SweepConfig):
    sc = config.scenario
    for s in config.solvers:
        if s == "closed_form" and sc.N != 1:
            raise ValidationError("sweep.solvers: closed_form needs N = 1 (use nu_* / sdp / global_search)")
        if s == "m1_exact" and (sc.N != 1 or (sc.M != 1 and config.sweep_variable != "M")):
            raise ValidationError("sweep.solvers: m1_exact needs M = 1 and N = 1")


# ---------------------------------------------------------------------------
# Bound validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundCheck:
    sweep_value: float
    replication: int
    sensor: int
    p_hat: float
    std_err: float
    gamma: float
    violated: bool

    @property
    def gamma_capped(self) -> float:
        return min(1.0, self.gamma)


def _equilibrium_with_vector(channels, scenario, config, stream):
    if channels.N == 1:
        eq = single_node_solve(channels, scenario)
        return eq, eq.w_star
    nu, w = global_search(WeightedInstance.from_channels(channels), config.gs_budget, stream.substream(2).substream(1))
    return equilibrium_from_nu(nu, scenario), w


def validate_bound(config: SweepConfig) -> list[BoundCheck]:
    """Monte-Carlo non-outage at the equilibrium versus the Markov/Jensen bound.

    A row is flagged when p_hat - 3 * std_err exceeds min(1, Gamma_i).
    """
    if config.mc_samples < 10_000:
        raise ValidationError(f"sweep.mc_samples: bound validation needs >= 10000 samples, got {config.mc_samples}")
    rows = []
    for rep in range(config.replications):
        stream = replication_stream(config, rep)
        values = config.sweep_values if config.sweep_variable in ("d", "M") else (config.sweep_values[0],)
        for value in values:
            scenario = _scenario_at(config, value)
            channels = replication_channels(scenario, stream)
            eq, w = _equilibrium_with_vector(channels, scenario, config, stream)
            gammas = gamma_all(eq.p_star, w, channels, scenario)
            mc = stream.substream(3)
            for i in range(channels.N):
                p_hat, se = estimate_non_outage(eq.p_star, w, channels, i, scenario, config.mc_samples, mc.substream(i))
                g = float(gammas[i])
                rows.append(BoundCheck(float(value), rep, i, p_hat, se, g, p_hat - 3 * se > min(1.0, g)))
    return rows


def emit_bound_csv(rows, path):
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sweep_value", "replication", "sensor", "p_hat", "std_err", "gamma", "gamma_capped", "violated"])
        for r in rows:
            w.writerow([fmt(r.sweep_value), r.replication, r.sensor, fmt(r.p_hat), fmt(r.std_err), fmt(r.gamma),
                        fmt(r.gamma_capped), int(r.violated)])
    return path
