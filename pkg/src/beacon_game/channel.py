"""Scenario geometry, path-loss channel estimates and channel-error draws."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ValidationError
from .hermitian import is_psd, psd_sqrt
from .rng import RandomStream, as_generator, standard_complex_normal

__all__ = [
    "Scenario",
    "ChannelState",
    "RandomStream",
    "place_sensors",
    "build_channels",
    "channels_from_estimates",
    "sample_error",
    "sample_errors",
]

PHASE_MODELS = ("uniform", "zero")
DEFAULT_REGION = ((-4.0, -10.0), (4.0, -10.0), (4.0, 10.0), (-4.0, 10.0))


@dataclass(frozen=True)
class Scenario:
    """Game and physical parameters of one network instance.

    Defaults are the numerical-results setting: alpha=1e3, beta=1, c=1,
    sigma2=1e-8, gamma=3.5, tau=1/2, N=20 sensors in an 8x20 rectangle,
    base station at (-10, 0).
    """

    tau: float = 0.5
    beta: float = 1.0
    alpha: float = 1e3
    c: float = 1.0
    sigma2: float = 1e-8
    gamma: float = 3.5
    M: int = 5
    N: int = 20
    bs_position: tuple[float, float] = (-10.0, 0.0)
    pb_position: tuple[float, float] = (10.0, 0.0)
    sensor_region: tuple[tuple[float, float], ...] = DEFAULT_REGION
    # Fixed sensor coordinates; when set, random placement is skipped.
    sensor_positions: tuple[tuple[float, float], ...] | None = None
    # "uniform": i.i.d. uniform phases on the estimated PB channels.
    # "zero": real positive estimates h = d^(-gamma/2) on every antenna.
    phase_model: str = "uniform"

    def __post_init__(self):
        checks = [
            ("tau", 0.0 < self.tau < 1.0, "must lie in (0, 1)"),
            ("beta", self.beta > 0, "must be > 0"),
            ("alpha", self.alpha > 0, "must be > 0"),
            ("c", self.c > 0, "must be > 0"),
            ("sigma2", self.sigma2 > 0, "must be > 0"),
            ("gamma", self.gamma > 0, "must be > 0"),
            ("M", int(self.M) == self.M and self.M >= 1, "must be an integer >= 1"),
            ("N", int(self.N) == self.N and self.N >= 1, "must be an integer >= 1"),
        ]
        for name, ok, msg in checks:
            if not ok:
                raise ValidationError(f"scenario.{name}: {msg} (got {getattr(self, name)!r})")
        if self.phase_model not in PHASE_MODELS:
            raise ValidationError(
                f"scenario.phase_model: must be one of {', '.join(PHASE_MODELS)} (got {self.phase_model!r})"
            )
        if self.sensor_positions is not None and len(self.sensor_positions) != self.N:
            raise ValidationError(
                f"geometry.sensor_positions: expected {self.N} points, got {len(self.sensor_positions)}"
            )

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)


@dataclass
class ChannelState:
    h_hat: np.ndarray  # (N, M) estimated PB->sensor channels
    sigma_mat: np.ndarray  # (N, M, M) error covariances
    h_s: np.ndarray  # (N,) sensor->BS gains
    q_mat: np.ndarray  # (N, M, M), h_hat h_hat^H + Sigma
    sensor_positions: np.ndarray = field(default=None)  # (N, 2)

    @property
    def N(self) -> int:
        return self.h_hat.shape[0]

    @property
    def M(self) -> int:
        return self.h_hat.shape[1]

    def weighted(self) -> np.ndarray:
        """Stack of |h_s_i|^2 Q_i."""
        return (np.abs(self.h_s) ** 2)[:, None, None] * self.q_mat


def _region_bounds(region):
    pts = np.asarray(region, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ValidationError("geometry.sensor_region: expected a list of (x, y) corners")
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    if np.any(hi - lo <= 0):
        raise ValidationError("geometry.sensor_region: rectangle has zero area")
    return lo, hi


def place_sensors(scenario: Scenario, stream) -> np.ndarray:
    """N points i.i.d. uniform over the axis-aligned sensor rectangle."""
    lo, hi = _region_bounds(scenario.sensor_region)
    rng = as_generator(stream)
    return lo + (hi - lo) * rng.random((scenario.N, 2))


def channels_from_estimates(h_hat, sigma_mat, h_s, sensor_positions=None) -> ChannelState:
    """Assemble a ChannelState, forming Q_i = h_i h_i^H + Sigma_i."""
    h_hat = np.atleast_2d(np.asarray(h_hat, dtype=complex))
    sigma_mat = np.asarray(sigma_mat, dtype=complex)
    if sigma_mat.ndim == 2:
        sigma_mat = sigma_mat[None]
    h_s = np.atleast_1d(np.asarray(h_s, dtype=complex))
    N, M = h_hat.shape
    if sigma_mat.shape != (N, M, M) or h_s.shape != (N,):
        raise ValidationError(
            f"inconsistent channel shapes: h_hat {h_hat.shape}, sigma {sigma_mat.shape}, h_s {h_s.shape}"
        )
    q_mat = np.einsum("im,in->imn", h_hat, h_hat.conj()) + sigma_mat
    pos = None if sensor_positions is None else np.asarray(sensor_positions, dtype=float)
    return ChannelState(h_hat, sigma_mat, h_s, q_mat, pos)


def build_channels(scenario: Scenario, sensor_positions, stream) -> ChannelState:
    """Path-loss channel estimates and Sigma_i = I / d_i^gamma.

    Every PB antenna sits at ``scenario.pb_position``, so each sensor has a
    single PB distance d_i; entries of h_hat_i have modulus d_i^(-gamma/2)
    and phases set by ``scenario.phase_model``. The phase draws are consumed
    from ``stream`` under either model.
    """
    pos = np.asarray(sensor_positions, dtype=float).reshape(-1, 2)
    d_pb = np.linalg.norm(pos - np.asarray(scenario.pb_position, dtype=float), axis=1)
    d_bs = np.linalg.norm(pos - np.asarray(scenario.bs_position, dtype=float), axis=1)
    if np.any(d_pb <= 0) or np.any(d_bs <= 0):
        raise ValidationError("geometry: a sensor coincides with the power beacon or base station")
    M, g = int(scenario.M), scenario.gamma
    rng = as_generator(stream)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(len(pos), M))
    bs_phase = rng.uniform(0.0, 2.0 * np.pi, size=len(pos))
    if scenario.phase_model == "zero":
        phases[:] = 0.0
        bs_phase[:] = 0.0
    h_hat = (d_pb ** (-g / 2))[:, None] * np.exp(1j * phases)
    sigma = (d_pb ** (-g))[:, None, None] * np.eye(M)[None]
    h_s = d_bs ** (-g / 2) * np.exp(1j * bs_phase)
    return channels_from_estimates(h_hat, sigma, h_s, pos)


def _cov_root(sigma_mat):
    sigma_mat = np.asarray(sigma_mat, dtype=complex)
    if not is_psd(sigma_mat, tol=1e-12 * max(1.0, float(np.max(np.abs(sigma_mat))))):
        raise ValidationError("error covariance is not positive semidefinite")
    return psd_sqrt(sigma_mat)


def sample_errors(sigma_mat, stream, n: int) -> np.ndarray:
    """``n`` draws of e ~ CN(0, Sigma) as an (n, M) array."""
    root = _cov_root(sigma_mat)
    rng = as_generator(stream)
    z = standard_complex_normal(rng, (int(n), root.shape[0]))
    return z @ root.T


def sample_error(sigma_mat, stream) -> np.ndarray:
    """One draw e ~ CN(0, Sigma) via Sigma^(1/2) z."""
    return sample_errors(sigma_mat, stream, 1)[0]
