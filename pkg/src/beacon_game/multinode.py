"""Max-min beamforming over several sensors.

The beamformer problem is

    maximise  nu   s.t.  w^H A_i w >= nu  for all i,  ||w|| = 1,

with A_i = |h_s_i|^2 Q_i. Four values of nu are produced: eigenvalue lower
and upper bounds, the semidefinite relaxation (W in place of w w^H) and a
sampling plus local-ascent search over the sphere. Each nu maps to an
equilibrium through the closed form in :mod:`beacon_game.game`.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .channel import ChannelState, Scenario
from .errors import ConvergenceError, NumericError, ValidationError
from .game import EffectiveGameParams, Equilibrium, equilibrium_closed_form
from .hermitian import eigh, normalize_phase, psd_sqrt, quad_forms, sample_unit_sphere
from .rng import RandomStream, as_generator, standard_complex_normal

log = logging.getLogger(__name__)

ROUNDING_SAMPLES = 1000
GS_BUDGET = 20_000
GS_RESTARTS = 20
GS_ITERS = 500


@dataclass
class WeightedInstance:
    a_mat: np.ndarray  # (N, M, M)

    def __post_init__(self):
        a = np.asarray(self.a_mat, dtype=complex)
        if a.ndim == 2:
            a = a[None]
        if a.ndim != 3 or a.shape[1] != a.shape[2] or a.shape[0] < 1:
            raise ValidationError(f"expected an (N, M, M) stack, got shape {a.shape}")
        if np.max(np.abs(a - a.conj().transpose(0, 2, 1))) > 1e-8 * max(1.0, np.max(np.abs(a))):
            raise ValidationError("constraint matrices must be Hermitian")
        self.a_mat = a

    @classmethod
    def from_channels(cls, channels: ChannelState) -> "WeightedInstance":
        return cls(channels.weighted())

    @property
    def N(self) -> int:
        return self.a_mat.shape[0]

    @property
    def M(self) -> int:
        return self.a_mat.shape[1]

    def objective(self, w) -> np.ndarray:
        """min_i w^H A_i w for one vector (M,) or a batch (K, M)."""
        return quad_forms(self.a_mat, w).min(axis=-1)


@dataclass
class SDPResult:
    nu_sdp: float
    W: np.ndarray
    w_sdp: np.ndarray
    dual_weights: np.ndarray
    primal_value: float  # min_i Tr(A_i W)
    gap: float  # nu_sdp - primal_value
    method: str


@dataclass
class BoundSet:
    nu_min: float
    nu_max: float
    nu_sdp: float
    W: np.ndarray
    w_sdp: np.ndarray
    dual_weights: np.ndarray
    nu_gs: float
    w_gs: np.ndarray
    sdp_gap: float = 0.0


def _spectra(a_mat):
    vals = np.empty(a_mat.shape[:2])
    vecs = np.empty(a_mat.shape, dtype=complex)
    for i, a in enumerate(a_mat):
        vals[i], vecs[i] = eigh(a)
    return vals, vecs


def nu_bounds(instance: WeightedInstance):
    """(min_i lambda_min(A_i), min_i lambda_max(A_i))."""
    vals, _ = _spectra(instance.a_mat)
    return float(vals[:, 0].min()), float(vals[:, -1].min())


# ---------------------------------------------------------------------------
# Semidefinite relaxation
# ---------------------------------------------------------------------------

def project_simplex(c) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = 1} (sorted-threshold method)."""
    c = np.asarray(c, dtype=float)
    a = np.sort(c)[::-1]
    thresholds = (np.cumsum(a) - 1.0) / np.arange(1, len(c) + 1)
    k = np.flatnonzero(a > thresholds)[-1]
    return np.maximum(c - thresholds[k], 0.0)


def _dual_value(lam, a_mat):
    vals, vecs = eigh(np.einsum("i,imn->mn", lam, a_mat))
    return float(vals[-1]), vecs[:, -1]


def _clean_density(W):
    """Nearest unit-trace PSD matrix to a numerically noisy estimate."""
    W = 0.5 * (W + W.conj().T)
    vals, vecs = np.linalg.eigh(W)
    vals = np.clip(vals, 0.0, None)
    if vals.sum() <= 0:
        raise NumericError("relaxed matrix collapsed to zero")
    W = (vecs * (vals / vals.sum())) @ vecs.conj().T
    return 0.5 * (W + W.conj().T)


def _vertex_solution(a_mat, vals, vecs):
    """Rank-one certificate: the bottleneck's top eigenvector satisfies every constraint."""
    i = int(np.argmin(vals[:, -1]))
    top = vals[i, -1]
    v = vecs[i][:, -1]
    if quad_forms(a_mat, v).min() >= top * (1.0 - 1e-12):
        lam = np.zeros(len(a_mat))
        lam[i] = 1.0
        return top, np.outer(v, v.conj()), lam
    return None


def _solve_conic(a_mat, keep):
    import cvxpy as cp

    A = a_mat[keep]
    M = A.shape[1]
    W = cp.Variable((M, M), hermitian=True)
    t = cp.Variable()
    cons = [W >> 0, cp.real(cp.trace(W)) == 1]
    cons += [cp.real(cp.trace(A[i] @ W)) >= t for i in range(len(A))]
    prob = cp.Problem(cp.Maximize(t), cons)
    try:
        with warnings.catch_warnings():
            # Accuracy is judged by our own duality-gap certificate instead.
            warnings.simplefilter("ignore", UserWarning)
            prob.solve(solver="CLARABEL", tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12, max_iter=300)
    except cp.error.SolverError as exc:
        raise NumericError(f"conic solver failed: {exc}") from exc
    if W.value is None:
        raise NumericError(f"conic solver returned status {prob.status}")
    lam = np.zeros(len(a_mat))
    lam[keep] = np.clip([float(np.real(c.dual_value)) for c in cons[2:]], 0.0, None)
    if lam.sum() <= 0:
        lam[keep] = 1.0
    return _clean_density(np.asarray(W.value)), lam / lam.sum()


def _solve_subgradient(a_mat, tol, max_iter, check_every=50):
    """Projected subgradient on the simplex dual with averaged primal iterate.

    The primal estimate averages the top-eigenvector outer products over the
    last 90% of iterations run so far (prefix sums kept at checkpoints).
    """
    N, M = a_mat.shape[:2]
    L = max(float(np.max(np.linalg.norm(a_mat, axis=(1, 2)))), 1e-300)
    lam = np.full(N, 1.0 / N)
    best_ub, best_lam = np.inf, lam
    running = np.zeros((M, M), dtype=complex)
    prefix = [running.copy()]  # prefix[j] = sum of the first j * check_every outer products
    gap = np.inf
    for t in range(1, max_iter + 1):
        f, v = _dual_value(lam, a_mat)
        if f < best_ub:
            best_ub, best_lam = f, lam
        running += np.outer(v, v.conj())
        if t % check_every == 0:
            prefix.append(running.copy())
            j0 = (len(prefix) - 1) // 10
            count = t - j0 * check_every
            W = (running - prefix[j0]) / count
            lb = float(np.real(np.einsum("imn,nm->i", a_mat, W)).min())
            gap = best_ub - lb
            if gap <= tol * abs(best_ub):
                return _clean_density(W), best_lam
        lam = project_simplex(lam - quad_forms(a_mat, v) / (L * np.sqrt(t)))
    raise ConvergenceError(
        f"subgradient SDP did not close the gap in {max_iter} iterations", best_gap=gap / abs(best_ub)
    )


def _round(a_mat, W, stream, n_samples):
    """Best unit vector among the top eigenvector of W and random draws W^(1/2) u.

    Half the draws use Gaussian u ~ CN(0, I), the other half unit-modulus u
    with uniform phases; the latter keeps each |w_m|^2 proportional to W_mm.
    """
    vals, vecs = eigh(W)
    cands = [vecs[:, -1]]
    if n_samples > 0:
        rng = as_generator(stream)
        n_gauss = (int(n_samples) + 1) // 2
        u = np.concatenate([
            standard_complex_normal(rng, (n_gauss, W.shape[0])),
            np.exp(2j * np.pi * rng.random((int(n_samples) - n_gauss, W.shape[0]))),
        ])
        draws = u @ psd_sqrt(0.5 * (W + W.conj().T)).T
        norms = np.linalg.norm(draws, axis=1)
        draws = draws[norms > 0] / norms[norms > 0, None]
        cands.extend(draws)
    cands = np.asarray(cands)
    scores = quad_forms(a_mat, cands).min(axis=1)
    k = int(np.argmax(scores))
    return normalize_phase(cands[k]), float(scores[k])


def solve_sdp_relaxation(
    instance: WeightedInstance,
    tol: float = 1e-6,
    stream=0,
    method: str = "conic",
    max_iter: int = 100_000,
    rounding_samples: int = ROUNDING_SAMPLES,
) -> SDPResult:
    """Relaxed max-min problem over unit-trace PSD matrices.

    The returned ``nu_sdp`` is the dual value lambda_max(sum_i lam_i A_i) at
    the certified weights, so it upper-bounds every rank-one value; ``gap``
    is its distance to the primal value min_i Tr(A_i W). A gap above
    ``tol * nu_sdp`` raises :class:`ConvergenceError`.
    """
    if not tol > 0:
        raise ValidationError("tol must be > 0")
    a_mat = instance.a_mat
    N, M = a_mat.shape[:2]
    vals, vecs = _spectra(a_mat)
    nu_max = float(vals[:, -1].min())
    if nu_max <= 0:
        e = np.eye(M, dtype=complex)[0]
        lam = np.zeros(N)
        lam[int(np.argmin(vals[:, -1]))] = 1.0
        return SDPResult(0.0, np.outer(e, e), e, lam, 0.0, 0.0, "degenerate")

    vertex = _vertex_solution(a_mat, vals, vecs)
    if vertex is not None:
        nu, W, lam = vertex
        used = "vertex"
    else:
        scale = nu_max
        scaled = a_mat / scale
        # Constraints with lambda_min(A_i) >= nu_max can never bind.
        keep = vals[:, 0] < nu_max
        if method == "conic":
            W, lam = _solve_conic(scaled, keep)
        elif method == "subgradient":
            W, lam = _solve_subgradient(scaled, tol, max_iter)
        else:
            raise ValidationError(f"unknown SDP method {method!r}")
        ub, _ = _dual_value(lam, scaled)
        nu = min(ub, 1.0) * scale
        if ub >= 1.0:
            # The best vertex is a better dual point than the solver's weights.
            lam = np.zeros(N)
            lam[int(np.argmin(vals[:, -1]))] = 1.0
        used = method
    primal = float(np.real(np.einsum("imn,nm->i", a_mat, W)).min())
    gap = nu - primal
    if gap > tol * abs(nu):
        raise ConvergenceError(f"SDP duality gap {gap / nu:.2e} (relative) exceeds {tol:.1e}", best_gap=gap / nu)
    rs = stream if isinstance(stream, RandomStream) else RandomStream(int(stream))
    w, _ = _round(a_mat, W, rs.substream(7), rounding_samples)
    log.debug("sdp[%s] nu=%.6e gap=%.2e", used, nu, gap)
    return SDPResult(nu, W, w, lam, primal, gap, used)


# ---------------------------------------------------------------------------
# Sphere search
# ---------------------------------------------------------------------------

def _ascent(a_mat, starts, iters):
    """Normalised subgradient ascent on w -> min_i w^H A_i w from several starts."""
    W = np.array(starts, dtype=complex)
    best = quad_forms(a_mat, W).min(axis=1)
    best_w = W.copy()
    for t in range(1, iters + 1):
        q = quad_forms(a_mat, W)
        active = np.argmin(q, axis=1)
        grad = np.einsum("kmn,kn->km", a_mat[active], W)
        # Remove the radial part; the sphere constraint absorbs it.
        grad -= np.einsum("km,km->k", W.conj(), grad)[:, None] * W
        gnorm = np.linalg.norm(grad, axis=1)
        step = 0.5 / np.sqrt(t)
        W = W + step * grad / np.where(gnorm > 0, gnorm, 1.0)[:, None]
        W /= np.linalg.norm(W, axis=1, keepdims=True)
        val = quad_forms(a_mat, W).min(axis=1)
        better = val > best
        best[better] = val[better]
        best_w[better] = W[better]
    k = int(np.argmax(best))
    return float(best[k]), best_w[k]


def global_search(
    instance: WeightedInstance,
    budget: int = GS_BUDGET,
    stream=0,
    restarts: int = GS_RESTARTS,
    iters: int = GS_ITERS,
):
    """Best-effort maximiser of min_i w^H A_i w.

    Combines ``budget`` uniform sphere samples with ``restarts`` local ascent
    runs. The ascent starts come from their own sub-stream (the top
    eigenvectors of the weakest constraints, then random points), so a larger
    budget can only raise the returned value.
    """
    if int(budget) < 1:
        raise ValidationError("budget must be >= 1")
    a_mat = instance.a_mat
    N, M = a_mat.shape[:2]
    rs = stream if isinstance(stream, RandomStream) else RandomStream(int(stream))
    scale = float(np.max(np.abs(a_mat))) or 1.0
    scaled = a_mat / scale

    best_val, best_w = -np.inf, None
    rng = rs.substream(0).generator()
    chunk = 4096
    left = int(budget)
    while left > 0:
        n = min(chunk, left)
        S = sample_unit_sphere(M, rng, size=n)
        vals = quad_forms(scaled, S).min(axis=1)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_w = float(vals[k]), S[k]
        left -= n

    if restarts > 0 and iters > 0:
        top_vals, top_vecs = _spectra(scaled)
        order = np.argsort(top_vals[:, -1], kind="stable")
        starts = [top_vecs[i][:, -1] for i in order[: min(N, restarts // 2 or 1)]]
        n_rand = restarts - len(starts)
        if n_rand > 0:
            starts.extend(sample_unit_sphere(M, rs.substream(1), size=n_rand))
        val, w = _ascent(scaled, starts, iters)
        if val > best_val:
            best_val, best_w = val, w
    best_w = normalize_phase(best_w)
    return float(instance.objective(best_w)), best_w


# ---------------------------------------------------------------------------
# Equilibria
# ---------------------------------------------------------------------------

def equilibrium_from_nu(nu: float, scenario: Scenario) -> Equilibrium:
    if not nu > 0:
        raise ValidationError(f"nu must be > 0 for a power trade, got {nu}")
    eq = equilibrium_closed_form(EffectiveGameParams.from_nu(nu, scenario))
    eq.nu_or_mu = float(nu)
    return eq


def solve_bounds(instance: WeightedInstance, stream=0, gs_budget: int = GS_BUDGET, sdp_tol: float = 1e-6,
                 sdp_method: str = "conic") -> BoundSet:
    """All four nu values for one instance."""
    rs = stream if isinstance(stream, RandomStream) else RandomStream(int(stream))
    nu_min, nu_max = nu_bounds(instance)
    sdp = solve_sdp_relaxation(instance, sdp_tol, rs.substream(0), method=sdp_method)
    nu_gs, w_gs = global_search(instance, gs_budget, rs.substream(1))
    return BoundSet(nu_min, nu_max, sdp.nu_sdp, sdp.W, sdp.w_sdp, sdp.dual_weights, nu_gs, w_gs, sdp.gap)
