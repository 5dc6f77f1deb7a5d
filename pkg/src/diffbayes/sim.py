"""Seeded synthetic scenarios, baseline estimators, and error metrics.

A Scenario fully determines a run: the master seed expands into
counter-based substreams per (purpose, step), and node k's draw at step t
is row k of that step's block, so results for a given (seed, t, k) never
change when the network grows or the horizon is extended.

Every runner has two execution paths with identical semantics:

* sequential: drives the per-node operations one node at a time;
  bit-reproducible, the reference for all exactness claims;
* fast (default): the same recursions vectorized across nodes with
  stacked arrays; equal to the sequential path up to last-digit rounding.

Fast mode covers the extended-information (V) representation only; runs
that ask for the rank-one (C) representation always take the sequential
path.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from . import diffusion, nig
from ._rng import PURPOSE_NOISE, PURPOSE_REGRESSOR, substream
from .errors import ConfigError, SingularStatisticsError
from .graph import (
    Network,
    TopologySpec,
    WEIGHT_STRATEGIES,
    build_network,
    weights_by_strategy,
)

PIPELINES = ("noncooperative", "diffusion", "centralized")

LABEL_NONCOOPERATIVE = "noncooperative"
LABEL_DIFFUSION_INCREMENTAL = "diffusion-incremental"
LABEL_DIFFUSION_SPATIAL = "diffusion-spatial"
LABEL_CENTRALIZED = "centralized"

REGRESSOR_KINDS = ("iid-normal",)


@dataclass(frozen=True)
class Scenario:
    """A seeded experiment description; immutable and hashable."""

    theta_true: tuple
    noise_std: tuple
    node_count: int
    topology: TopologySpec
    steps: int
    seed: int
    c_strategy: str = "metropolis"
    a_strategy: str = "metropolis"
    spatial_mode: str = "estimate-combination"
    incremental_mode: str = "neighbourhood"
    form: str = "v"
    eps: float = 1e-3
    nu0: float | None = None
    regressor_kind: str = "iid-normal"
    pipelines: tuple = PIPELINES

    def __post_init__(self):
        object.__setattr__(self, "theta_true", tuple(float(x) for x in self.theta_true))
        object.__setattr__(self, "noise_std", tuple(float(x) for x in self.noise_std))
        object.__setattr__(self, "pipelines", tuple(self.pipelines))
        if self.n < 1:
            raise ConfigError("theta_true must have at least one component")
        if self.node_count < 1:
            raise ConfigError(f"node_count must be >= 1, got {self.node_count}")
        if len(self.noise_std) != self.node_count:
            raise ConfigError(
                f"noise_std needs {self.node_count} entries, got {len(self.noise_std)}"
            )
        if any(not s > 0 for s in self.noise_std):
            raise ConfigError("noise_std entries must be > 0")
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        for name, value in (("c_strategy", self.c_strategy), ("a_strategy", self.a_strategy)):
            if value not in WEIGHT_STRATEGIES:
                raise ConfigError(f"{name} {value!r} not in {WEIGHT_STRATEGIES}")
        if self.spatial_mode not in diffusion.SPATIAL_MODES:
            raise ConfigError(f"spatial_mode {self.spatial_mode!r} not in {diffusion.SPATIAL_MODES}")
        if self.incremental_mode not in diffusion.INCREMENTAL_MODES:
            raise ConfigError(
                f"incremental_mode {self.incremental_mode!r} not in {diffusion.INCREMENTAL_MODES}"
            )
        if self.form not in diffusion.FORMS:
            raise ConfigError(f"form {self.form!r} not in {diffusion.FORMS}")
        if not self.eps > 0:
            raise ConfigError(f"eps must be > 0, got {self.eps}")
        if self.nu0 is not None and not self.nu0 > 0:
            raise ConfigError(f"nu0 must be > 0, got {self.nu0}")
        if self.regressor_kind not in REGRESSOR_KINDS:
            raise ConfigError(f"regressor_kind {self.regressor_kind!r} not in {REGRESSOR_KINDS}")
        unknown = [p for p in self.pipelines if p not in PIPELINES]
        if unknown or not self.pipelines:
            raise ConfigError(f"pipelines must be a non-empty subset of {PIPELINES}, got {self.pipelines}")

    @property
    def n(self) -> int:
        return len(self.theta_true)

    @property
    def nu0_effective(self) -> float:
        return float(self.n + 2) if self.nu0 is None else self.nu0


@dataclass(frozen=True)
class MetricsRow:
    """Per-step, per-pipeline error record over all nodes."""

    t: int
    pipeline: str
    sq_errors: tuple
    msd: float
    sigma2_hats: tuple


def scenario_network(sc: Scenario) -> Network:
    return build_network(sc.topology, sc.node_count, sc.seed)


def scenario_weights(sc: Scenario, net: Network):
    """Materialize the configured incremental (c) and spatial (a) weight tables."""
    noise_vars = [s * s for s in sc.noise_std]
    c = weights_by_strategy(net, sc.c_strategy, noise_vars)
    a = weights_by_strategy(net, sc.a_strategy, noise_vars)
    return c, a


class _StepStreams:
    """Substream draws through one recycled bit generator.

    Resetting the counter state reproduces the substream(seed, purpose, t)
    draws bit for bit while skipping per-call generator construction.
    """

    def __init__(self, seed: int):
        self._bg = np.random.Philox(key=seed)
        self._gen = np.random.Generator(self._bg)

    def draw(self, purpose: int, t: int, shape) -> np.ndarray:
        st = self._bg.state
        st["state"]["counter"] = np.array([0, 0, t, purpose], dtype=np.uint64)
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        st["uinteger"] = 0
        self._bg.state = st
        return self._gen.standard_normal(shape)


def _step_arrays(sc: Scenario, t: int, streams: _StepStreams | None = None):
    """Regressor block (M, n) and outputs (M,) for step t; pure in (seed, t)."""
    m, n = sc.node_count, sc.n
    if streams is None:
        psi = substream(sc.seed, PURPOSE_REGRESSOR, t).standard_normal((m, n))
        noise = substream(sc.seed, PURPOSE_NOISE, t).standard_normal(m)
    else:
        psi = streams.draw(PURPOSE_REGRESSOR, t, (m, n))
        noise = streams.draw(PURPOSE_NOISE, t, m)
    y = psi @ np.asarray(sc.theta_true) + noise * np.asarray(sc.noise_std)
    return psi, y


def generate_step_data(sc: Scenario, t: int) -> dict:
    """Observations for every node at step t, keyed by node id."""
    if not 1 <= t <= sc.steps:
        raise ConfigError(f"step {t} outside 1..{sc.steps}")
    psi, y = _step_arrays(sc, t)
    return {k: nig.Observation(y=y[k - 1], psi=psi[k - 1]) for k in range(1, sc.node_count + 1)}


def compute_msd(states, theta_true) -> float:
    """Network mean-square deviation: mean over nodes of ||theta_hat - theta||^2."""
    if isinstance(states, Mapping):
        states = states.values()
    theta_true = np.asarray(theta_true, dtype=float)
    sq = [float(np.sum((s.theta_hat - theta_true) ** 2)) for s in states]
    return float(np.mean(sq))


def _metrics_row(t: int, label: str, theta_stack, sigma2_stack, theta_true) -> MetricsRow:
    d = theta_stack - theta_true[None, :]
    sq = np.einsum("ki,ki->k", d, d)
    return MetricsRow(
        t=t,
        pipeline=label,
        sq_errors=tuple(sq.tolist()),
        msd=float(sq.mean()),
        sigma2_hats=tuple(np.asarray(sigma2_stack).tolist()),
    )


def _row_from_states(t: int, label: str, states: Mapping[int, diffusion.NodeState], theta_true) -> MetricsRow:
    order = sorted(states)
    theta = np.stack([states[k].theta_hat for k in order])
    sigma2 = np.array([states[k].sigma2_hat for k in order])
    return _metrics_row(t, label, theta, sigma2, np.asarray(theta_true))


# ---------------------------------------------------------------------------
# Vectorized fast path: the identical recursions on stacked per-node arrays.
# ---------------------------------------------------------------------------


def _stacked_estimates(v: np.ndarray, nu: np.ndarray):
    """Batched point estimates with the nig module's condition guard.

    The regressor blocks are symmetric, so the two-norm condition number is
    the ratio of extreme absolute eigenvalues; eigvalsh is cheaper than the
    SVD the scalar path uses and agrees exactly in value.
    """
    vpsi = v[:, 1:, 1:]
    eigs = np.abs(np.linalg.eigvalsh(vpsi))
    with np.errstate(divide="ignore", invalid="ignore"):
        conds = eigs.max(axis=-1) / eigs.min(axis=-1)
    if not np.all(conds < nig.COND_LIMIT):
        k = int(np.argmax(conds)) + 1
        raise SingularStatisticsError(
            f"node {k}: regressor block numerically singular "
            f"(condition estimate {float(np.max(conds)):.3e})"
        )
    vypsi = v[:, 1:, 0]
    theta = np.linalg.solve(vpsi, vypsi[..., None])[..., 0]
    lam = np.maximum(v[:, 0, 0] - np.einsum("ki,ki->k", vypsi, theta), 0.0)
    return theta, lam / nu


def _resym(v: np.ndarray) -> np.ndarray:
    return (v + np.swapaxes(v, -1, -2)) / 2.0


class _FastRun:
    """Per-step data generation for the stacked pipelines.

    With cache=True the outer-product blocks are kept per step so several
    pipelines of one scenario share a single pass of data generation.
    """

    def __init__(self, sc: Scenario, net: Network | None = None, cache: bool = False):
        self.sc = sc
        self.net = net
        self.theta_true = np.asarray(sc.theta_true)
        m, n = sc.node_count, sc.n
        self.prior_v = np.broadcast_to(sc.eps * np.eye(n + 1), (m, n + 1, n + 1)).copy()
        self.prior_nu = np.full(m, sc.nu0_effective)
        self._streams = _StepStreams(sc.seed)
        self._cache: dict | None = {} if cache else None

    def outers(self, t: int) -> np.ndarray:
        if self._cache is not None and t in self._cache:
            return self._cache[t]
        psi, y = _step_arrays(self.sc, t, self._streams)
        z = np.hstack([y[:, None], psi])
        o = np.einsum("mi,mj->mij", z, z)
        if self._cache is not None:
            self._cache[t] = o
        return o


def _fast_noncooperative(run: _FastRun) -> tuple:
    v, nu = run.prior_v.copy(), run.prior_nu.copy()
    rows = []
    for t in range(1, run.sc.steps + 1):
        v = _resym(v + run.outers(t))
        nu = nu + 1.0
        theta, sigma2 = _stacked_estimates(v, nu)
        rows.append(_metrics_row(t, LABEL_NONCOOPERATIVE, theta, sigma2, run.theta_true))
    return rows, _unstack_vforms(v, nu)


def _fast_centralized(run: _FastRun) -> tuple:
    sc = run.sc
    stat = nig.nig_init(sc.n, eps=sc.eps, nu0=sc.nu0_effective)
    v, nu = stat.v.copy(), stat.nu
    m = sc.node_count
    rows = []
    for t in range(1, sc.steps + 1):
        o = run.outers(t)
        v = _resym(v + o.sum(axis=0))
        nu += float(m)
        theta, sigma2 = _stacked_estimates(v[None, ...], np.array([nu]))
        theta_all = np.broadcast_to(theta[0], (m, sc.n))
        sigma2_all = np.full(m, sigma2[0])
        rows.append(_metrics_row(t, LABEL_CENTRALIZED, theta_all, sigma2_all, run.theta_true))
    return rows, {0: nig.NigVForm(v=v.copy(), nu=nu)}


def _fast_diffusion(run: _FastRun, cmat: np.ndarray, amat: np.ndarray) -> tuple:
    sc = run.sc
    v, nu = run.prior_v.copy(), run.prior_nu.copy()
    rows = []
    for t in range(1, sc.steps + 1):
        o = run.outers(t)
        if sc.incremental_mode == "self-only":
            v = _resym(v + o)
        else:
            v = _resym(v + np.einsum("kl,lij->kij", cmat, o))
        nu = nu + 1.0
        theta, sigma2 = _stacked_estimates(v, nu)
        rows.append(_metrics_row(t, LABEL_DIFFUSION_INCREMENTAL, theta, sigma2, run.theta_true))

        if sc.spatial_mode == "estimate-combination":
            theta_s = amat @ theta
            sigma2_s = amat @ sigma2
        elif sc.spatial_mode == "statistic-averaging":
            v = _resym(np.einsum("kl,lij->kij", amat, v))
            nu = amat @ nu
            theta_s, sigma2_s = _stacked_estimates(v, nu)
        else:
            theta_s, sigma2_s = theta, sigma2
        rows.append(_metrics_row(t, LABEL_DIFFUSION_SPATIAL, theta_s, sigma2_s, run.theta_true))
    return rows, _unstack_vforms(v, nu)


# ---------------------------------------------------------------------------
# Sequential path: per-node operations, bit-reproducible.
# ---------------------------------------------------------------------------


def _sequential_noncooperative(sc: Scenario) -> tuple:
    stats = {k: nig.nig_init(sc.n, eps=sc.eps, nu0=sc.nu0_effective) for k in range(1, sc.node_count + 1)}
    rows = []
    for t in range(1, sc.steps + 1):
        data = generate_step_data(sc, t)
        theta, sigma2 = [], []
        for k in sorted(stats):
            stats[k] = nig.bayes_update(stats[k], data[k])
            theta.append(nig.point_estimate_theta(stats[k]))
            sigma2.append(nig.estimate_noise_variance(stats[k]))
        rows.append(
            _metrics_row(t, LABEL_NONCOOPERATIVE, np.stack(theta), np.array(sigma2), np.asarray(sc.theta_true))
        )
    return rows, dict(stats)


def _sequential_centralized(sc: Scenario) -> tuple:
    stat = nig.nig_init(sc.n, eps=sc.eps, nu0=sc.nu0_effective)
    m = sc.node_count
    rows = []
    for t in range(1, sc.steps + 1):
        data = generate_step_data(sc, t)
        for k in sorted(data):
            stat = nig.bayes_update(stat, data[k])
        theta = nig.point_estimate_theta(stat)
        sigma2 = nig.estimate_noise_variance(stat)
        rows.append(
            _metrics_row(
                t,
                LABEL_CENTRALIZED,
                np.broadcast_to(theta, (m, sc.n)),
                np.full(m, sigma2),
                np.asarray(sc.theta_true),
            )
        )
    return rows, {0: stat}


def _sequential_diffusion(sc: Scenario, net: Network, cfg: diffusion.DiffusionConfig) -> tuple:
    states = diffusion.init_node_states(
        net, sc.n, eps=sc.eps, nu0=sc.nu0_effective, track_cform=(sc.form == "c")
    )
    rows = []
    for t in range(1, sc.steps + 1):
        data = generate_step_data(sc, t)
        states = diffusion.incremental_phase(states, net, cfg, data)
        rows.append(_row_from_states(t, LABEL_DIFFUSION_INCREMENTAL, states, sc.theta_true))
        states = diffusion.spatial_phase(states, net, cfg)
        rows.append(_row_from_states(t, LABEL_DIFFUSION_SPATIAL, states, sc.theta_true))
    return rows, {k: s.stats for k, s in states.items()}


# ---------------------------------------------------------------------------
# Public runners.
# ---------------------------------------------------------------------------


def _diffusion_config(sc: Scenario, net: Network) -> diffusion.DiffusionConfig:
    c, a = scenario_weights(sc, net)
    cfg = diffusion.DiffusionConfig(
        incremental_weights=c,
        spatial_weights=a,
        spatial_mode=sc.spatial_mode,
        incremental_mode=sc.incremental_mode,
        form=sc.form,
    )
    cfg.validate_for(net)
    return cfg


def _unstack_vforms(v: np.ndarray, nu: np.ndarray) -> dict:
    return {k: nig.NigVForm(v=v[k - 1].copy(), nu=float(nu[k - 1])) for k in range(1, len(nu) + 1)}


def run_noncooperative(
    sc: Scenario,
    sequential: bool = False,
    state_sink: dict | None = None,
    _shared: "_FastRun | None" = None,
) -> list:
    """Every node estimates alone from its own data (plain conjugate recursion)."""
    if sequential:
        rows, final = _sequential_noncooperative(sc)
    else:
        rows, final = _fast_noncooperative(_shared or _FastRun(sc))
    if state_sink is not None:
        state_sink["noncooperative"] = final
    return rows


def run_centralized(
    sc: Scenario,
    sequential: bool = False,
    state_sink: dict | None = None,
    _shared: "_FastRun | None" = None,
) -> list:
    """One estimator sees all nodes' data each step (full-information bound).

    Data enter with unit weight, so after t steps the degrees of freedom
    are nu0 + M*t; the single estimate is reported for every node. The
    final statistic is stored in state sinks under node key 0.
    """
    if sequential:
        rows, final = _sequential_centralized(sc)
    else:
        rows, final = _fast_centralized(_shared or _FastRun(sc))
    if state_sink is not None:
        state_sink["centralized"] = final
    return rows


def run_diffusion(
    sc: Scenario,
    sequential: bool = False,
    state_sink: dict | None = None,
    _shared: "_FastRun | None" = None,
) -> list:
    """Full two-phase pipeline; emits rows after each phase of every step.

    Runs asking for the rank-one (C) representation always take the
    sequential per-node path.
    """
    net = _shared.net if _shared is not None and _shared.net is not None else scenario_network(sc)
    cfg = _diffusion_config(sc, net)
    if sequential or sc.form == "c":
        rows, final = _sequential_diffusion(sc, net, cfg)
    else:
        run = _shared or _FastRun(sc, net)
        cmat = cfg.incremental_weights.to_matrix(sc.node_count)
        amat = cfg.spatial_weights.to_matrix(sc.node_count)
        rows, final = _fast_diffusion(run, cmat, amat)
    if state_sink is not None:
        state_sink["diffusion"] = final
    return rows


_RUNNERS = {
    "noncooperative": run_noncooperative,
    "diffusion": run_diffusion,
    "centralized": run_centralized,
}


def run_scenario(sc: Scenario, sequential: bool = False, state_sink: dict | None = None) -> list:
    """Run every configured pipeline; rows ordered by (t, pipeline)."""
    shared = None
    if not sequential:
        net = scenario_network(sc) if "diffusion" in sc.pipelines else None
        shared = _FastRun(sc, net, cache=len(sc.pipelines) > 1)
    rows = []
    for pipeline in sc.pipelines:
        rows.extend(
            _RUNNERS[pipeline](sc, sequential=sequential, state_sink=state_sink, _shared=shared)
        )
    rows.sort(key=lambda r: (r.t, r.pipeline))
    return rows


def seed_batch(sc: Scenario, count: int) -> list:
    """Scenarios for a seed batch: consecutive seeds starting at sc.seed."""
    if count < 1:
        raise ConfigError(f"seed batch size must be >= 1, got {count}")
    return [replace(sc, seed=sc.seed + i) for i in range(count)]
