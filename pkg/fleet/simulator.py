"""Finite-N discrete-event simulator of least-workload dispatching.

Servers are represented only by the time at which their current work runs
out (FCFS and work conserving), so a job's waiting time is the workload of
its server on arrival and no departure events are needed. Jobs arrive as a
Poisson process of rate lambda N (batches of K at rate lambda N / K for
LL(d,K)) and carry exponential(1) work.
"""

import logging
import math
from functools import partial

import numpy as np
from scipy import stats

from cavity.ode import mean_waiting
from core.exceptions import InvalidArgumentError, UnsupportedPolicyError
from core.parallel import parallel_map
from fleet.models import (
    CcdfSample,
    ConvergenceRow,
    ReplicationResult,
    SimConfig,
    SimReport,
    WorkBalance,
)
from fleet.streams import ReplicationStream
from policies.models import Discipline, PolicyKind, PolicySpec

logger = logging.getLogger(__name__)

N_BATCHES = 10
CONFIDENCE = 0.95


def check_supported(policy: PolicySpec) -> None:
    """Raise UnsupportedPolicyError for policies the simulator does not model."""
    if policy.kind in (PolicyKind.RED_D, PolicyKind.MEM_LL_D):
        raise UnsupportedPolicyError(
            f"The simulator does not model {policy.label}", details={"policy": policy.label}
        )
    if policy.discipline == Discipline.QUEUE_LENGTH:
        raise UnsupportedPolicyError(
            f"The simulator ranks servers by workload only, got {policy.label}",
            details={"policy": policy.label},
        )


def _probe_counts(policy: PolicySpec) -> tuple[list[int], list[float]]:
    if policy.kind == PolicyKind.LL_MIX:
        assert policy.choices is not None
        counts = [d for d, _ in policy.choices]
        cumulative = np.cumsum([p for _, p in policy.choices]).tolist()
        cumulative[-1] = 1.0
        return counts, cumulative
    assert policy.d is not None
    return [policy.d], [1.0]


def run_replication(config: SimConfig, replication: int) -> ReplicationResult:
    """Simulate one replication on its own random stream."""
    policy = config.policy
    rng = ReplicationStream(config.seed, replication)
    n = config.n_servers
    k = policy.batch_size
    rate = config.lam * n / k
    counts, cumulative = _probe_counts(policy)
    window = config.horizon - config.warmup
    points = config.ccdf_points

    finish = [0.0] * n
    idle_time = 0.0
    arrived_work = 0.0
    batch_sums = [0.0] * N_BATCHES
    batch_counts = [0] * N_BATCHES
    ccdf_totals = np.zeros(len(points))
    n_snapshots = 0
    events = 0

    def snapshot(now: float) -> None:
        nonlocal ccdf_totals, n_snapshots
        workloads = np.asarray(finish) - now
        ccdf_totals = ccdf_totals + np.array([np.mean(workloads > w) for w in points])
        n_snapshots += 1

    t = 0.0
    while True:
        t += rng.exponential() / rate
        if t > config.horizon:
            break
        if len(counts) == 1:
            d = counts[0]
        else:
            u = rng.uniform()
            d = counts[next(i for i, c in enumerate(cumulative) if u < c)]
        probes = rng.distinct(n, d)
        if config.debug:
            assert len(set(probes)) == d, f"repeated probe in {probes}"

        loads = [max(finish[i] - t, 0.0) for i in probes]
        if k == 1:
            targets = [loads.index(min(loads))]
        else:
            # probes are in random order, so a stable sort breaks ties uniformly
            targets = sorted(range(d), key=loads.__getitem__)[:k]

        measured = t >= config.warmup
        if measured:
            batch = min(int((t - config.warmup) / window * N_BATCHES), N_BATCHES - 1)
        for j in targets:
            server = probes[j]
            size = rng.exponential()
            if finish[server] < t:
                idle_time += t - finish[server]
                finish[server] = t
            finish[server] += size
            arrived_work += size
            if measured:
                batch_sums[batch] += loads[j]
                batch_counts[batch] += 1

        if measured:
            events += 1
            if events % config.snapshot_every == 0:
                snapshot(t)

    if n_snapshots == 0:
        snapshot(config.horizon)

    horizon = config.horizon
    remaining = math.fsum(max(f - horizon, 0.0) for f in finish)
    idle_time += math.fsum(max(horizon - f, 0.0) for f in finish)
    n_jobs = sum(batch_counts)
    return ReplicationResult(
        replication=replication,
        mean_wait=math.fsum(batch_sums) / n_jobs if n_jobs else math.nan,
        n_jobs=n_jobs,
        batch_sums=batch_sums,
        batch_counts=batch_counts,
        ccdf=(ccdf_totals / n_snapshots).tolist(),
        n_snapshots=n_snapshots,
        arrived_work=arrived_work,
        busy_time=n * horizon - idle_time,
        remaining_work=remaining,
    )


def _spread(results: list[ReplicationResult]) -> tuple[float, float, int]:
    """Mean, standard error and degrees of freedom.

    Across replications when there are several, otherwise from batch means
    of the single replication.
    """
    if len(results) > 1:
        means = np.array([r.mean_wait for r in results])
    else:
        only = results[0]
        means = np.array(
            [s / c for s, c in zip(only.batch_sums, only.batch_counts, strict=True) if c > 0]
        )
    if means.size < 2:
        return float(np.mean(means)) if means.size else math.nan, 0.0, 0
    stderr = float(np.std(means, ddof=1) / math.sqrt(means.size))
    return float(np.mean(means)), stderr, means.size - 1


def simulate(config: SimConfig, max_workers: int | None = None) -> SimReport:
    """Run all replications of ``config`` and aggregate them.

    Identical configurations give identical reports whatever the worker count.

    Raises:
        UnsupportedPolicyError: For Red(d), memory LL(d) and queue-length ranking
    """
    check_supported(config.policy)
    logger.info(
        f"Simulating {config.policy.label} at lambda={config.lam} with N={config.n_servers}, "
        f"{config.replications} replication(s) of horizon {config.horizon}"
    )
    results = parallel_map(
        partial(run_replication, config), range(config.replications), max_workers
    )

    mean, stderr, dof = _spread(results)
    if dof > 0:
        half = float(stats.t.ppf(0.5 + CONFIDENCE / 2, dof)) * stderr
    else:
        half = 0.0

    arrived = math.fsum(r.arrived_work for r in results)
    busy = math.fsum(r.busy_time for r in results)
    remaining = math.fsum(r.remaining_work for r in results)
    balance = WorkBalance(
        arrived_work=arrived,
        busy_time=busy,
        remaining_work=remaining,
        relative_error=abs(arrived - busy - remaining) / arrived if arrived else 0.0,
    )

    snapshots = sum(r.n_snapshots for r in results)
    ccdf = [
        CcdfSample(
            w=w,
            fraction=min(
                max(sum(r.ccdf[i] * r.n_snapshots for r in results) / snapshots, 0.0), 1.0
            ),
        )
        for i, w in enumerate(config.ccdf_points)
    ]
    return SimReport(
        policy=config.policy.label,
        lam=config.lam,
        n_servers=config.n_servers,
        mean_wait=mean,
        stderr=stderr,
        ci_low=mean - half,
        ci_high=mean + half,
        n_jobs=sum(r.n_jobs for r in results),
        replication_means=[r.mean_wait for r in results],
        empirical_ccdf=ccdf,
        work_balance=balance,
        seed_echo=config.seed,
        replications=config.replications,
        horizon=config.horizon,
        warmup=config.warmup,
    )


def convergence_study(
    config: SimConfig, n_list: list[int], max_workers: int | None = None
) -> list[ConvergenceRow]:
    """Simulate ``config`` at each fleet size and compare with the mean-field E[W].

    Raises:
        InvalidArgumentError: If some N is smaller than the largest probe count
    """
    check_supported(config.policy)
    too_small = [n for n in n_list if n < max(config.policy.d_max, 2)]
    if too_small:
        raise InvalidArgumentError(
            f"Fleet sizes {too_small} are below the probe count {config.policy.d_max}",
            details={"n_list": list(n_list)},
        )
    mean_field = mean_waiting(config.policy, config.lam)
    rows = []
    for n in sorted(n_list):
        report = simulate(config.model_copy(update={"n_servers": n}), max_workers)
        rows.append(
            ConvergenceRow(
                n_servers=n,
                mean_wait=report.mean_wait,
                stderr=report.stderr,
                mean_field=mean_field,
                gap=abs(report.mean_wait - mean_field),
            )
        )
        logger.info(f"N={n}: E[W]={report.mean_wait:.6g} (mean field {mean_field:.6g})")
    return rows
