# -*- coding: utf-8 -*-
"""Per-distance-segment speed adaptation.

The agent keeps a target speed for every fixed-length stretch of track,
indexed by the distance it integrated from its own speed. Surviving a run
raises the targets of the segments it drove through; failing lowers the
segments around the failure point.
"""
import csv
import dataclasses
import logging
import math
import time
from typing import Optional

from tqdm import tqdm

from .configs import AdaptConfig
from .domain import SafetyLabel
from .errors import AdaptationError, ContractViolation
from .utils import clamp, derive_seed

logger = logging.getLogger(__name__)

SURVIVED = 'survived'
OFF_ROAD = 'off_road'


def segment_count_for(track_length, segment_length):
    return max(1, int(math.ceil(track_length / segment_length)))


@dataclasses.dataclass(frozen=True)
class SegmentSpeedModel:
    segment_length: float
    targets: tuple
    v_init: float
    v_min: float
    v_max: float
    delta_up: float
    delta_down: float
    track_length: Optional[float] = None

    def __post_init__(self):
        if not self.targets:
            raise ContractViolation("a speed model needs at least one segment")
        if self.track_length is None:
            object.__setattr__(self, "track_length", self.segment_count * self.segment_length)
        if not self.track_length > 0:
            raise ContractViolation(f"track_length must be > 0, got {self.track_length}")
        if self.segment_count != segment_count_for(self.track_length, self.segment_length):
            raise ContractViolation(f"{self.segment_count} segments do not cover a {self.track_length:.3f} m track "
                                    f"in {self.segment_length} m segments")
        if any(not self.v_min <= t <= self.v_max for t in self.targets):
            raise ContractViolation(f"targets must lie in [{self.v_min}, {self.v_max}]")

    @classmethod
    def fresh(cls, track_length, cfg=None):
        """Every segment at ``v_init``; the last segment may be partial."""
        cfg = cfg or AdaptConfig()
        count = segment_count_for(track_length, cfg.segment_length)
        return cls(segment_length=cfg.segment_length, targets=(cfg.v_init,) * count, v_init=cfg.v_init,
                   v_min=cfg.v_min, v_max=cfg.v_max, delta_up=cfg.delta_up, delta_down=cfg.delta_down,
                   track_length=float(track_length))

    @property
    def segment_count(self):
        return len(self.targets)

    def segment_index(self, distance):
        """Segment holding ``distance``; every lap restarts at segment 0."""
        lap_position = math.fmod(distance, self.track_length)
        return min(int(math.floor(lap_position / self.segment_length)), self.segment_count - 1)

    def target_at(self, distance):
        return target_speed_at(self, distance)

    def with_targets(self, targets):
        return dataclasses.replace(self, targets=tuple(float(t) for t in targets))


@dataclasses.dataclass(frozen=True)
class TraceStep:
    speed: float
    dt: float
    safety: SafetyLabel


@dataclasses.dataclass(frozen=True)
class RunTrace:
    steps: tuple
    outcome: str
    failure_distance: Optional[float] = None

    def __post_init__(self):
        if self.outcome not in (SURVIVED, OFF_ROAD):
            raise ContractViolation(f"unknown run outcome {self.outcome!r}")
        if (self.failure_distance is not None) != (self.outcome == OFF_ROAD):
            raise ContractViolation("failure_distance is required exactly for off-road runs")


@dataclasses.dataclass(frozen=True)
class RunTelemetry:
    run: int
    outcome: str
    failure_distance: Optional[float]
    mean_speed: float
    steps: int


def estimate_distance(prefix):
    """Distance integrated from ``(speed, dt)`` pairs, without any track knowledge."""
    total = 0.0
    for speed, dt in prefix:
        if speed < 0:
            raise ContractViolation(f"speed must be >= 0, got {speed}")
        total += speed * dt
    return total


def target_speed_at(model, distance):
    """Target speed of the segment containing ``distance``, wrapping every lap."""
    if distance < 0:
        raise ContractViolation(f"distance must be >= 0, got {distance}")
    return model.targets[model.segment_index(distance)]


def update_model(model, trace, failure_window=1):
    """Raise surviving segments by ``delta_up`` and lower failing ones by ``delta_down``.

    On failure, segments fully traversed before the failure point rise and
    the ``failure_window`` segments ending at the failing one fall;
    lowering wins when both apply. Segments never reached do not change.

    :type model: SegmentSpeedModel
    :type trace: RunTrace
    :rtype: SegmentSpeedModel
    """
    n = model.segment_count
    if trace.outcome == SURVIVED:
        raised, lowered = set(range(n)), set()
    else:
        failing = model.segment_index(trace.failure_distance)
        raised = set(range(n)) if trace.failure_distance >= model.track_length else set(range(failing))
        lowered = {(failing - j) % n for j in range(failure_window)}
    targets = list(model.targets)
    for i in range(n):
        if i in lowered:
            targets[i] = clamp(targets[i] - model.delta_down, model.v_min, model.v_max)
        elif i in raised:
            targets[i] = clamp(targets[i] + model.delta_up, model.v_min, model.v_max)
    return model.with_targets(targets)


def drive_run(env, agent, seed):
    """One adaptation episode; returns the run's :class:`RunTrace`."""
    agent.reset()
    obs, info = env.reset(seed=seed)
    dt = env.dynamics.dt
    steps = []
    while True:
        decision = agent.act(obs, info['state'].speed)
        obs, _, terminated, truncated, info = env.step(decision.action)
        speed = info['state'].speed
        agent.advance(speed, dt)
        steps.append(TraceStep(speed, dt, decision.label))
        if terminated or truncated:
            break
    if terminated:
        return RunTrace(tuple(steps), OFF_ROAD, estimate_distance((s.speed, s.dt) for s in steps))
    return RunTrace(tuple(steps), SURVIVED)


def run_adaptation(env, agent, model, n_runs, wall_budget, seed, failure_window=1, clock=time.monotonic):
    """Repeat runs, updating the speed model after each, within both budgets.

    The wall-clock budget is checked before every run, so the last run may
    overshoot it by one episode.

    :param env: environment with a lap quota of one
    :param agent: :class:`~l2r_pipeline.policy.agent.RaceAgent`; its speed model is replaced run by run
    :return: (final model, list of :class:`RunTelemetry`)
    :raises AdaptationError: when runs were requested but none completed
    """
    if n_runs <= 0:
        return model, []
    telemetry = []
    started = clock()
    for run in tqdm(range(n_runs), desc='adaptation', disable=None, leave=False):
        if clock() - started >= wall_budget:
            logger.info("adaptation budget of %.0f s exhausted after %d runs", wall_budget, run)
            break
        agent.speed_model = model
        trace = drive_run(env, agent, derive_seed(seed, 'adapt', run))
        model = update_model(model, trace, failure_window)
        speeds = [s.speed for s in trace.steps]
        telemetry.append(RunTelemetry(run=run, outcome=trace.outcome, failure_distance=trace.failure_distance,
                                      mean_speed=sum(speeds) / len(speeds) if speeds else 0.0,
                                      steps=len(trace.steps)))
        logger.info("adaptation run %d: %s after %d steps, mean speed %.2f m/s",
                    run, trace.outcome, len(trace.steps), telemetry[-1].mean_speed)
    if not telemetry:
        raise AdaptationError("no adaptation run completed within the budget", telemetry)
    agent.speed_model = model
    return model, telemetry


def save_speed_model(model, path):
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['segment_index', 'target_speed_mps'])
        for i, target in enumerate(model.targets):
            writer.writerow([i, repr(float(target))])


def load_speed_model(path, cfg=None, track_length=None):
    """Read a model written by :func:`save_speed_model`.

    The file holds only the targets; ``track_length`` defaults to a whole
    number of segments and must be given for a track whose last segment is partial.
    """
    cfg = cfg or AdaptConfig()
    with open(path, 'r', newline='', encoding='utf-8') as f:
        rows = list(csv.DictReader(f))
    targets = [0.0] * len(rows)
    for row in rows:
        targets[int(row['segment_index'])] = float(row['target_speed_mps'])
    return SegmentSpeedModel(segment_length=cfg.segment_length, targets=tuple(targets), v_init=cfg.v_init,
                             v_min=cfg.v_min, v_max=cfg.v_max, delta_up=cfg.delta_up,
                             delta_down=cfg.delta_down, track_length=track_length)


def save_telemetry(telemetry, path):
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['run', 'outcome', 'failure_distance_m', 'mean_speed_mps', 'steps'])
        for t in telemetry:
            writer.writerow([t.run, t.outcome, '' if t.failure_distance is None else repr(t.failure_distance),
                             repr(float(t.mean_speed)), t.steps])
