# -*- coding: utf-8 -*-
"""Evaluation episodes and their metrics."""
import csv
import dataclasses
import logging
import os
import time

from tqdm import tqdm

from ..errors import ContractViolation
from ..utils import derive_seed, ensure_dir

logger = logging.getLogger(__name__)

MPS_TO_KMH = 3.6
METRICS_HEADER = ['episode', 'success', 'laps', 'off_road', 'mean_speed_kmh', 'steps']


@dataclasses.dataclass(frozen=True)
class EpisodeResult:
    episode: int
    success: bool
    laps: int
    off_road: bool
    steps: int
    on_track_speed_sum: float
    on_track_steps: int

    @property
    def mean_speed_kmh(self):
        if self.on_track_steps == 0:
            return 0.0
        return MPS_TO_KMH * self.on_track_speed_sum / self.on_track_steps


@dataclasses.dataclass(frozen=True)
class Metrics:
    """Aggregated evaluation results.

    ``avg_speed_kmh`` pools every on-track step of every episode.
    """
    success_rate: float
    avg_speed_kmh: float
    off_road_events: int
    laps_completed: int
    wall_time: float
    episodes: tuple = ()

    def __post_init__(self):
        if not 0.0 <= self.success_rate <= 1.0:
            raise ContractViolation(f"success_rate must be in [0, 1], got {self.success_rate}")


def metrics_from_episodes(results, wall_time=0.0):
    if not results:
        raise ContractViolation("metrics need at least one episode")
    steps = sum(r.on_track_steps for r in results)
    speed_sum = sum(r.on_track_speed_sum for r in results)
    return Metrics(success_rate=sum(1 for r in results if r.success) / len(results),
                   avg_speed_kmh=MPS_TO_KMH * speed_sum / steps if steps else 0.0,
                   off_road_events=sum(1 for r in results if r.off_road),
                   laps_completed=sum(r.laps for r in results),
                   wall_time=float(wall_time), episodes=tuple(results))


def run_episode(env, agent, episode, seed, laps):
    """Drive one evaluation episode; success means ``laps`` laps without leaving the road."""
    agent.reset()
    obs, info = env.reset(seed=derive_seed(seed, 'evaluate', episode))
    dt = env.dynamics.dt
    speed_sum, on_track, steps = 0.0, 0, 0
    while True:
        decision = agent.act(obs, info['state'].speed)
        obs, _, terminated, truncated, info = env.step(decision.action)
        steps += 1
        speed = info['state'].speed
        agent.advance(speed, dt)
        if not info['off_road']:
            speed_sum += speed
            on_track += 1
        if terminated or truncated:
            break
    completed = env.laps
    return EpisodeResult(episode=episode, success=not terminated and completed >= laps,
                         laps=min(completed, laps), off_road=bool(terminated), steps=steps,
                         on_track_speed_sum=speed_sum, on_track_steps=on_track)


def evaluate_agent(env, agent, n_episodes, seed, laps, clock=time.monotonic):
    """Run ``n_episodes`` episodes in episode order and aggregate them.

    :param env: environment with ``lap_quota == laps`` and no ground-truth masks
    :rtype: Metrics
    """
    if env.provide_masks:
        raise ContractViolation("evaluation environments must not provide ground-truth masks")
    started = clock()
    results = []
    for episode in tqdm(range(n_episodes), desc='evaluation', disable=None, leave=False):
        result = run_episode(env, agent, episode, seed, laps)
        logger.info("evaluation episode %d: success=%s laps=%d steps=%d %.1f km/h",
                    episode, result.success, result.laps, result.steps, result.mean_speed_kmh)
        results.append(result)
    return metrics_from_episodes(results, clock() - started)


def metrics_table(metrics):
    lines = [
        f"success_rate     {metrics.success_rate:.4f}",
        f"avg_speed_kmh    {metrics.avg_speed_kmh:.3f}",
        f"off_road_events  {metrics.off_road_events}",
        f"laps_completed   {metrics.laps_completed}",
        f"episodes         {len(metrics.episodes)}",
    ]
    return '\n'.join(lines) + '\n'


def write_metrics(metrics, directory):
    """Write ``metrics.csv`` and ``metrics.txt``; wall time is left to :func:`write_timings`."""
    ensure_dir(directory)
    csv_path = os.path.join(directory, 'metrics.csv')
    with open(csv_path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(METRICS_HEADER)
        for r in metrics.episodes:
            writer.writerow([r.episode, int(r.success), r.laps, int(r.off_road), f"{r.mean_speed_kmh:.6f}", r.steps])
        writer.writerow(['all', f"{metrics.success_rate:.6f}", metrics.laps_completed, metrics.off_road_events,
                         f"{metrics.avg_speed_kmh:.6f}", sum(r.steps for r in metrics.episodes)])
    txt_path = os.path.join(directory, 'metrics.txt')
    with open(txt_path, 'w', encoding='utf-8') as f:
        f.write(metrics_table(metrics))
    return [csv_path, txt_path]


def write_timings(path, timings):
    with open(path, 'w', encoding='utf-8') as f:
        for name, seconds in timings.items():
            f.write(f"{name} {seconds:.3f}\n")
    return path
