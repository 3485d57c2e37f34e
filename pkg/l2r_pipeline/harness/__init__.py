from .artifacts import ArtifactStore, stage_key
from .evaluate import EpisodeResult, Metrics, evaluate_agent, metrics_from_episodes, write_metrics
from .pipeline import STAGES, STAGE_NAMES, Pipeline, cmd_adapt, cmd_evaluate, cmd_pipeline
from .report import cmd_report

__all__ = [
    'ArtifactStore', 'stage_key',
    'EpisodeResult', 'Metrics', 'evaluate_agent', 'metrics_from_episodes', 'write_metrics',
    'STAGES', 'STAGE_NAMES', 'Pipeline', 'cmd_adapt', 'cmd_evaluate', 'cmd_pipeline', 'cmd_report',
]
