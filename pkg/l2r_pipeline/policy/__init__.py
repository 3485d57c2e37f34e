from .returns import Trajectory, discounted_returns
from .buffers import ValueBuffer, CorrectionBuffer, build_value_buffer, classify_safety, correction_action
from .agent import Perception, AgentDecision, RaceAgent, agent_act
from .rollouts import CorrectionRecorder, collect_base_rollouts, explore_corrections

__all__ = [
    'Trajectory', 'discounted_returns',
    'ValueBuffer', 'CorrectionBuffer', 'build_value_buffer', 'classify_safety', 'correction_action',
    'Perception', 'AgentDecision', 'RaceAgent', 'agent_act',
    'CorrectionRecorder', 'collect_base_rollouts', 'explore_corrections',
]
