from .track import TrackSpec, generate_track, make_stadium_track, load_track_csv, save_track_csv
from .dynamics import StepResult, compute_reward, speed_controller, step
from .camera import Camera, render_camera
from .env import RaceEnv

__all__ = [
    'TrackSpec', 'generate_track', 'make_stadium_track', 'load_track_csv', 'save_track_csv',
    'StepResult', 'compute_reward', 'speed_controller', 'step',
    'Camera', 'render_camera', 'RaceEnv',
]
