from .config import ExperimentConfig, dumps, load_config, loads, profile_defaults
from .runner import compare, evaluate, run_baseline, train
