from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .estimator import PPODefender, run_episode
from .network import MLP
from .ppo import PpoConfig, RolloutBuffer, gae, policy_forward, ppo_update, sample_action, value_forward
