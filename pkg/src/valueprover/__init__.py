"""Reward-free value-guided proof search in a toy Peano equational prover.

The package is organized bottom-up:

- terms / env: the deterministic proving environment (terms, obligations,
  tactics, scripts, replay, sub-proof extraction)
- oracle: brute-force shortest proofs and optimal values for verification
- corpus: theorem generation, persistence and splitting
- predictor: the supervised tactic predictor that bounds the action space
- encoder: obligation encodings (hashing by default, autoencoder optional)
- value_model: the value estimator, its multiplicative update targets and
  the three experience buffers
- search: greedy / DFS / best-first / A* proof search
- trainer: pretraining, the demonstration curriculum, the RL loop and the
  actor/learner distributed mode
- reports, cli: evaluation reports and the command-line interface
"""

from .env import (
    Hyperstate,
    Obligation,
    ProofScript,
    Tactic,
    TacticError,
    Theorem,
    apply_tactic,
    extract_subproof_tasks,
    format_obligation,
    parse_obligation,
    parse_script,
    parse_tactic,
    replay_script,
    step_hyperstate,
)
from .terms import Term, parse_term, format_term, normalize
from .oracle import OracleResult, optimal_value, shortest_proof
from .corpus import CorpusEntry, CorpusSplit, generate_corpus, load_corpus, save_corpus, split_corpus
from .predictor import Predictor, TacticPrediction, featurize, predict_top_n, train_predictor
from .encoder import Encoding, encode_auto, encode_hashed, train_autoencoder
from .value_model import (
    NegativeBuffer,
    ReplayBuffer,
    Transition,
    TrueTargetBuffer,
    ValueModel,
    bellman_target,
    pretrain,
    steps_estimate,
)
from .search import (
    SearchNode,
    SearchResult,
    astar_search,
    best_first_search,
    dfs_search,
    greedy_search,
)
from .trainer import TrainerConfig, TrainingTask, demonstration_schedule, prepare_tasks, run_episode, train

__version__ = "0.1.0"
