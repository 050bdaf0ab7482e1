"""The reinforcement-learning loop around the value model.

Tasks are the sub-proofs of the training corpus, filtered to the ones the
predictor can reproduce and to a configurable length band. Each task is
learned through a demonstration curriculum: the agent replays ever-shorter
prefixes of the ground-truth script and finishes the rest epsilon-greedily.
Episode transitions feed a replay buffer; fully discharged obligations
update the true-target buffer (minimum known length); obligations where
every prediction errors land in the negative buffer. Batches mix the three
sources and regress on bootstrapped targets.

Single-actor runs are bit-reproducible per seed. The distributed mode keeps
one learner owning the parameters and all buffers, with actor threads that
run episodes on disjoint task partitions against immutable parameter
snapshots and communicate only through queues.
"""

from __future__ import annotations

import json
import queue
import random
import threading
from dataclasses import asdict, dataclass, field

from .corpus import CorpusSplit
from .encoder import hashed_encoder
from .env import Hyperstate, Obligation, ProofScript, TacticError, apply_tactic
from .oracle import reproducible_under_predictor
from .predictor import Predictor, predict_top_n, predictor_from_dict, predictor_to_dict
from .search import ValueScorer
from .value_model import (
    NegativeBuffer,
    ReplayBuffer,
    Transition,
    TrueTargetBuffer,
    ValueModel,
    bellman_target,
    pretrain,
    value_model_from_dict,
    value_model_to_dict,
)

__all__ = [
    "TrainingTask",
    "TrainerConfig",
    "TrainingReport",
    "prepare_tasks",
    "demonstration_schedule",
    "run_episode",
    "train",
    "distributed_run",
    "save_checkpoint",
    "load_checkpoint",
    "CHECKPOINT_VERSION",
]

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class TrainingTask:
    obligation: Obligation
    demo_script: ProofScript

    @property
    def demo_length(self) -> int:
        return len(self.demo_script.steps)


@dataclass
class TrainerConfig:
    gamma: float = 0.9
    width: int = 5
    seed: int = 0
    test_ratio: float = 0.25
    # epsilon schedule: linear from start to end over decay_episodes
    # (defaulting to half the run), then constant.
    epsilon_start: float = 1.0
    epsilon_end: float = 0.1
    epsilon_decay_episodes: int | None = None
    episode_budget: int = 20
    episodes_per_prefix: int = 2
    rl_epochs: int = 1
    updates_per_episode: int = 4
    batch_size: int = 32
    replay_fraction: float = 0.5
    true_fraction: float = 0.25
    negative_fraction: float = 0.25
    replay_capacity: int = 4096
    learning_rate: float = 0.02
    sync_interval: int = 16
    actor_count: int = 1
    # tasks with demo length <= min_drop or >= max_drop are filtered out
    min_drop_length: int = 2
    max_drop_length: int = 6
    subproof_tasks: bool = True
    pretrain_epochs: int = 800
    pretrain_learning_rate: float = 0.02
    validation_tasks: int = 8
    encoder_dim: int = 64
    encoder_salt: int = 0
    hidden_dim: int = 32
    predictor_epochs: int = 250
    predictor_learning_rate: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.width < 1:
            raise ValueError("width must be at least 1")
        if self.actor_count < 1:
            raise ValueError("actor_count must be at least 1")
        fractions = (self.replay_fraction, self.true_fraction, self.negative_fraction)
        if any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
            raise ValueError("batch mix fractions must be nonnegative and sum to 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainerConfig":
        return cls(**data)


@dataclass
class TrainingReport:
    config: dict
    actor_count: int
    predictor_losses: list[float]
    pretrain_losses: list[float]
    episodes: int = 0
    updates: int = 0
    update_losses: list[float] = field(default_factory=list)
    buffer_sizes: dict = field(default_factory=dict)
    validation_success: list[float] = field(default_factory=list)
    task_count: int = 0
    # canonical forms of the dead-end obligations collected during training
    negative_obligations: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def prepare_tasks(split: CorpusSplit, predictor: Predictor, n: int, config: TrainerConfig) -> list[TrainingTask]:
    """Sub-proof tasks of the training entries, after the three filters:
    predictor reproducibility, too-short demos and too-long demos.

    Test entries are never filtered. With subproof_tasks off, only the
    whole-theorem task of each entry is considered.
    """
    from .env import extract_subproof_tasks

    tasks = []
    seen: set[tuple[str, str]] = set()
    for entry in split.train:
        if config.subproof_tasks:
            subproofs = extract_subproof_tasks(entry.theorem, entry.proof)
        else:
            initial = Hyperstate((entry.theorem.statement,)).first
            subproofs = [(initial, entry.proof)]
        for obligation, script in subproofs:
            length = len(script.steps)
            if length <= config.min_drop_length or length >= config.max_drop_length:
                continue
            if not reproducible_under_predictor((obligation, script), predictor, n):
                continue
            key = (obligation.canonical(), str(script))
            if key in seen:
                continue
            seen.add(key)
            tasks.append(TrainingTask(obligation, script))
    return tasks


def demonstration_schedule(task: TrainingTask) -> list[int]:
    """Prefix lengths for learning by demonstration: the agent first supplies
    only the last step, then the last two, down to the whole script."""
    if task.demo_length < 1:
        raise ValueError("demo script must be nonempty")
    return list(range(task.demo_length - 1, -1, -1))


def run_episode(
    task: TrainingTask,
    model: ValueModel,
    predictor: Predictor,
    config: TrainerConfig,
    demo_prefix_length: int,
    rng: random.Random,
    epsilon: float,
) -> tuple[list[Transition], list[tuple[Obligation, int]]]:
    """One episode on the task: replay the demonstration prefix, then act
    epsilon-greedily among the non-erroring top-n tactics.

    Returns the transitions (dead ends flagged) and every obligation the
    episode fully discharged, with the number of tactics its discharge took.
    """
    if not 0 <= demo_prefix_length <= task.demo_length:
        raise ValueError("demo prefix length out of range")
    state = Hyperstate((task.obligation,))
    transitions: list[Transition] = []
    discharged: list[tuple[Obligation, int]] = []
    frames: list[tuple[Obligation, int, int]] = []  # (obligation, start step, suffix length)
    steps_done = 0

    def commit(tactic) -> None:
        nonlocal state, steps_done
        source = state.first
        result = apply_tactic(source, tactic)
        frames.append((source, steps_done, len(state.obligations) - 1))
        state = Hyperstate(result + state.obligations[1:])
        steps_done += 1
        transitions.append(Transition(source, tactic, result))
        while frames and len(state.obligations) == frames[-1][2]:
            ob, start, _ = frames.pop()
            discharged.append((ob, steps_done - start))

    for tactic in task.demo_script.steps[:demo_prefix_length]:
        if steps_done >= config.episode_budget:
            return transitions, discharged
        commit(tactic)

    while not state.is_empty and steps_done < config.episode_budget:
        source = state.first
        options = []
        for prediction in predict_top_n(predictor, source, config.width):
            try:
                result = apply_tactic(source, prediction.tactic)
            except TacticError:
                continue
            options.append((prediction.tactic, result))
        if not options:
            transitions.append(Transition(source, None, (), dead_end=True))
            break
        scores = [
            model.hyperstate_value(Hyperstate(result + state.obligations[1:])) for _, result in options
        ]
        greedy_index = max(range(len(options)), key=lambda i: (scores[i], -i))
        if len(options) > 1 and rng.random() < epsilon:
            rest = [i for i in range(len(options)) if i != greedy_index]
            choice = rest[rng.randrange(len(rest))]
        else:
            choice = greedy_index
        commit(options[choice][0])
    return transitions, discharged


def _epsilon_at(episode: int, total: int, config: TrainerConfig) -> float:
    decay = config.epsilon_decay_episodes
    if decay is None:
        decay = max(1, total // 2)
    if decay <= 0:
        return config.epsilon_end
    frac = min(1.0, episode / decay)
    return config.epsilon_start + (config.epsilon_end - config.epsilon_start) * frac


class _Learner:
    """Owns the model parameters and all three buffers."""

    def __init__(self, model: ValueModel, predictor: Predictor, config: TrainerConfig):
        self.model = model
        self.predictor = predictor
        self.config = config
        self.replay = ReplayBuffer(config.replay_capacity)
        self.true_targets = TrueTargetBuffer()
        self.negatives = NegativeBuffer()
        self.rng = random.Random(config.seed + 1)
        self.updates = 0
        self.losses: list[float] = []

    def ingest(self, transitions: list[Transition], discharged: list[tuple[Obligation, int]]) -> None:
        for transition in transitions:
            self.replay.push(transition)
            if transition.dead_end:
                self.negatives.add(transition.source)
        for obligation, length in discharged:
            self.true_targets.update(obligation, length)

    def sample_batch(self) -> list[tuple[Obligation, float]]:
        cfg = self.config
        n_replay = round(cfg.batch_size * cfg.replay_fraction)
        n_true = round(cfg.batch_size * cfg.true_fraction)
        n_negative = cfg.batch_size - n_replay - n_true
        batch: list[tuple[Obligation, float]] = []
        replay_want = n_replay
        if len(self.true_targets) == 0:
            replay_want += n_true
        if len(self.negatives) == 0:
            replay_want += n_negative
        for transition in self.replay.sample(replay_want, self.rng):
            target = bellman_target(self.model, transition.source, self.predictor, cfg.width)
            batch.append((transition.source, target))
        for obligation, length in self.true_targets.sample(n_true if len(self.true_targets) else 0, self.rng):
            batch.append((obligation, self.model.gamma**length))
        for obligation in self.negatives.sample(n_negative if len(self.negatives) else 0, self.rng):
            batch.append((obligation, 0.0))
        return batch

    def update_once(self) -> None:
        batch = self.sample_batch()
        if not batch:
            return
        loss = self.model.update_batch(batch, self.config.learning_rate)
        self.losses.append(loss)
        self.updates += 1

    def buffer_sizes(self) -> dict:
        return {
            "replay": len(self.replay),
            "true_target": len(self.true_targets),
            "negative": len(self.negatives),
        }


def _validation_success(
    model: ValueModel, predictor: Predictor, tasks: list[TrainingTask], config: TrainerConfig
) -> float:
    if not tasks:
        return 0.0
    scorer = ValueScorer.for_model(model)
    proved = 0
    for task in tasks:
        result = _greedy_on_obligation(task.obligation, scorer, predictor, config)
        if result.proved:
            proved += 1
    return proved / len(tasks)


def _greedy_on_obligation(obligation: Obligation, scorer, predictor: Predictor, config: TrainerConfig):
    from .search import greedy_from_hyperstate

    return greedy_from_hyperstate(
        Hyperstate((obligation,)), scorer, predictor, config.width, budget=config.episode_budget
    )


def train(
    split: CorpusSplit,
    predictor: Predictor,
    config: TrainerConfig,
    tasks: list[TrainingTask] | None = None,
) -> tuple[ValueModel, TrainingReport]:
    """Pretraining followed by episodic RL over the demonstration schedules.

    Bit-reproducible for a fixed seed in single-actor mode; actor_count >= 2
    dispatches to the distributed runner.
    """
    if config.actor_count > 1:
        return distributed_run(split, predictor, config, tasks)
    return _train_single(split, predictor, config, tasks)


def _prepare(split, predictor, config, tasks):
    if tasks is None:
        tasks = prepare_tasks(split, predictor, config.width, config)
    if not tasks:
        raise ValueError("no training tasks survive the filters")
    encoder = hashed_encoder(config.encoder_dim, config.encoder_salt)
    model = ValueModel(encoder, config.encoder_dim, config.gamma, config.hidden_dim, seed=config.seed)
    pretrain_losses = pretrain(
        model,
        [(task.obligation, task.demo_length) for task in tasks],
        epochs=config.pretrain_epochs,
        learning_rate=config.pretrain_learning_rate,
        seed=config.seed,
    )
    return tasks, model, pretrain_losses


def _train_single(split, predictor, config, tasks=None) -> tuple[ValueModel, TrainingReport]:
    tasks, model, pretrain_losses = _prepare(split, predictor, config, tasks)
    report = TrainingReport(
        config=config.to_dict(),
        actor_count=1,
        predictor_losses=list(predictor.train_losses),
        pretrain_losses=pretrain_losses,
        task_count=len(tasks),
    )
    learner = _Learner(model, predictor, config)
    for task in tasks:
        learner.true_targets.update(task.obligation, task.demo_length)

    episode_rng = random.Random(config.seed + 2)
    total_episodes = config.rl_epochs * sum(
        len(demonstration_schedule(task)) * config.episodes_per_prefix for task in tasks
    )
    validation = tasks[: config.validation_tasks]
    episode_index = 0
    for _ in range(config.rl_epochs):
        for task in tasks:
            for prefix in demonstration_schedule(task):
                for _ in range(config.episodes_per_prefix):
                    epsilon = _epsilon_at(episode_index, total_episodes, config)
                    transitions, discharged = run_episode(
                        task, model, predictor, config, prefix, episode_rng, epsilon
                    )
                    learner.ingest(transitions, discharged)
                    for _ in range(config.updates_per_episode):
                        learner.update_once()
                    episode_index += 1
        report.validation_success.append(_validation_success(model, predictor, validation, config))
    report.episodes = episode_index
    report.updates = learner.updates
    report.update_losses = learner.losses
    report.buffer_sizes = learner.buffer_sizes()
    report.negative_obligations = [ob.canonical() for ob in learner.negatives.items()]
    return model, report


# ---------------------------------------------------------------------------
# Distributed actor/learner mode
# ---------------------------------------------------------------------------


def _actor_loop(
    actor_id: int,
    tasks: list[TrainingTask],
    predictor: Predictor,
    config: TrainerConfig,
    snapshot_queue: "queue.Queue",
    out_queue: "queue.Queue",
    initial_params,
    encoder,
    episode_runner,
) -> None:
    """Runs every episode of its partition against a local model built from
    the latest published snapshot; never touches shared state."""
    local = ValueModel(encoder, config.encoder_dim, config.gamma, config.hidden_dim, seed=config.seed)
    local.set_flat_params(initial_params)
    rng = random.Random(config.seed + 100 + actor_id)
    total = config.rl_epochs * sum(
        len(demonstration_schedule(task)) * config.episodes_per_prefix for task in tasks
    )
    index = 0
    task_number = 0
    try:
        for _ in range(config.rl_epochs):
            for task_number, task in enumerate(tasks):
                for prefix in demonstration_schedule(task):
                    for _ in range(config.episodes_per_prefix):
                        # adopt the freshest snapshot at an episode boundary
                        latest = None
                        while True:
                            try:
                                latest = snapshot_queue.get_nowait()
                            except queue.Empty:
                                break
                        if latest is not None:
                            local.set_flat_params(latest)
                        epsilon = _epsilon_at(index, total, config)
                        transitions, discharged = episode_runner(
                            task, local, predictor, config, prefix, rng, epsilon
                        )
                        out_queue.put(("episode", actor_id, transitions, discharged))
                        index += 1
        out_queue.put(("done", actor_id, None, None))
    except Exception as err:  # noqa: BLE001 - reported to the learner
        out_queue.put(("failed", actor_id, str(err), tasks[task_number:]))


def distributed_run(
    split: CorpusSplit,
    predictor: Predictor,
    config: TrainerConfig,
    tasks: list[TrainingTask] | None = None,
    episode_runner=run_episode,
) -> tuple[ValueModel, TrainingReport]:
    """Actor/learner training: one learner owns the model and buffers; actor
    threads run episodes on disjoint task partitions with parameter
    snapshots published every sync_interval updates."""
    if config.actor_count < 2:
        raise ValueError("distributed_run requires at least 2 actors")
    tasks, model, pretrain_losses = _prepare(split, predictor, config, tasks)
    report = TrainingReport(
        config=config.to_dict(),
        actor_count=config.actor_count,
        predictor_losses=list(predictor.train_losses),
        pretrain_losses=pretrain_losses,
        task_count=len(tasks),
    )
    learner = _Learner(model, predictor, config)
    for task in tasks:
        learner.true_targets.update(task.obligation, task.demo_length)

    partitions = [tasks[i :: config.actor_count] for i in range(config.actor_count)]
    partitions = [p for p in partitions if p]
    encoder = model.encoder
    out_queue: queue.Queue = queue.Queue()
    snapshot_queues: list[queue.Queue] = []
    threads: list[threading.Thread] = []
    failures: list[str] = []

    def spawn(actor_id: int, partition: list[TrainingTask]) -> None:
        snapshots: queue.Queue = queue.Queue()
        snapshot_queues.append(snapshots)
        thread = threading.Thread(
            target=_actor_loop,
            args=(
                actor_id,
                partition,
                predictor,
                config,
                snapshots,
                out_queue,
                model.get_flat_params(),
                encoder,
                episode_runner,
            ),
            daemon=True,
        )
        threads.append(thread)
        thread.start()

    for actor_id, partition in enumerate(partitions):
        spawn(actor_id, partition)

    live = len(partitions)
    next_actor_id = len(partitions)
    updates_since_sync = 0
    while live > 0:
        kind, actor_id, payload, extra = out_queue.get()
        if kind == "done":
            live -= 1
            continue
        if kind == "failed":
            failures.append(f"actor {actor_id}: {payload}")
            live -= 1
            remaining = extra
            if remaining:
                spawn(next_actor_id, remaining)
                next_actor_id += 1
                live += 1
            continue
        transitions, discharged = payload, extra
        learner.ingest(transitions, discharged)
        report.episodes += 1
        for _ in range(config.updates_per_episode):
            learner.update_once()
            updates_since_sync += 1
            if updates_since_sync >= config.sync_interval:
                params = model.get_flat_params()
                for snapshots in snapshot_queues:
                    snapshots.put(params)
                updates_since_sync = 0
    for thread in threads:
        thread.join(timeout=60)
    validation = tasks[: config.validation_tasks]
    report.validation_success.append(_validation_success(model, predictor, validation, config))
    report.updates = learner.updates
    report.update_losses = learner.losses
    report.buffer_sizes = learner.buffer_sizes()
    report.negative_obligations = [ob.canonical() for ob in learner.negatives.items()]
    if failures:
        report.buffer_sizes["actor_failures"] = failures
    return model, report


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(path: str, model: ValueModel, predictor: Predictor, config: TrainerConfig) -> None:
    payload = {
        "version": CHECKPOINT_VERSION,
        "config": config.to_dict(),
        "predictor": predictor_to_dict(predictor),
        "encoder": {"mode": "hashed", "dim": config.encoder_dim, "salt": config.encoder_salt},
        "value_model": value_model_to_dict(model),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path: str) -> tuple[ValueModel, Predictor, TrainerConfig]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"incompatible checkpoint version {payload.get('version')!r}")
    config = TrainerConfig.from_dict(payload["config"])
    encoder_info = payload["encoder"]
    if encoder_info["mode"] != "hashed":
        raise ValueError(f"unsupported encoder mode {encoder_info['mode']!r}")
    encoder = hashed_encoder(encoder_info["dim"], encoder_info["salt"])
    model = value_model_from_dict(payload["value_model"], encoder)
    predictor = predictor_from_dict(payload["predictor"])
    return model, predictor, config
