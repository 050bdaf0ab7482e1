import random

import numpy as np
import pytest

from valueprover.corpus import CorpusEntry, CorpusSplit
from valueprover.encoder import hashed_encoder
from valueprover.env import (
    Hyperstate,
    TEMPLATE_INDEX,
    Theorem,
    parse_obligation,
    parse_script,
)
from valueprover.predictor import predict_top_n
from valueprover.trainer import (
    TrainerConfig,
    TrainingTask,
    demonstration_schedule,
    load_checkpoint,
    prepare_tasks,
    run_episode,
    save_checkpoint,
    train,
    distributed_run,
)
from valueprover.value_model import ValueModel


class RankedPredictor:
    def __init__(self, order):
        self.order = order
        self.train_losses = []

    def template_probabilities(self, _):
        probs = np.zeros(6)
        for rank, name in enumerate(self.order):
            probs[TEMPLATE_INDEX[name]] = 0.5 / (2.0**rank)
        return probs / probs.sum()


# every template except f_equal is inside the top five
NO_F_EQUAL = RankedPredictor(("simpl", "reflexivity", "intros", "induction", "rewrite", "f_equal"))


def entry(id_, statement, script):
    return CorpusEntry(Theorem(id_, parse_obligation(statement)), parse_script(script))


@pytest.fixture
def crafted_split():
    short = entry("short", "|- Plus(Zero,Zero) = Zero", "simpl; reflexivity")
    long = entry(
        "long",
        "forall n, |- Plus(Var(n),Zero) = Var(n)",
        "intros; induction n; simpl; reflexivity; simpl; rewrite IH_n; reflexivity",
    )
    # the demo inducts on the second goal variable, but argument resolution
    # always proposes the first, so no width can reproduce this proof
    wrong_variable = entry(
        "wrongvar",
        "forall n m, |- Plus(Var(n),Var(m)) = Plus(Var(n),Var(m))",
        "intros; induction m; reflexivity; reflexivity",
    )
    return CorpusSplit((short, long, wrong_variable), (), seed=0)


def test_prepare_tasks_filters(crafted_split):
    config = TrainerConfig(seed=0)  # default band: keep lengths 3..5
    tasks = prepare_tasks(crafted_split, NO_F_EQUAL, 5, config)
    kept = {(t.obligation.canonical(), t.demo_length) for t in tasks}
    # the only survivor is the worked example's step case (length 3)
    assert len(tasks) == 1
    ((canonical, length),) = kept
    assert length == 3 and "IH_n" in canonical
    # every retained task is reproducible by construction
    from valueprover.oracle import reproducible_under_predictor

    for task in tasks:
        assert reproducible_under_predictor((task.obligation, task.demo_script), NO_F_EQUAL, 5)


def test_prepare_tasks_band_is_configurable(crafted_split):
    config = TrainerConfig(seed=0, min_drop_length=0, max_drop_length=99)
    tasks = prepare_tasks(crafted_split, NO_F_EQUAL, 5, config)
    lengths = sorted(t.demo_length for t in tasks)
    # everything reproducible survives; the wrong-variable proofs still drop
    assert 7 in lengths and 2 in lengths
    assert all(t.demo_length != 4 for t in tasks)


def test_prepare_tasks_whole_theorem_mode(crafted_split):
    config = TrainerConfig(seed=0, min_drop_length=0, max_drop_length=99, subproof_tasks=False)
    tasks = prepare_tasks(crafted_split, NO_F_EQUAL, 5, config)
    assert {t.demo_length for t in tasks} == {2, 7}


def test_demonstration_schedule():
    four = TrainingTask(parse_obligation("|- Zero = Zero"), parse_script("reflexivity"))
    assert demonstration_schedule(four) == [0]
    worked = TrainingTask(
        parse_obligation("|- Plus(Zero,Zero) = Zero"), parse_script("simpl; reflexivity")
    )
    assert demonstration_schedule(worked) == [1, 0]
    longer = TrainingTask(
        parse_obligation("forall n, |- Plus(Var(n),Zero) = Var(n)"),
        parse_script("intros; induction n; simpl; reflexivity"),
    )
    assert demonstration_schedule(longer) == [3, 2, 1, 0]


def _model():
    return ValueModel(hashed_encoder(64, 0), 64, gamma=0.9, seed=0)


def test_run_episode_full_prefix_is_pure_replay(worked_theorem):
    thm, script = worked_theorem
    task = TrainingTask(thm.statement, script)
    config = TrainerConfig(seed=0)
    transitions, discharged = run_episode(
        task, _model(), NO_F_EQUAL, config, task.demo_length, random.Random(0), epsilon=1.0
    )
    assert [t.action for t in transitions] == list(script.steps)
    assert not any(t.dead_end for t in transitions)
    by_canon = {ob.canonical(): length for ob, length in discharged}
    assert by_canon[thm.statement.canonical()] == 7
    assert by_canon["|- Plus(Zero,Zero) = Zero"] == 2


def test_run_episode_agent_supplies_last_step(worked_theorem):
    thm, script = worked_theorem
    task = TrainingTask(thm.statement, script)
    config = TrainerConfig(seed=0)
    transitions, discharged = run_episode(
        task, _model(), NO_F_EQUAL, config, task.demo_length - 1, random.Random(0), epsilon=0.0
    )
    # the final state only admits reflexivity, so greedy completes the proof
    assert len(transitions) == 7
    assert transitions[-1].action == parse_script("reflexivity").steps[0]
    assert dict((ob.canonical(), n) for ob, n in discharged)[thm.statement.canonical()] == 7


def test_run_episode_dead_end_sets_flag():
    dead = parse_obligation(
        "n', IH_n : Succ(Plus(Var(n'),Succ(Zero))) = Succ(Succ(Plus(Var(n'),Zero))) |- "
        "Plus(Var(n'),Succ(Zero)) = Succ(Plus(Var(n'),Zero))"
    )
    task = TrainingTask(dead, parse_script("simpl"))  # placeholder demo, unused at prefix 0
    config = TrainerConfig(seed=0)
    transitions, discharged = run_episode(task, _model(), NO_F_EQUAL, config, 0, random.Random(0), 0.0)
    assert len(transitions) == 1 and transitions[0].dead_end
    assert transitions[0].source == dead and discharged == []


def _tiny_split():
    entries = [
        entry("g0", "|- Plus(Succ(Zero),Zero) = Succ(Zero)", "simpl; reflexivity"),
        entry(
            "w",
            "forall n, |- Plus(Var(n),Zero) = Var(n)",
            "intros; induction n; simpl; reflexivity; simpl; rewrite IH_n; reflexivity",
        ),
    ]
    return CorpusSplit(tuple(entries), (), seed=0)


def _fast_config(**kw):
    base = dict(
        seed=0,
        min_drop_length=0,
        max_drop_length=99,
        pretrain_epochs=50,
        rl_epochs=1,
        episodes_per_prefix=1,
        updates_per_episode=2,
    )
    base.update(kw)
    return TrainerConfig(**base)


def test_train_zero_rl_epochs_equals_pretrained():
    split = _tiny_split()
    model, report = train(split, NO_F_EQUAL, _fast_config(rl_epochs=0))
    from valueprover.trainer import prepare_tasks as prep
    from valueprover.value_model import pretrain

    config = _fast_config(rl_epochs=0)
    tasks = prep(split, NO_F_EQUAL, config.width, config)
    reference = ValueModel(hashed_encoder(64, 0), 64, gamma=0.9, seed=0)
    pretrain(
        reference,
        [(t.obligation, t.demo_length) for t in tasks],
        epochs=50,
        learning_rate=config.pretrain_learning_rate,
    )
    assert np.array_equal(model.get_flat_params(), reference.get_flat_params())
    assert report.episodes == 0 and report.updates == 0


def test_train_single_actor_reproducible():
    first, report_a = train(_tiny_split(), NO_F_EQUAL, _fast_config())
    second, report_b = train(_tiny_split(), NO_F_EQUAL, _fast_config())
    assert np.array_equal(first.get_flat_params(), second.get_flat_params())
    assert report_a.update_losses == report_b.update_losses
    assert report_a.buffer_sizes == report_b.buffer_sizes


def test_train_report_contents():
    _, report = train(_tiny_split(), NO_F_EQUAL, _fast_config())
    assert report.actor_count == 1 and report.task_count > 0
    assert report.episodes > 0 and len(report.update_losses) == report.updates
    assert set(report.buffer_sizes) == {"replay", "true_target", "negative"}
    assert len(report.validation_success) == 1
    payload = report.to_dict()
    assert payload["config"]["seed"] == 0


def test_buffer_conservation(worked_theorem):
    # every transition an episode produces lands in exactly one replay
    # insert; dead ends additionally mark their source negative
    from valueprover.trainer import _Learner

    thm, script = worked_theorem
    task = TrainingTask(thm.statement, script)
    config = _fast_config()
    learner = _Learner(_model(), NO_F_EQUAL, config)
    rng = random.Random(4)
    total = 0
    dead_sources = set()
    for prefix in demonstration_schedule(task):
        transitions, discharged = run_episode(task, _model(), NO_F_EQUAL, config, prefix, rng, 0.5)
        learner.ingest(transitions, discharged)
        total += len(transitions)
        dead_sources.update(t.source.canonical() for t in transitions if t.dead_end)
    assert len(learner.replay) == total
    assert len(learner.negatives) == len(dead_sources)


def test_learner_true_target_min_rule():
    from valueprover.trainer import _Learner
    from valueprover.value_model import Transition

    learner = _Learner(_model(), NO_F_EQUAL, _fast_config())
    state = parse_obligation("|- Zero = Zero")
    learner.ingest([], [(state, 5)])
    learner.ingest([], [(state, 3)])
    learner.ingest([], [(state, 9)])
    assert learner.true_targets.length_of(state) == 3
    dead = parse_obligation("|- Zero = Succ(Zero)")
    learner.ingest([Transition(dead, None, (), dead_end=True)], [])
    assert dead in learner.negatives and len(learner.replay) == 1


def test_distributed_covers_all_partitions():
    split = _tiny_split()
    ran = []

    def spy_runner(task, model, predictor, config, prefix, rng, epsilon):
        ran.append(task.obligation.canonical())
        return run_episode(task, model, predictor, config, prefix, rng, epsilon)

    config = _fast_config(actor_count=2)
    model, report = distributed_run(split, NO_F_EQUAL, config, episode_runner=spy_runner)
    assert report.actor_count == 2
    assert report.episodes > 0
    task_canons = set(ran)
    assert len(task_canons) == report.task_count  # every task was exercised
    assert report.buffer_sizes["replay"] > 0


def test_distributed_redistributes_failed_partition():
    split = _tiny_split()
    config = _fast_config(actor_count=2)
    poisoned = {"armed": True}

    def flaky_runner(task, model, predictor, config, prefix, rng, epsilon):
        if poisoned["armed"]:
            poisoned["armed"] = False
            raise RuntimeError("actor crash")
        return run_episode(task, model, predictor, config, prefix, rng, epsilon)

    model, report = distributed_run(split, NO_F_EQUAL, config, episode_runner=flaky_runner)
    failures = report.buffer_sizes.get("actor_failures", [])
    assert len(failures) == 1 and "actor crash" in failures[0]
    assert report.episodes > 0


def test_train_dispatches_to_distributed():
    model, report = train(_tiny_split(), NO_F_EQUAL, _fast_config(actor_count=2))
    assert report.actor_count == 2


def test_distributed_four_actors_end_to_end():
    from valueprover.corpus import generate_corpus, split_corpus
    from valueprover.cli import _training_pairs
    from valueprover.predictor import train_predictor

    entries, _ = generate_corpus(3, (8, 6, 6))
    split = split_corpus(entries, 0, 0.25)
    predictor = train_predictor(_training_pairs(split.train), epochs=250, learning_rate=0.5, seed=0)
    config = TrainerConfig(
        seed=0, actor_count=4, min_drop_length=0, max_drop_length=9, pretrain_epochs=400
    )
    model, report = train(split, predictor, config)
    assert report.actor_count == 4
    assert report.buffer_sizes["replay"] > 0 and report.buffer_sizes["true_target"] > 0
    # the distributed run still learns a model good enough to finish its
    # validation tasks greedily
    assert report.validation_success[-1] >= 0.9


def test_checkpoint_round_trip(tmp_path):
    config = _fast_config()
    model, _ = train(_tiny_split(), NO_F_EQUAL, config)
    path = tmp_path / "model.ckpt"

    from valueprover.predictor import Predictor

    real_predictor = Predictor(np.zeros((6, 14)), np.zeros(6))
    save_checkpoint(str(path), model, real_predictor, config)
    loaded_model, loaded_predictor, loaded_config = load_checkpoint(str(path))
    state = parse_obligation("|- Zero = Zero")
    assert loaded_model.v_value(state) == model.v_value(state)
    assert loaded_config == config
    assert np.array_equal(loaded_predictor.weights, real_predictor.weights)


def test_invalid_configs_rejected():
    with pytest.raises(ValueError):
        TrainerConfig(gamma=1.5)
    with pytest.raises(ValueError):
        TrainerConfig(width=0)
    with pytest.raises(ValueError):
        TrainerConfig(replay_fraction=0.9, true_fraction=0.3, negative_fraction=0.3)
    with pytest.raises(ValueError):
        distributed_run(_tiny_split(), NO_F_EQUAL, _fast_config(actor_count=1))
