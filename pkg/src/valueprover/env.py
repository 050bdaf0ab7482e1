"""The deterministic equational proving environment.

An Obligation is one open goal: not-yet-introduced binders, an ordered
context of introduced variables and hypothesis equations, and a goal
equation. A Hyperstate is the ordered list of all open obligations; tactics
always apply to the first one, so a linear script is unambiguous.

All operations are pure functions of immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .terms import (
    ZERO,
    Succ,
    Term,
    TermSyntaxError,
    Var,
    format_term,
    is_identifier,
    normalize,
    occurs,
    parse_term_at,
    replace_leftmost_innermost,
    substitute,
    term_vars,
)

__all__ = [
    "ContextVar",
    "Hypothesis",
    "Obligation",
    "Hyperstate",
    "Tactic",
    "ProofScript",
    "Theorem",
    "TacticError",
    "ReplayError",
    "TEMPLATES",
    "TEMPLATE_INDEX",
    "ARG_TEMPLATES",
    "format_obligation",
    "parse_obligation",
    "parse_tactic",
    "format_script",
    "parse_script",
    "apply_tactic",
    "step_hyperstate",
    "replay_script",
    "script_is_valid",
    "extract_subproof_tasks",
    "enumerate_applicable",
]

TEMPLATES = ("intros", "induction", "simpl", "rewrite", "f_equal", "reflexivity")
TEMPLATE_INDEX = {name: i for i, name in enumerate(TEMPLATES)}
ARG_TEMPLATES = frozenset({"induction", "rewrite"})


@dataclass(frozen=True)
class ContextVar:
    name: str


@dataclass(frozen=True)
class Hypothesis:
    name: str
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Obligation:
    binders: tuple[str, ...]
    context: tuple[ContextVar | Hypothesis, ...]
    goal_lhs: Term
    goal_rhs: Term

    def canonical(self) -> str:
        return format_obligation(self)

    def context_vars(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.context if isinstance(e, ContextVar))

    def hypotheses(self) -> tuple[Hypothesis, ...]:
        return tuple(e for e in self.context if isinstance(e, Hypothesis))

    def names_in_use(self) -> frozenset[str]:
        names = set(self.binders)
        for entry in self.context:
            names.add(entry.name)
            if isinstance(entry, Hypothesis):
                names.update(term_vars(entry.lhs))
                names.update(term_vars(entry.rhs))
        names.update(term_vars(self.goal_lhs))
        names.update(term_vars(self.goal_rhs))
        return frozenset(names)


@dataclass(frozen=True, eq=False)
class Hyperstate:
    """All open obligations, in script order.

    Equality (and the dedup key used by search) is multiset equality of the
    obligations' canonical forms; the tuple order still matters for replay.
    """

    obligations: tuple[Obligation, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.obligations

    @property
    def first(self) -> Obligation:
        if not self.obligations:
            raise TacticError("no open obligations")
        return self.obligations[0]

    def canonical_key(self) -> tuple[str, ...]:
        return tuple(sorted(ob.canonical() for ob in self.obligations))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Hyperstate):
            return NotImplemented
        return self.canonical_key() == other.canonical_key()

    def __hash__(self) -> int:
        return hash(self.canonical_key())


@dataclass(frozen=True)
class Tactic:
    template: str
    argument: str | None = None

    def __post_init__(self) -> None:
        if self.template not in TEMPLATES:
            raise ValueError(f"unknown tactic template {self.template!r}")
        if self.template in ARG_TEMPLATES:
            if self.argument is None:
                raise ValueError(f"{self.template} requires an argument")
            if not is_identifier(self.argument):
                raise ValueError(f"bad tactic argument {self.argument!r}")
        elif self.argument is not None:
            raise ValueError(f"{self.template} takes no argument")

    def __str__(self) -> str:
        if self.argument is None:
            return self.template
        return f"{self.template} {self.argument}"


@dataclass(frozen=True)
class ProofScript:
    steps: tuple[Tactic, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    def __str__(self) -> str:
        return format_script(self)


@dataclass(frozen=True)
class Theorem:
    """A named statement: binders plus a goal, with an empty context."""

    id: str
    statement: Obligation

    def __post_init__(self) -> None:
        if self.statement.context:
            raise ValueError("a theorem statement must have an empty context")


class TacticError(Exception):
    """An inapplicable tactic; the message names the violated precondition."""


class ReplayError(Exception):
    def __init__(self, step_index: int, cause: str):
        super().__init__(f"script failed at step {step_index}: {cause}")
        self.step_index = step_index
        self.cause = cause


# ---------------------------------------------------------------------------
# Canonical text form
#
#   obligation := ["forall" ident+ ","] [entry ("," entry)*] "|-" equation
#   entry      := ident | ident ":" equation        (variable / hypothesis)
#   equation   := term "=" term
#
# with the exact spacing produced by format_obligation; e.g.
#   forall n, |- Plus(Var(n),Zero) = Var(n)
#   n', IH_n : Plus(Var(n'),Zero) = Var(n') |- Plus(Succ(Var(n')),Zero) = Succ(Var(n'))
# ---------------------------------------------------------------------------


def format_obligation(ob: Obligation) -> str:
    parts = []
    if ob.binders:
        parts.append("forall " + " ".join(ob.binders) + ", ")
    entries = []
    for entry in ob.context:
        if isinstance(entry, ContextVar):
            entries.append(entry.name)
        else:
            entries.append(f"{entry.name} : {format_term(entry.lhs)} = {format_term(entry.rhs)}")
    if entries:
        parts.append(", ".join(entries) + " ")
    parts.append(f"|- {format_term(ob.goal_lhs)} = {format_term(ob.goal_rhs)}")
    return "".join(parts)


def _parse_ident(text: str, pos: int) -> tuple[str, int]:
    end = pos
    while end < len(text) and (text[end].isalnum() or text[end] in "_'"):
        end += 1
    name = text[pos:end]
    if not is_identifier(name):
        raise TermSyntaxError("expected an identifier", pos)
    return name, end


def _expect(text: str, pos: int, token: str) -> int:
    if not text.startswith(token, pos):
        raise TermSyntaxError(f"expected {token!r}", pos)
    return pos + len(token)


def parse_obligation(text: str) -> Obligation:
    pos = 0
    binders: list[str] = []
    if text.startswith("forall "):
        pos = len("forall ")
        while True:
            name, pos = _parse_ident(text, pos)
            binders.append(name)
            if text.startswith(", ", pos):
                pos += 2
                break
            pos = _expect(text, pos, " ")
    context: list[ContextVar | Hypothesis] = []
    while not text.startswith("|- ", pos):
        name, pos = _parse_ident(text, pos)
        if text.startswith(" : ", pos):
            pos += 3
            lhs, pos = parse_term_at(text, pos)
            pos = _expect(text, pos, " = ")
            rhs, pos = parse_term_at(text, pos)
            context.append(Hypothesis(name, lhs, rhs))
        else:
            context.append(ContextVar(name))
        if text.startswith(", ", pos):
            pos += 2
        else:
            pos = _expect(text, pos, " ")
    pos = _expect(text, pos, "|- ")
    goal_lhs, pos = parse_term_at(text, pos)
    pos = _expect(text, pos, " = ")
    goal_rhs, pos = parse_term_at(text, pos)
    if pos != len(text):
        raise TermSyntaxError("trailing input after obligation", pos)
    ob = Obligation(tuple(binders), tuple(context), goal_lhs, goal_rhs)
    _validate_obligation(ob)
    return ob


def _validate_obligation(ob: Obligation) -> None:
    seen: set[str] = set()
    for name in ob.binders + tuple(e.name for e in ob.context):
        if name in seen:
            raise TermSyntaxError(f"duplicate name {name!r} in obligation", 0)
        seen.add(name)
    bound = set(ob.binders) | set(ob.context_vars())
    used = set(term_vars(ob.goal_lhs)) | set(term_vars(ob.goal_rhs))
    for hyp in ob.hypotheses():
        used |= set(term_vars(hyp.lhs)) | set(term_vars(hyp.rhs))
    free = used - bound
    if free:
        raise TermSyntaxError(f"unbound variables: {', '.join(sorted(free))}", 0)


def parse_tactic(text: str) -> Tactic:
    parts = text.split(" ")
    if len(parts) == 1:
        return Tactic(parts[0])
    if len(parts) == 2:
        return Tactic(parts[0], parts[1])
    raise ValueError(f"malformed tactic {text!r}")


def format_script(script: ProofScript) -> str:
    return "; ".join(str(t) for t in script.steps)


def parse_script(text: str) -> ProofScript:
    if not text:
        return ProofScript()
    return ProofScript(tuple(parse_tactic(part) for part in text.split("; ")))


# ---------------------------------------------------------------------------
# Tactic semantics
# ---------------------------------------------------------------------------


def _fresh_name(base: str, taken: frozenset[str]) -> str:
    name = base
    while name in taken or not is_identifier(name):
        name += "'"
    return name


def _apply_intros(ob: Obligation) -> tuple[Obligation, ...]:
    if not ob.binders:
        raise TacticError("intros: the obligation has no leading binders")
    new_context = ob.context + tuple(ContextVar(b) for b in ob.binders)
    return (Obligation((), new_context, ob.goal_lhs, ob.goal_rhs),)


def _apply_induction(ob: Obligation, var: str) -> tuple[Obligation, ...]:
    if ob.binders:
        raise TacticError("induction: binders must be introduced first")
    if var not in ob.context_vars():
        raise TacticError(f"induction: {var} is not an introduced variable")
    target = Var(var)
    if not (occurs(ob.goal_lhs, target) or occurs(ob.goal_rhs, target)):
        raise TacticError(f"induction: {var} does not occur in the goal")
    for hyp in ob.hypotheses():
        if occurs(hyp.lhs, target) or occurs(hyp.rhs, target):
            raise TacticError(f"induction: {var} occurs in hypothesis {hyp.name}")
    taken = ob.names_in_use()
    fresh = _fresh_name(var + "'", taken)
    ih_name = _fresh_name("IH_" + var, taken | {fresh})

    base_context = tuple(e for e in ob.context if e.name != var)
    base = Obligation(
        (),
        base_context,
        substitute(ob.goal_lhs, var, ZERO),
        substitute(ob.goal_rhs, var, ZERO),
    )
    step_context = tuple(ContextVar(fresh) if e.name == var else e for e in ob.context)
    ih = Hypothesis(ih_name, substitute(ob.goal_lhs, var, Var(fresh)), substitute(ob.goal_rhs, var, Var(fresh)))
    step = Obligation(
        (),
        step_context + (ih,),
        substitute(ob.goal_lhs, var, Succ(Var(fresh))),
        substitute(ob.goal_rhs, var, Succ(Var(fresh))),
    )
    return (base, step)


def _apply_simpl(ob: Obligation) -> tuple[Obligation, ...]:
    lhs = normalize(ob.goal_lhs)
    rhs = normalize(ob.goal_rhs)
    if lhs == ob.goal_lhs and rhs == ob.goal_rhs:
        raise TacticError("simpl: the goal is already in normal form")
    return (Obligation(ob.binders, ob.context, lhs, rhs),)


def _apply_rewrite(ob: Obligation, hyp_name: str) -> tuple[Obligation, ...]:
    hyp = next((h for h in ob.hypotheses() if h.name == hyp_name), None)
    if hyp is None:
        raise TacticError(f"rewrite: no hypothesis named {hyp_name}")
    new_lhs = replace_leftmost_innermost(ob.goal_lhs, hyp.lhs, hyp.rhs)
    if new_lhs is not None:
        return (Obligation(ob.binders, ob.context, new_lhs, ob.goal_rhs),)
    new_rhs = replace_leftmost_innermost(ob.goal_rhs, hyp.lhs, hyp.rhs)
    if new_rhs is not None:
        return (Obligation(ob.binders, ob.context, ob.goal_lhs, new_rhs),)
    raise TacticError(f"rewrite: left-hand side of {hyp_name} does not occur in the goal")


def _apply_f_equal(ob: Obligation) -> tuple[Obligation, ...]:
    if not (isinstance(ob.goal_lhs, Succ) and isinstance(ob.goal_rhs, Succ)):
        raise TacticError("f_equal: both goal sides must be Succ applications")
    return (Obligation(ob.binders, ob.context, ob.goal_lhs.child, ob.goal_rhs.child),)


def _apply_reflexivity(ob: Obligation) -> tuple[Obligation, ...]:
    if ob.goal_lhs != ob.goal_rhs:
        raise TacticError("reflexivity: goal sides are not syntactically equal")
    return ()


@lru_cache(maxsize=65536)
def apply_tactic(ob: Obligation, tactic: Tactic) -> tuple[Obligation, ...]:
    """Apply one tactic to one obligation.

    Returns the obligations it produces, in order; an empty tuple means the
    obligation was discharged. Raises TacticError when inapplicable.
    """
    if tactic.template == "intros":
        return _apply_intros(ob)
    if tactic.template == "induction":
        return _apply_induction(ob, tactic.argument)
    if tactic.template == "simpl":
        return _apply_simpl(ob)
    if tactic.template == "rewrite":
        return _apply_rewrite(ob, tactic.argument)
    if tactic.template == "f_equal":
        return _apply_f_equal(ob)
    if tactic.template == "reflexivity":
        return _apply_reflexivity(ob)
    raise TacticError(f"unknown template {tactic.template}")


def step_hyperstate(h: Hyperstate, tactic: Tactic) -> Hyperstate:
    """Apply the tactic to the first obligation and splice in its results."""
    produced = apply_tactic(h.first, tactic)
    return Hyperstate(produced + h.obligations[1:])


def replay_script(thm: Theorem, script: ProofScript) -> tuple[tuple[Hyperstate, Tactic, Hyperstate], ...]:
    """Fold the script over the theorem's initial hyperstate.

    Returns the full (before, tactic, after) transition trace; the script is
    valid iff the final hyperstate is empty.
    """
    state = Hyperstate((thm.statement,))
    trace = []
    for index, tactic in enumerate(script.steps):
        try:
            after = step_hyperstate(state, tactic)
        except TacticError as err:
            raise ReplayError(index, str(err)) from err
        trace.append((state, tactic, after))
        state = after
    return tuple(trace)


def script_is_valid(thm: Theorem, script: ProofScript) -> bool:
    try:
        trace = replay_script(thm, script)
    except ReplayError:
        return False
    final = trace[-1][2] if trace else Hyperstate((thm.statement,))
    return final.is_empty


def extract_subproof_tasks(thm: Theorem, script: ProofScript) -> list[tuple[Obligation, ProofScript]]:
    """One task per obligation the replay creates, in first-appearance order.

    Each obligation is paired with the exact contiguous slice of the script
    that discharges it together with everything it spawns, so the task for
    the initial obligation is the full script and a parent's length is
    1 + the sum of its children's lengths.
    """
    trace = replay_script(thm, script)
    final = trace[-1][2] if trace else Hyperstate((thm.statement,))
    if not final.is_empty:
        raise ReplayError(len(script.steps), "script does not close the proof")

    steps = script.steps
    tasks: list[tuple[Obligation, ProofScript] | None] = []

    def discharge(ob: Obligation, start: int) -> int:
        slot = len(tasks)
        tasks.append(None)
        children = apply_tactic(ob, steps[start])
        end = start + 1
        for child in children:
            end = discharge(child, end)
        tasks[slot] = (ob, ProofScript(steps[start:end]))
        return end

    consumed = discharge(thm.statement, 0)
    assert consumed == len(steps), "subproof decomposition must consume the whole script"
    return tasks  # type: ignore[return-value]


def enumerate_applicable(ob: Obligation) -> tuple[tuple[Tactic, tuple[Obligation, ...]], ...]:
    """Every tactic that applies to `ob` without error, with its results.

    Candidates follow the fixed template order, arguments in context order.
    """
    candidates: list[Tactic] = [Tactic("intros")]
    candidates.extend(Tactic("induction", v) for v in ob.context_vars())
    candidates.append(Tactic("simpl"))
    candidates.extend(Tactic("rewrite", h.name) for h in ob.hypotheses())
    candidates.append(Tactic("f_equal"))
    candidates.append(Tactic("reflexivity"))
    out = []
    for tactic in candidates:
        try:
            out.append((tactic, apply_tactic(ob, tactic)))
        except TacticError:
            continue
    return tuple(out)
