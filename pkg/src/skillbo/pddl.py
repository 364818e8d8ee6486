"""PDDL subset (:strips :typing): generation, parsing, planning.

The supported fragment is conjunctive positive preconditions plus add/delete
effects, flat types under the implicit root type ``object``. Predicates are
declared with root-typed arguments; type constraints live on the action
parameters, which is all the scenarios here need.
"""
from __future__ import annotations

import heapq
import itertools
import re
from dataclasses import dataclass, field

from .world_model import WorldModel

Literal = tuple[str, ...]  # (predicate, arg, ...)


class PddlError(Exception):
    pass


class PddlSyntaxError(PddlError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


class PddlValidationError(PddlError):
    pass


@dataclass(frozen=True)
class PddlAction:
    name: str
    parameters: tuple[tuple[str, str], ...]  # (?var, type)
    preconditions: tuple[Literal, ...]
    add_effects: tuple[Literal, ...]
    del_effects: tuple[Literal, ...]


@dataclass
class PddlDomain:
    name: str
    types: tuple[str, ...]
    predicates: dict[str, int]  # name -> arity
    actions: tuple[PddlAction, ...]

    def __post_init__(self):
        declared = set(self.types)
        for action in self.actions:
            for _, t in action.parameters:
                if t != "object" and t not in declared:
                    raise PddlValidationError(
                        f"action {action.name}: parameter type {t!r} not declared"
                    )
            for lit in action.preconditions + action.add_effects + action.del_effects:
                self._check_literal(action.name, lit)

    def _check_literal(self, ctx: str, lit: Literal) -> None:
        pred, *args = lit
        if pred not in self.predicates:
            raise PddlValidationError(f"{ctx}: predicate {pred!r} used but not declared")
        if len(args) != self.predicates[pred]:
            raise PddlValidationError(
                f"{ctx}: predicate {pred!r} expects {self.predicates[pred]} args, got {len(args)}"
            )

    def __eq__(self, other):
        if not isinstance(other, PddlDomain):
            return NotImplemented
        return (
            self.name == other.name
            and set(self.types) == set(other.types)
            and self.predicates == other.predicates
            and set(self.actions) == set(other.actions)
        )


@dataclass
class PddlProblem:
    name: str
    domain: str
    objects: dict[str, str]  # name -> type
    init: tuple[Literal, ...]
    goal: tuple[Literal, ...]

    def __eq__(self, other):
        if not isinstance(other, PddlProblem):
            return NotImplemented
        return (
            self.name == other.name
            and self.domain == other.domain
            and self.objects == other.objects
            and set(self.init) == set(other.init)
            and set(self.goal) == set(other.goal)
        )


@dataclass(frozen=True)
class PlanStep:
    skill: str
    args: tuple[str, ...]

    def __str__(self):
        return f"({self.skill} {' '.join(self.args)})" if self.args else f"({self.skill})"


@dataclass
class Plan:
    steps: list[PlanStep] = field(default_factory=list)

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def skill_names(self) -> list[str]:
        return [s.skill for s in self.steps]


UNSOLVABLE = "unsolvable"


# --- generation from the world model ----------------------------------------


def _sanitize(name: str) -> str:
    return name


def generate_domain(model: WorldModel, name: str = "scene") -> PddlDomain:
    """One PDDL action per skill template; predicates harvested from the
    templates' pre/postcondition patterns."""
    if not model.skills:
        raise PddlError("world model declares no skill templates")
    kinds = sorted({o.kind for o in model.objects.values()})
    predicates: dict[str, int] = {}
    actions = []
    for tpl in model.skills.values():
        params = tuple((f"?{p.name}", p.semantic_type) for p in tpl.object_parameters())
        param_names = {p.name for p in tpl.object_parameters()}

        def to_literal(pattern) -> Literal:
            terms = []
            for term in pattern.terms():
                if term.startswith("?"):
                    if term[1:] not in param_names:
                        raise PddlError(
                            f"skill {tpl.name}: pattern references non-object parameter {term!r}"
                        )
                    terms.append(term)
                else:
                    terms.append(_sanitize(term))
            predicates.setdefault(pattern.predicate, 2)
            if predicates[pattern.predicate] != 2:
                raise PddlError(f"predicate {pattern.predicate!r} arity mismatch")
            return (pattern.predicate, *terms)

        pre = tuple(to_literal(p) for p in tpl.preconditions if not p.negated)
        add = tuple(to_literal(p) for p in tpl.postconditions if not p.negated)
        dele = tuple(to_literal(p) for p in tpl.postconditions if p.negated)
        actions.append(
            PddlAction(
                name=tpl.name, parameters=params, preconditions=pre,
                add_effects=add, del_effects=dele,
            )
        )
    return PddlDomain(
        name=name,
        types=tuple(kinds),
        predicates=predicates,
        actions=tuple(sorted(actions, key=lambda a: a.name)),
    )


def generate_problem(
    model: WorldModel, goal: list, domain_name: str = "scene", name: str = "task"
) -> PddlProblem:
    objects = {o.id: o.kind for o in model.objects.values()}
    init = tuple(r.as_tuple() for r in model.relations)
    goal_lits = []
    for g in goal:
        if hasattr(g, "as_tuple"):
            goal_lits.append(g.as_tuple())
        else:
            goal_lits.append(tuple(g))
    return PddlProblem(
        name=name, domain=domain_name, objects=objects, init=init, goal=tuple(goal_lits)
    )


# --- printing ----------------------------------------------------------------


def _fmt_literal(lit: Literal) -> str:
    return "(" + " ".join(lit) + ")"


def print_domain(domain: PddlDomain) -> str:
    lines = [f"(define (domain {domain.name})"]
    lines.append("  (:requirements :strips :typing)")
    if domain.types:
        lines.append("  (:types " + " ".join(domain.types) + ")")
    preds = []
    for pred in sorted(domain.predicates):
        arity = domain.predicates[pred]
        args = " ".join(f"?x{i} - object" for i in range(arity))
        preds.append(f"({pred} {args})" if arity else f"({pred})")
    lines.append("  (:predicates " + " ".join(preds) + ")")
    for action in domain.actions:
        lines.append(f"  (:action {action.name}")
        params = " ".join(f"{v} - {t}" for v, t in action.parameters)
        lines.append(f"    :parameters ({params})")
        pre = " ".join(_fmt_literal(l) for l in action.preconditions)
        lines.append(f"    :precondition (and {pre})")
        effs = [_fmt_literal(l) for l in action.add_effects]
        effs += [f"(not {_fmt_literal(l)})" for l in action.del_effects]
        lines.append(f"    :effect (and {' '.join(effs)})")
        lines.append("  )")
    lines.append(")")
    return "\n".join(lines) + "\n"


def print_problem(problem: PddlProblem) -> str:
    lines = [f"(define (problem {problem.name})", f"  (:domain {problem.domain})"]
    objs = " ".join(f"{o} - {t}" for o, t in problem.objects.items())
    lines.append(f"  (:objects {objs})")
    lines.append("  (:init " + " ".join(_fmt_literal(l) for l in problem.init) + ")")
    lines.append("  (:goal (and " + " ".join(_fmt_literal(l) for l in problem.goal) + "))")
    lines.append(")")
    return "\n".join(lines) + "\n"


# --- parsing -----------------------------------------------------------------

_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")
SUPPORTED_REQUIREMENTS = {":strips", ":typing"}


def _tokenize(text: str):
    # strip ; comments, keep (line, col) for each token
    tokens = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if ";" in line:
            line = line[: line.index(";")]
        for m in _TOKEN_RE.finditer(line):
            tokens.append((m.group(0), lineno, m.start() + 1))
    return tokens


def _parse_sexpr(tokens, pos):
    tok, line, col = tokens[pos]
    if tok == "(":
        items = []
        pos += 1
        while True:
            if pos >= len(tokens):
                raise PddlSyntaxError("unbalanced parenthesis", line, col)
            if tokens[pos][0] == ")":
                return items, pos + 1
            item, pos = _parse_sexpr(tokens, pos)
            items.append(item)
    if tok == ")":
        raise PddlSyntaxError("unexpected ')'", line, col)
    return (tok, line, col), pos + 1


def _atom(x) -> str:
    if not isinstance(x, tuple):
        raise PddlSyntaxError("expected a name, got a list", 0, 0)
    return x[0]


def _is_head(x, word: str) -> bool:
    return isinstance(x, tuple) and x[0].lower() == word


def _parse_typed_list(items):
    """Parse ``a b - t c - u`` lists into [(name, type), ...]; untyped names
    default to 'object'."""
    out = []
    pending = []
    i = 0
    while i < len(items):
        name = _atom(items[i])
        if name == "-":
            i += 1
            typ = _atom(items[i])
            out.extend((n, typ) for n in pending)
            pending = []
        else:
            pending.append(name)
        i += 1
    out.extend((n, "object") for n in pending)
    return out


def _parse_literal(expr) -> Literal:
    if not isinstance(expr, list) or not expr:
        raise PddlSyntaxError("expected a literal", 0, 0)
    return tuple(_atom(x) for x in expr)


def _parse_conjunction(expr) -> list[Literal]:
    if isinstance(expr, list) and expr and _is_head(expr[0], "and"):
        return [_parse_literal(e) for e in expr[1:]]
    return [_parse_literal(expr)]


def parse_domain(text: str) -> PddlDomain:
    tokens = _tokenize(text)
    if not tokens:
        raise PddlSyntaxError("empty input", 1, 1)
    tree, _ = _parse_sexpr(tokens, 0)
    if _atom(tree[0]).lower() != "define":
        raise PddlError("not a PDDL definition")
    name = ""
    types: list[str] = []
    predicates: dict[str, int] = {}
    actions: list[PddlAction] = []
    for section in tree[1:]:
        head = _atom(section[0]).lower()
        if head == "domain":
            name = _atom(section[1])
        elif head == ":requirements":
            for req in section[1:]:
                r, line, col = req
                if r.lower() not in SUPPORTED_REQUIREMENTS:
                    raise PddlSyntaxError(f"unsupported requirement {r}", line, col)
        elif head == ":types":
            types = [n for n, _ in _parse_typed_list(section[1:])]
        elif head == ":predicates":
            for p in section[1:]:
                pname = _atom(p[0])
                predicates[pname] = len(_parse_typed_list(p[1:]))
        elif head == ":action":
            aname = _atom(section[1])
            params: list[tuple[str, str]] = []
            pre: list[Literal] = []
            add: list[Literal] = []
            dele: list[Literal] = []
            i = 2
            while i < len(section):
                key = _atom(section[i]).lower()
                if key == ":parameters":
                    params = _parse_typed_list(section[i + 1])
                elif key == ":precondition":
                    pre = _parse_conjunction(section[i + 1])
                elif key == ":effect":
                    for eff in _parse_conjunction_effects(section[i + 1]):
                        negated, lit = eff
                        (dele if negated else add).append(lit)
                else:
                    raise PddlError(f"action {aname}: unsupported key {key}")
                i += 2
            actions.append(
                PddlAction(
                    name=aname,
                    parameters=tuple(params),
                    preconditions=tuple(pre),
                    add_effects=tuple(add),
                    del_effects=tuple(dele),
                )
            )
    return PddlDomain(
        name=name, types=tuple(types), predicates=predicates, actions=tuple(actions)
    )


def _parse_conjunction_effects(expr):
    exprs = (
        expr[1:] if isinstance(expr, list) and expr and _is_head(expr[0], "and") else [expr]
    )
    for e in exprs:
        if isinstance(e, list) and e and _is_head(e[0], "not"):
            yield True, _parse_literal(e[1])
        else:
            yield False, _parse_literal(e)


def parse_problem(text: str) -> PddlProblem:
    tokens = _tokenize(text)
    if not tokens:
        raise PddlSyntaxError("empty input", 1, 1)
    tree, _ = _parse_sexpr(tokens, 0)
    name = domain = ""
    objects: dict[str, str] = {}
    init: list[Literal] = []
    goal: list[Literal] = []
    for section in tree[1:]:
        head = _atom(section[0]).lower()
        if head == "problem":
            name = _atom(section[1])
        elif head == ":domain":
            domain = _atom(section[1])
        elif head == ":objects":
            objects = dict(_parse_typed_list(section[1:]))
        elif head == ":init":
            init = [_parse_literal(e) for e in section[1:]]
        elif head == ":goal":
            goal = _parse_conjunction(section[1])
    return PddlProblem(
        name=name, domain=domain, objects=objects, init=tuple(init), goal=tuple(goal)
    )


# --- grounding ---------------------------------------------------------------


@dataclass(frozen=True)
class GroundAction:
    name: str
    args: tuple[str, ...]
    pre: frozenset[Literal]
    add: frozenset[Literal]
    dele: frozenset[Literal]

    def step(self) -> PlanStep:
        return PlanStep(self.name, self.args)


def _substitute(lit: Literal, binding: dict[str, str]) -> Literal:
    return (lit[0],) + tuple(binding.get(t, t) for t in lit[1:])


def ground_actions(domain: PddlDomain, problem: PddlProblem) -> list[GroundAction]:
    """Eager full instantiation; scenes are tiny. Skips bindings whose add and
    delete lists collide (degenerate self-moves)."""
    by_type: dict[str, list[str]] = {}
    for obj, typ in problem.objects.items():
        by_type.setdefault(typ, []).append(obj)
        by_type.setdefault("object", []).append(obj)
    for t in by_type:
        by_type[t].sort()

    grounded = []
    for action in domain.actions:
        domains = []
        for var, typ in action.parameters:
            domains.append([(var, o) for o in by_type.get(typ, [])])
        for combo in itertools.product(*domains):
            binding = dict(combo)
            if len(set(binding.values())) != len(binding):
                continue  # all-different convention keeps moves meaningful
            add = frozenset(_substitute(l, binding) for l in action.add_effects)
            dele = frozenset(_substitute(l, binding) for l in action.del_effects)
            if add & dele:
                continue
            grounded.append(
                GroundAction(
                    name=action.name,
                    args=tuple(binding[v] for v, _ in action.parameters),
                    pre=frozenset(_substitute(l, binding) for l in action.preconditions),
                    add=add,
                    dele=dele,
                )
            )
    grounded.sort(key=lambda g: (g.name, g.args))
    return grounded


# --- planning ----------------------------------------------------------------


def _h_add(state: frozenset[Literal], goal, actions) -> float:
    """Additive relaxation heuristic (delete effects ignored)."""
    cost: dict[Literal, float] = {lit: 0.0 for lit in state}
    changed = True
    while changed:
        changed = False
        for a in actions:
            c = 0.0
            ok = True
            for p in a.pre:
                cp = cost.get(p)
                if cp is None:
                    ok = False
                    break
                c += cp
            if not ok:
                continue
            c += 1.0
            for eff in a.add:
                if cost.get(eff, float("inf")) > c:
                    cost[eff] = c
                    changed = True
    total = 0.0
    for g in goal:
        cg = cost.get(g)
        if cg is None:
            return float("inf")
        total += cg
    return total


def _h_max(state: frozenset[Literal], goal, actions) -> float:
    cost: dict[Literal, float] = {lit: 0.0 for lit in state}
    changed = True
    while changed:
        changed = False
        for a in actions:
            c = 0.0
            ok = True
            for p in a.pre:
                cp = cost.get(p)
                if cp is None:
                    ok = False
                    break
                c = max(c, cp)
            if not ok:
                continue
            c += 1.0
            for eff in a.add:
                if cost.get(eff, float("inf")) > c:
                    cost[eff] = c
                    changed = True
    total = 0.0
    for g in goal:
        cg = cost.get(g)
        if cg is None:
            return float("inf")
        total = max(total, cg)
    return total


_HEURISTICS = {"hadd": _h_add, "hmax": _h_max}


def plan(domain: PddlDomain, problem: PddlProblem, heuristic: str = "hmax"):
    """A* over grounded states. Returns a Plan or the UNSOLVABLE sentinel.

    The default heuristic is h_max: it is admissible, so plans are optimal
    (the additive relaxation is available but can overestimate and then A*
    may return longer plans). Successors are expanded in (action name, args)
    order, so results are deterministic for a fixed input.
    """
    h_fn = _HEURISTICS[heuristic]
    actions = ground_actions(domain, problem)
    init = frozenset(problem.init)
    goal = tuple(problem.goal)

    def satisfied(state) -> bool:
        return all(g in state for g in goal)

    if satisfied(init):
        return Plan([])

    h0 = h_fn(init, goal, actions)
    if h0 == float("inf"):
        return UNSOLVABLE
    counter = itertools.count()
    open_heap = [(h0, 0.0, next(counter), init, [])]
    best_g: dict[frozenset, float] = {init: 0.0}
    while open_heap:
        f, g, _, state, path = heapq.heappop(open_heap)
        if g > best_g.get(state, float("inf")):
            continue
        if satisfied(state):
            return Plan([a.step() for a in path])
        for a in actions:
            if not a.pre <= state:
                continue
            nxt = frozenset((state - a.dele) | a.add)
            ng = g + 1.0
            if ng >= best_g.get(nxt, float("inf")):
                continue
            best_g[nxt] = ng
            h = h_fn(nxt, goal, actions)
            if h == float("inf"):
                continue
            heapq.heappush(open_heap, (ng + h, ng, next(counter), nxt, path + [a]))
    return UNSOLVABLE


def validate_plan(domain: PddlDomain, problem: PddlProblem, the_plan: Plan) -> bool:
    """STRIPS replay: every step applicable, goal holds at the end."""
    actions = {(a.name, a.args): a for a in ground_actions(domain, problem)}
    state = set(problem.init)
    for step in the_plan:
        a = actions.get((step.skill, step.args))
        if a is None or not a.pre <= state:
            return False
        state -= a.dele
        state |= a.add
    return all(g in state for g in problem.goal)
