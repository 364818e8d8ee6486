"""Behavior tree executor.

Control-flow nodes route a periodic tick left to right; leaves return one of
success / failure / running. The two custom processors needed here are the
memory sequence (resumes past already-succeeded children) and
parallel-first-success (succeeds as soon as one concurrently ticked child
succeeds, halting the rest).
"""
from __future__ import annotations

import enum
from typing import Callable


class TickResult(enum.Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    RUNNING = "running"


class BTError(Exception):
    pass


class BTNode:
    kind = "node"

    def __init__(self, name: str = ""):
        self.name = name or self.kind
        self.children: list[BTNode] = []
        self._running = False

    # -- lifecycle -------------------------------------------------------

    def tick(self, blackboard: dict) -> TickResult:
        result = self._tick(blackboard)
        if not isinstance(result, TickResult):
            raise BTError(f"{self.name}: tick returned {result!r}")
        self._running = result is TickResult.RUNNING
        return result

    def _tick(self, blackboard: dict) -> TickResult:
        raise NotImplementedError

    def halt(self, blackboard: dict) -> None:
        """Preempt this subtree; running leaves are notified exactly once."""
        if self._running:
            self._running = False
            self._on_halt(blackboard)
        for child in self.children:
            child.halt(blackboard)

    def _on_halt(self, blackboard: dict) -> None:
        pass

    def reset(self) -> None:
        self._running = False
        for child in self.children:
            child.reset()

    # -- validation and inspection ----------------------------------------

    def validate(self) -> "BTNode":
        seen: set[int] = set()

        def walk(node: BTNode):
            if id(node) in seen:
                raise BTError(f"node {node.name!r} appears twice (tree must be acyclic)")
            seen.add(id(node))
            if node.is_leaf:
                if node.children:
                    raise BTError(f"leaf {node.name!r} must not have children")
            elif not node.children:
                raise BTError(f"control node {node.name!r} needs at least one child")
            for child in node.children:
                walk(child)

        walk(self)
        return self

    @property
    def is_leaf(self) -> bool:
        return False

    def dump(self, indent: int = 0) -> str:
        pad = "  " * indent
        lines = [f"{pad}[{self.kind}] {self.name}"]
        for child in self.children:
            lines.append(child.dump(indent + 1))
        return "\n".join(lines)


class Sequence(BTNode):
    """Logical AND: fails at the first failing child, re-ticks from the left."""

    kind = "sequence"

    def __init__(self, children, name: str = ""):
        super().__init__(name)
        self.children = list(children)

    def _tick(self, blackboard):
        for child in self.children:
            result = child.tick(blackboard)
            if result is not TickResult.SUCCESS:
                return result
        return TickResult.SUCCESS


class SequenceStar(BTNode):
    """Memory sequence: remembers succeeded children and resumes after them."""

    kind = "sequence-star"

    def __init__(self, children, name: str = ""):
        super().__init__(name)
        self.children = list(children)
        self._next = 0

    def _tick(self, blackboard):
        while self._next < len(self.children):
            result = self.children[self._next].tick(blackboard)
            if result is TickResult.SUCCESS:
                self._next += 1
                continue
            return result
        return TickResult.SUCCESS

    def reset(self):
        self._next = 0
        super().reset()


class Selector(BTNode):
    """Logical OR: succeeds at the first succeeding child."""

    kind = "selector"

    def __init__(self, children, name: str = ""):
        super().__init__(name)
        self.children = list(children)

    def _tick(self, blackboard):
        for child in self.children:
            result = child.tick(blackboard)
            if result is not TickResult.FAILURE:
                return result
        return TickResult.FAILURE


class Parallel(BTNode):
    """Ticks every unfinished child; fails if one fails, succeeds when all
    have succeeded."""

    kind = "parallel"

    def __init__(self, children, name: str = ""):
        super().__init__(name)
        self.children = list(children)
        self._done: set[int] = set()

    def _tick(self, blackboard):
        failed = False
        for i, child in enumerate(self.children):
            if i in self._done:
                continue
            result = child.tick(blackboard)
            if result is TickResult.SUCCESS:
                self._done.add(i)
            elif result is TickResult.FAILURE:
                failed = True
        if failed:
            self._halt_children(blackboard)
            return TickResult.FAILURE
        if len(self._done) == len(self.children):
            return TickResult.SUCCESS
        return TickResult.RUNNING

    def _halt_children(self, blackboard):
        for child in self.children:
            child.halt(blackboard)
        self._done.clear()

    def reset(self):
        self._done.clear()
        super().reset()


class ParallelFirstSuccess(BTNode):
    """Ticks all children; succeeds as soon as one succeeds (remaining
    running children are halted), fails if one fails."""

    kind = "parallel-first-success"

    def __init__(self, children, name: str = ""):
        super().__init__(name)
        self.children = list(children)

    def _tick(self, blackboard):
        results = [child.tick(blackboard) for child in self.children]
        if TickResult.SUCCESS in results:
            self._halt_children(blackboard)
            return TickResult.SUCCESS
        if TickResult.FAILURE in results:
            self._halt_children(blackboard)
            return TickResult.FAILURE
        return TickResult.RUNNING

    def _halt_children(self, blackboard):
        for child in self.children:
            child.halt(blackboard)


class Decorator(BTNode):
    """Single-child pass-through; subclass and override transform()."""

    kind = "decorator"

    def __init__(self, child: BTNode, name: str = ""):
        super().__init__(name)
        self.children = [child]

    def transform(self, result: TickResult) -> TickResult:
        return result

    def _tick(self, blackboard):
        return self.transform(self.children[0].tick(blackboard))


class ConditionLeaf(BTNode):
    """Instantaneous predicate; never returns running."""

    kind = "condition-leaf"

    def __init__(self, predicate: Callable[[dict], bool], name: str = ""):
        super().__init__(name)
        self.predicate = predicate

    @property
    def is_leaf(self):
        return True

    def _tick(self, blackboard):
        return TickResult.SUCCESS if self.predicate(blackboard) else TickResult.FAILURE


class ActionLeaf(BTNode):
    """Iterative action; override on_tick / on_halt in concrete skills."""

    kind = "action-leaf"

    @property
    def is_leaf(self):
        return True

    def _tick(self, blackboard):
        return self.on_tick(blackboard)

    def _on_halt(self, blackboard):
        self.on_halt(blackboard)

    def on_tick(self, blackboard: dict) -> TickResult:
        raise NotImplementedError

    def on_halt(self, blackboard: dict) -> None:
        pass


class AlwaysSuccess(ConditionLeaf):
    kind = "condition-leaf"

    def __init__(self, name: str = "always-success"):
        super().__init__(lambda bb: True, name)


def assemble_bt(plan, model, registry=None, values: dict | None = None, success: dict | None = None) -> BTNode:
    """Build the policy tree for a plan: a memory sequence of one guarded
    subtree per skill, expanded by the skill registry.

    ``values`` maps learnable-parameter names (see collect_learnables) to the
    trial's values; ``success`` carries the task thresholds used by condition
    nodes.
    """
    if len(plan) == 0:
        return AlwaysSuccess().validate()
    from .skills import SKILL_REGISTRY, SkillError, expand_plan_step, plan_values_by_step

    registry = registry if registry is not None else SKILL_REGISTRY
    for step in plan:
        if step.skill not in model.skills:
            raise SkillError(f"plan step {step.skill!r} has no skill template")
        if step.skill not in registry:
            raise SkillError(f"skill {step.skill!r} has no registered BT expansion")
    per_step = plan_values_by_step(model, plan, values or {})
    subtrees = [
        expand_plan_step(step, index, model, registry, per_step.get(index), success)
        for index, step in enumerate(plan)
    ]
    return SequenceStar(subtrees, name="plan").validate()
