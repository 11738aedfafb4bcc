"""Named built-in transformations and their DSL equivalents."""
from __future__ import annotations

import re
from dataclasses import dataclass

from . import dsl
from .errors import UnknownTaskError

BUILTINS = ("inversion", "transposition", "conjugation", "iteration")
SUBGROUP_TASKS = {"so_inversion": "so", "diag_inversion": "diag"}
TASK_NAMES = BUILTINS + tuple(SUBGROUP_TASKS)


@dataclass(frozen=True)
class Task:
    name: str
    order: int | None = None  # n for iteration

    def __post_init__(self):
        if self.name not in TASK_NAMES:
            raise UnknownTaskError(f"unknown task {self.name!r}; known: {', '.join(TASK_NAMES)}")
        if self.name == "iteration":
            if self.order is None or int(self.order) != self.order or self.order <= 0:
                raise ValueError(f"iteration needs a positive integer order, got {self.order!r}")
        elif self.order is not None:
            raise ValueError(f"task {self.name!r} takes no order")

    @classmethod
    def parse(cls, text: str, order: int | None = None) -> "Task":
        """Accepts ``inversion``, ``iteration:3``, ``iteration(3)`` or ``iteration`` with ``order``."""
        m = re.fullmatch(r"\s*([a-z_]+)\s*(?:[:(]\s*(-?\d+)\s*\)?)?\s*", text)
        if not m:
            raise UnknownTaskError(f"cannot parse task {text!r}")
        name, n = m.group(1), m.group(2)
        if n is not None:
            order = int(n)
        return cls(name, order)

    @property
    def subgroup(self) -> str:
        return SUBGROUP_TASKS.get(self.name, "full")

    @property
    def base(self) -> str:
        """The unrestricted map underlying a subgroup task."""
        return "inversion" if self.name in SUBGROUP_TASKS else self.name

    def __str__(self):
        return f"iteration({self.order})" if self.name == "iteration" else self.name

    def expr(self) -> dsl.FuncExpr:
        base = self.base
        if base == "inversion":
            return dsl.Inverse()
        if base == "transposition":
            return dsl.Transpose()
        if base == "conjugation":
            return dsl.Conjugate()
        return dsl.Power(self.order)


def as_task(task, order: int | None = None) -> Task:
    if isinstance(task, Task):
        return task
    return Task.parse(task, order)
