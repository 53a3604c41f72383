"""Host wall-clock attribution by platform component.

Every kernel dispatch charges the elapsed host time to the component on
top of the resumed process's label stack; bus and device code push
their own labels around their critical sections. Scheduler overhead
between dispatches is charged to the next dispatched component, so the
measured shares cover the whole run.
"""

from __future__ import annotations

from collections import defaultdict
from time import perf_counter


class WallStats:
    def __init__(self, kernel):
        self.kernel = kernel
        self.components: dict[str, float] = defaultdict(float)
        self._label = "kernel"
        self._last = perf_counter()
        self._fallback = ["kernel"]
        kernel.dispatch_hook = self._on_dispatch

    def _switch(self, label: str) -> None:
        t = perf_counter()
        self.components[self._label] += t - self._last
        self._last = t
        self._label = label

    def _on_dispatch(self, proc) -> None:
        self._switch(proc.component_stack[-1])

    def _stack(self) -> list[str]:
        proc = self.kernel.current
        return proc.component_stack if proc is not None else self._fallback

    def push(self, label: str) -> None:
        self._stack().append(label)
        self._switch(label)

    def pop(self) -> None:
        stack = self._stack()
        if len(stack) > 1:
            stack.pop()
        self._switch(stack[-1])

    def close(self) -> None:
        self._switch("kernel")

    def shares(self) -> dict[str, float]:
        """Fraction of measured wall time per component; sums to 1."""
        total = sum(self.components.values())
        if total <= 0:
            return {}
        return {name: t / total for name, t in self.components.items() if t > 0}
