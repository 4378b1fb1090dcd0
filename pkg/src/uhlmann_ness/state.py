"""Define the state structures for the sweep graph."""

from __future__ import annotations

from typing import Annotated, Any, Sequence, TypedDict


def sorting_reducer(left: Any, right: Any) -> list[Any]:
    """Merge row lists, ordered by their declaration ``index``."""
    if not isinstance(left, list):
        left = [left]
    if not isinstance(right, list):
        right = [right]
    return sorted(left + right, key=lambda row: row.index)


class SweepState(TypedDict, total=False):
    """Input and output of the sweep graph.

    ``tasks`` is the declared work list; workers append to ``rows`` and the
    reducer keeps them in task order whatever the completion order was.
    """

    tasks: Sequence[Any]
    rows: Annotated[list, sorting_reducer]


class TaskState(TypedDict):
    """What one worker receives through ``Send``."""

    task: Any
