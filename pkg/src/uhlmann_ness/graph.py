"""Define the sweep graph.

A planning edge fans the declared tasks out with one ``Send`` each; every
worker evaluates a single row and the ``rows`` reducer puts them back in
declaration order.
"""

from typing import Any, Dict

from langchain_core.runnables import RunnableConfig
from langgraph.constants import Send
from langgraph.graph import END, START, StateGraph

from uhlmann_ness.configuration import Configuration
from uhlmann_ness.records import evaluate_task
from uhlmann_ness.state import SweepState, TaskState


def continue_to_rows(state: SweepState) -> list[Send]:
    """One worker per task."""
    return [Send("evaluate_row", {"task": task}) for task in state.get("tasks", ())]


def evaluate_row(state: TaskState, config: RunnableConfig) -> Dict[str, Any]:
    configuration = Configuration.from_runnable_config(config)
    return {"rows": [evaluate_task(state["task"], configuration)]}


workflow = StateGraph(SweepState, config_schema=Configuration)

workflow.add_node("evaluate_row", evaluate_row)

workflow.add_conditional_edges(START, continue_to_rows, ["evaluate_row"])
workflow.add_edge("evaluate_row", END)

graph = workflow.compile()
graph.name = "Uhlmann NESS sweep"
