import pytest

from uhlmann_ness import graph
from uhlmann_ness.configuration import Configuration
from uhlmann_ness.models import ModelPoint
from uhlmann_ness.records import SweepRow, TranslationalRow
from uhlmann_ness.scaling import grid_points, plan_tasks, sweep


def chain_tasks():
    base = ModelPoint(family="boundary_xy")
    points = grid_points(base, {"delta": (0.5, 1.5, 2), "h": (0.2, 0.6, 2)})
    return plan_tasks(points, [4, 6])


@pytest.mark.asyncio
async def test_sweep_graph_returns_rows_in_task_order() -> None:
    tasks = chain_tasks()
    res = await graph.ainvoke(
        {"tasks": tasks},
        {"max_concurrency": 4, "configurable": Configuration().as_configurable()},
    )
    rows = res["rows"]
    assert [row.index for row in rows] == [task.index for task in tasks]
    assert all(isinstance(row, SweepRow) and row.flag == "" for row in rows)
    assert [row.n for row in rows[:4]] == [4, 6, 4, 6]


def test_worker_count_does_not_change_rows() -> None:
    tasks = chain_tasks()
    assert sweep(tasks, threads=1) == sweep(tasks, threads=4)


def test_empty_sweep() -> None:
    assert sweep([]) == []


def test_failed_rows_are_flagged_not_raised() -> None:
    # a vanishing bath leaves the drift gapless
    point = ModelPoint(
        family="boundary_xy",
        params=dict(kappa_l_plus=0.0, kappa_l_minus=0.0, kappa_r_plus=0.0, kappa_r_minus=1e-300),
    )
    good = ModelPoint(family="boundary_xy")
    rows = sweep(plan_tasks([good, point], [4]))
    assert rows[0].flag == ""
    assert rows[1].flag != ""
    assert rows[1].U_mn is None


def test_translational_rows() -> None:
    base = ModelPoint(family="example_ring", params={"theta": 0.3})
    tasks = plan_tasks(
        grid_points(base, {"lambda": (0.3, 0.6, 2)}), [None], ("lambda", "theta"), kind="translational"
    )
    rows = sweep(tasks, threads=2)
    assert all(isinstance(row, TranslationalRow) for row in rows)
    for row in rows:
        assert row.flag == ""
        assert row.U_bar_quad == pytest.approx(row.U_bar_res, abs=1e-7)
        assert row.xi_inv > 0
        assert row.gap > 0
