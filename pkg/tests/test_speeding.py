from fractions import Fraction

import pytest

from fdpsim.instance import INF, Instance, Request, generate_feasible, validate
from fdpsim.metric import MetricGraph
from fdpsim.sim import run_online
from fdpsim.speeding import NoFreeVehicle, SpeedConfig, SpeedingAlgorithm, cvrp_window_bound, run_speeding
from fdpsim.tours import exact_cvrp


def test_config_half():
    cfg = SpeedConfig(Fraction(1, 2), "exact")
    assert cfg.alpha == 1 and cfg.gamma == 8 and cfg.speed == Fraction(3, 2)
    assert cfg.flow_bound(1) == 16


def test_config_modes():
    assert SpeedConfig(Fraction(1, 4), "tsp2").gamma == 24
    assert SpeedConfig(Fraction(1, 4), "cvrp").speed == Fraction(13, 4)
    with pytest.raises(ValueError):
        SpeedConfig(1, "exact")
    with pytest.raises(ValueError):
        SpeedConfig(Fraction(1, 2), "other")


def test_empty_instance():
    g = MetricGraph(["o", "a"], [("o", "a", 1)], "o")
    sch = run_speeding(Instance(g, 2, INF, ()), 4, SpeedConfig(Fraction(1, 2)))
    assert sch.vehicles == ((), ())


def _run(seed, k, c, eps, mode, **kw):
    inst, _ = generate_feasible(seed, n_vertices=10, k=k, capacity=c, horizon=80, F_target=10,
                                max_requests=kw.get("max_requests", 20), tree=False, extra_edges=3)
    cfg = SpeedConfig(eps, mode)
    res = run_online(inst, SpeedingAlgorithm(10, cfg), speed=cfg.speed)
    return inst, cfg, res


@pytest.mark.parametrize("seed", range(12))
def test_exact_mode_within_bound(seed):
    inst, cfg, res = _run(seed, 3, 2, Fraction(1, 2), "exact", max_requests=12)
    assert res.report.max_flow <= cfg.flow_bound(10)
    for _, size, pieces, longest in res.algorithm.windows:
        assert pieces <= inst.k
        assert longest <= cfg.subtour_cap(10) + 2 * 10


@pytest.mark.parametrize("mode,c", [("tsp2", INF), ("cvrp", 2), ("cvrp", INF)])
@pytest.mark.parametrize("seed", range(6))
def test_approximate_modes_within_bound(mode, c, seed):
    inst, cfg, res = _run(seed, 2, c, Fraction(1, 2), mode, max_requests=30)
    assert res.report.max_flow <= cfg.flow_bound(10)
    validate(res.instance, res.schedule, cfg.speed)


def test_tsp2_rejects_capacity():
    with pytest.raises(ValueError):
        _run(0, 1, 2, Fraction(1, 2), "tsp2")


def test_too_small_F_runs_out_of_vehicles():
    g = MetricGraph(["o", "a", "b"], [("o", "a", 10), ("o", "b", 10)], "o")
    inst = Instance(g, 1, INF, (Request(0, "a"), Request(0, "b")))
    cfg = SpeedConfig(Fraction(1, 2))
    with pytest.raises(NoFreeVehicle):
        run_online(inst, SpeedingAlgorithm(1, cfg), speed=cfg.speed)


def test_window_bound_formula():
    g = MetricGraph(["o", "a"], [("o", "a", 1)], "o")
    inst = Instance(g, 1, INF, ())
    assert cvrp_window_bound(inst, 3, 3, 5) == 10
    with pytest.raises(ValueError):
        cvrp_window_bound(inst, 4, 3, 5)


def test_window_bound_can_fail_for_bad_F():
    g = MetricGraph(["o", "a"], [("o", "a", 10)], "o")
    inst = Instance(g, 1, INF, (Request(0, "a"),))
    tour = exact_cvrp(g, {0: "a"}, INF)
    assert tour.length > cvrp_window_bound(inst, 0, 0, 1)
