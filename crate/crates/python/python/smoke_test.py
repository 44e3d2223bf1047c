"""Smoke test for the spinsaw extension module. Run after `maturin develop`."""

import math

import spinsaw


def main():
    g = spinsaw.Graph(1, [])
    assert abs(spinsaw.exact_log_partition(spinsaw.SpinSystem.ising(g, 0.0)) - math.log(2)) < 1e-15

    cycle = spinsaw.Graph.generate("cycle", n=4)
    system = spinsaw.SpinSystem.ising(cycle, 0.2)
    exact = spinsaw.exact_log_partition(system)
    result = spinsaw.approx_log_partition(system, 0.1, 3.0)
    assert result.guarantee_met and abs(result.log_z - exact) <= 0.1, result

    assert abs(spinsaw.critical_coupling(3.0) - 0.5493061443340549) < 1e-15
    assert spinsaw.classify_mixing(system, 3.0)["regime"] == "inverse_temperature"

    triangle = spinsaw.SpinSystem.from_json('{"n": 3, "ising": {"edges": [[0,1,1],[1,2,1],[0,2,1]]}}')
    tree = spinsaw.build_saw_tree(triangle, 0, condition={1: "-"})
    p_tree = tree.exact_marginal()
    p_graph = spinsaw.exact_marginal(triangle, 0, "1=-")
    assert abs(p_tree - p_graph) < 1e-12, (p_tree, p_graph)
    assert spinsaw.build_saw_tree(triangle, 0).outline() == "0\n  1\n    2\n      0 +\n  2\n    1\n      0 -\n"

    again = spinsaw.SpinSystem.from_json(system.to_json())
    assert abs(spinsaw.exact_log_partition(again) - exact) == 0.0

    rows = spinsaw.empirical_decay(system, 0, [1, 2, 3], 3.0)
    assert all(r["observed_log"] <= r["bound"] for r in rows)

    big = spinsaw.SpinSystem.ising(spinsaw.Graph.generate("complete", n=30), 0.01)
    try:
        spinsaw.exact_log_partition(big)
    except spinsaw.CapExceeded:
        pass
    else:
        raise AssertionError("expected CapExceeded")

    print("smoke test passed")


if __name__ == "__main__":
    main()
