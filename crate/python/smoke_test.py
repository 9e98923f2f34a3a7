"""Smoke test for the `dsab` extension module.

Build and stage the module first:

    cargo build --release -p dsab-python --features extension-module
    cp target/release/libdsab.so python/dsab.so
    python3 python/smoke_test.py
"""

import json
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import dsab  # noqa: E402


def main():
    assert dsab.count(16, 3) == 560
    assert dsab.count(28, 6) == 376740
    assert dsab.bounds(16, 3, 1) == (1.0, 14.0)
    assert dsab.decode([2.2, 4.4, 7.3], 16) == [2, 4, 7]
    assert dsab.decode([2.0, 7.0, 4.0], 16) is None

    record = dsab.GroundMotion.synthetic(duration=8.0)
    assert len(record) == 401
    assert abs(record.peak_abs() - 3.13) < 1e-9

    model = dsab.Model(n_floors=6)
    assert model.n_positions == 16
    assert len(model.links()) == 16
    assert abs(model.frequencies()[0] - 18.42) < 0.01

    ev = dsab.Evaluator(model, record)
    bare = ev.summary([])
    assert bare["top_left"] == bare["top_right"] > 0.0
    left, right = ev.top_floor_history([2, 3])
    assert len(left) == len(right) == len(record)

    front = ev.exhaustive_front(3, "drift-acc")
    assert front and all(a[0] <= b[0] for a, b in zip(front, front[1:]))

    run = json.loads(ev.optimize("mopso2", 3, "drift-acc", population=10, iterations=5, seed=3))
    assert run["n_fe"] == 50
    oracle = [(f1, f2) for f1, f2, _ in front]
    for p in run["points"]:
        assert any(o[0] <= p["f1"] and o[1] <= p["f2"] for o in oracle)

    try:
        ev.objectives([1, 99], "lr-disp")
    except ValueError:
        pass
    else:
        raise AssertionError("out-of-range configuration accepted")

    print("dsab smoke test passed")


if __name__ == "__main__":
    main()
