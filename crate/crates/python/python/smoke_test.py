"""Smoke test for the ltlab extension module.

Build it with `maturin develop` (or copy target/release/libltlab.so to
ltlab.so somewhere on PYTHONPATH) and run `python smoke_test.py`.
"""

import json
import math

import ltlab


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


def main():
    c = ltlab.constants()
    close(c["c_thm1"], 2 / (3 * math.sqrt(3)), 1e-15)
    assert c["c_keller"] < c["c_thm1"] < c["twice_lcl_1_1"]
    close(ltlab.lt_classical(1, 1.0), 2 / (3 * math.pi), 1e-15)
    close(ltlab.lt_classical(2, 1.5, quadrature=True), ltlab.lt_classical(2, 1.5), 1e-12)
    x, m = ltlab.keller_minimize(3.0)
    close(x, 1.0, 1e-12)
    close(m, -2.0, 1e-12)

    grid = ltlab.Grid(20.0, 0.01)
    assert len(grid) == len(grid.nodes()) == len(grid.weights())
    close(grid.integrate([math.exp(-x * x) for x in grid.nodes()]), math.sqrt(math.pi), 1e-9)

    pt2 = ltlab.PotentialSpec.poschl_teller(2.0)
    assert ltlab.PotentialSpec.from_json(pt2.to_json()) == pt2
    spec = ltlab.spectrum(pt2, grid)
    assert len(spec) == 2
    close(spec.negatives[0], -4.0, 1e-6)
    close(spec.negatives[1], -1.0, 1e-6)

    r = ltlab.check(pt2, grid)
    assert r.passed and r.bound_states == 2
    close(r.ratio, 0.21658, 1e-4)
    assert json.loads(r.to_json())["pass"] is True

    m3 = ltlab.PotentialSpec.random_psd(3, seed=7)
    assert m3.channels == 3
    assert ltlab.check(m3, ltlab.Grid(20.0, 0.02)).passed
    assert ltlab.holder_step(m3, ltlab.Grid(20.0, 0.02))["pass"]

    coarse = ltlab.Grid(10.0, 0.02)
    r2 = ltlab.check_separable(ltlab.PotentialSpec.poschl_teller(1.0), ltlab.PotentialSpec.poschl_teller(1.0), coarse)
    assert r2.d == 2 and r2.passed

    assert ltlab.al_eigenvalue_identity(-2.0, 2.5, 1.0)["pass"]
    assert ltlab.sobolev_random(coarse, 5, channels=2, seed=1)["pass"]

    sw = ltlab.sweep("pt", [0.2, 1.0], [1.0, 1.0], coarse, points=9)
    assert sw.evaluations == 9 and sw.best_ratio <= c["c_thm1"]

    try:
        ltlab.PotentialSpec.poschl_teller(-1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative s accepted")

    print("ltlab smoke test: ok")


if __name__ == "__main__":
    main()
