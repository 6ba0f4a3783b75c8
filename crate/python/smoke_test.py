"""Smoke test for the pygrainflow extension module.

Build and run from the repository root:

    cargo build --release -p grainflow-py --features extension-module
    cp target/release/libpygrainflow.so python/pygrainflow.so
    python3 python/smoke_test.py
"""

import json
import math

import pygrainflow as gf


def main():
    anchors = gf.Anchors((0.0, 1.0), (-math.sqrt(3) / 2, -0.5), (math.sqrt(3) / 2, -0.5))
    assert anchors.angle_condition()
    x, y = anchors.fermat_point()
    assert math.hypot(x, y) < 1e-12

    ev = gf.coupling_eigenvalues([1.0, 2.0, 3.0])
    assert abs(ev[0]) < 1e-12 and abs(sum(ev) - 12.0) < 1e-9
    m = gf.coupling_matrix([1.0, 2.0, 3.0])
    assert all(abs(sum(row)) < 1e-12 for row in m)

    traj = anchors.simulate((0.1, 0.05), [0.3, -0.2, 0.1], t_end=0.5)
    assert len(traj) == 501
    assert traj.stop is None
    e = traj.energies
    assert all(b <= a + 1e-12 for a, b in zip(e, e[1:]))
    assert traj.dissipation_residual() < 1e-8

    cert = anchors.existence((0.1, 0.0), [0.5, 0.0, 0.0])
    assert cert["hypothesis_ok"] and abs(cert["t_exist"] - 1 / 135) < 1e-14
    grid, alphas, positions, ratios = anchors.picard((0.1, 0.0), [0.5, 0.0, 0.0])
    assert len(grid) == len(alphas) == len(positions) and max(ratios) < 0.8

    report = json.loads(anchors.verify((0.1, 0.05), [0.3, -0.2, 0.1], scenarios=5, samples=50))
    assert report["pass"], report

    try:
        gf.Anchors((-1.0, 0.0), (1.0, 0.0), (0.0, 0.1)).fermat_point()
    except gf.NoInteriorEquilibrium:
        pass
    else:
        raise AssertionError("obtuse anchors accepted")

    net = gf.Network.hexagonal_test()
    assert (net.grain_count, net.boundary_count, net.junction_count) == (4, 6, 3)
    run = net.simulate(min_edge_length=0.05)
    assert run.stop is not None and "boundary" in run.stop[1]
    assert run.dissipation_residual() < 1e-8
    assert len(run.orientations[0]) == 4

    single = gf.Network.single_junction(anchors, (0.1, 0.05), [0.3, -0.2, 0.1])
    assert abs(single.energy() - anchors.energy((0.1, 0.05), [0.3, -0.2, 0.1])) < 1e-13

    print("smoke test ok")


if __name__ == "__main__":
    main()
