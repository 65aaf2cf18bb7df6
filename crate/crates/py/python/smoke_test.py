"""Smoke test for the pfmc extension module."""

import math
import tempfile
from pathlib import Path

import pfmc

CIRCLE = """
d = 2
n = 64
eps = 0.05
t_end = 0.004
hook_every = 4

[shape]
kind = "sphere"
center = [0.5, 0.5]
radius = 0.25
"""


def main():
    assert abs(pfmc.sigma() - 4.0 / 3.0) < 1e-10
    assert abs(pfmc.traveling_wave_speed([0.3, 0.0], 0.1, [1.0, 0.0]) - 0.4) < 1e-15
    r = pfmc.sphere_radius(0.25, 0.0, 2, 0.01)
    assert abs(r - math.sqrt(0.25**2 - 0.02)) < 1e-9

    sim = pfmc.Simulation(CIRCLE)
    assert sim.shape == [64, 64]
    rec0 = sim.record()
    sim.step(10)
    rec1 = sim.record()
    assert rec1["interface_radius"] < rec0["interface_radius"]
    assert len(sim.phi()) == 64 * 64
    assert max(abs(v) for v in sim.phi()) <= 1.0

    with tempfile.TemporaryDirectory() as d:
        rows = pfmc.run(CIRCLE, d)
        assert (Path(d) / "diag.csv").exists()
    radii = [row["interface_radius"] for row in rows]
    assert all(b < a for a, b in zip(radii, radii[1:]))

    ok, checks = pfmc.verify_config(CIRCLE)
    names = [c[0] for c in checks]
    assert ok, checks
    assert "xi_nonpositive" in names and "energy" in names

    try:
        pfmc.Simulation(CIRCLE.replace("radius = 0.25", "radius = 0.25\ncolour = 1"))
    except ValueError as e:
        assert "config" in str(e)
    else:
        raise AssertionError("unknown key accepted")
    print("pfmc smoke test ok")


if __name__ == "__main__":
    main()
