"""Smoke test for the pyparabolic extension.

Build and install it first:

    pip install -e crates/py --no-build-isolation
"""

import math

import pyparabolic as pp

LOG2 = math.log(2.0)


def main():
    square = pp.RationalMap.example("square")
    quad = pp.RationalMap.example("quad_parabolic")
    blaschke = pp.RationalMap.example("blaschke_parabolic")

    assert square.degree == 2
    assert quad(0.5) == 0.5
    assert abs(quad.derivative(0.5) - 1.0) < 1e-12
    for w in quad.preimages(0.3 + 0.2j):
        assert abs(quad(w) - (0.3 + 0.2j)) < 1e-12
    same = pp.RationalMap.from_json(blaschke.to_json())
    assert same.to_json() == blaschke.to_json()
    # Coefficients are ascending: (1 + 3z^2) / (3 + z^2).
    built = pp.RationalMap([1, 0, 3], [3, 0, 1])
    assert abs(built(0.2 + 0.7j) - blaschke(0.2 + 0.7j)) < 1e-15

    (p,) = quad.omega()
    assert abs(p - 0.5) < 1e-12
    assert square.omega() == []

    for t in (0.0, 0.5, 1.0, 2.0):
        est = pp.pressure(square, pp.Potential.geometric(t), n=14, anchor=1 + 0j, extrapolation="last")
        assert abs(est.value - (1.0 - t) * LOG2) < 1e-9, est

    phi = pp.Potential("geometric:t=0.5")
    assert str(phi) == "geometric:t=0.5"
    tree = pp.pressure(quad, phi, n=10, anchor=-0.5 - 1j, extrapolation="last").value
    periodic = pp.pressure(quad, phi, method="periodic", n=10, extrapolation="last").value
    assert abs(tree - periodic) < 0.05, (tree, periodic)
    shifted = pp.pressure(quad, phi.shifted(0.25), n=10, anchor=-0.5 - 1j, extrapolation="last").value
    assert abs(shifted - tree - 0.25) < 1e-9

    assert abs(pp.a_omega(blaschke, phi)) < 1e-9
    a, p, gap = pp.gap_check(blaschke, phi)
    assert gap and p > a

    h = pp.bowen_root(blaschke)
    assert abs(h - 1.0) < 0.03, h

    # The longest bad suffix with a good prefix: [1] + [1, 0, 1, 0, 0].
    assert pp.decompose([1, 1, 0, 1, 0, 0], 0.5) == (1, 5)

    alpha, m, r, global_min, ok = pp.calibrate(quad)
    assert ok and r > 1.0 and global_min >= 1.0 - 1e-6

    try:
        pp.RationalMap.example("nope")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown examples must raise ValueError")

    print(f"pyparabolic {pp.__version__}: smoke test passed (h = {h:.4f}, alpha = {alpha}, M = {m:.3f})")


if __name__ == "__main__":
    main()
