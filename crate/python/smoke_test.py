"""Smoke test for the orbimorse Python bindings.

Build first with `pip install --no-build-isolation -e crates/python`.
"""

import math
import sys

import orbimorse as om


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    assert om.weighted_proj_h0([1, 1], 3) == 4
    assert om.weighted_proj_h0([1, 2], 4) == 3

    p1 = om.Catalog.wps([1, 1])
    assert p1.id == "wps" and p1.dimension == 1
    table = dict(om.cohomology_table(p1, [1, 2, 3]))
    assert table[(3, 0)] == 4 and table[(3, 1)] == 0

    integrals, degenerate = om.morse_integrals(p1, 256)
    assert close(integrals[0], 1.0, 1e-6), integrals
    assert degenerate == 0.0

    for p, rho, tol, ok in om.strong_morse(p1, 1, [1, 2, 4, 8]):
        assert ok and close(rho, -1.0 / p, 1e-12), (p, rho, tol)

    torus = om.Catalog.torus([1], k=2)
    spec = om.spectrum(torus, 2, 0, 16)
    h = dict(om.cohomology_table(torus, [2]))
    assert spec[0][0] < 1e-8 and spec[0][1] == h[(2, 0)], (spec[:3], h)
    assert max(abs(r) for r in om.trace_chain(torus, 2, 1.0, 16)) < 1e-8

    assert close(om.lim_u([1.0], 50.0, 0), om.limit_u_infinity([1.0], 0), 1e-12)

    cz2 = om.Catalog.local_model([1.0], k=2)
    ratio = om.singular_diagonal_factor(cz2, [0j], 1.0, 256)
    assert close(ratio, 2.0, 1e-6), ratio
    slope, _ = om.kernel_rate(cz2, [complex(1.0, 0.0)], 1.0, [64, 128, 256, 512])
    assert slope <= -0.4 or math.isinf(slope), slope

    verdict, integral = om.moishezon_check(p1, 64, 0)
    assert verdict.startswith("moishezon") and integral > 0, (verdict, integral)

    roundtrip = om.Catalog.from_json(p1.to_json())
    assert roundtrip.to_json() == p1.to_json()

    try:
        om.Catalog.wps([2, 4]).dimension
        om.cohomology_table(om.Catalog.wps([2, 4]), [1])
    except ValueError:
        pass
    else:
        raise AssertionError("non-well-formed weights accepted")

    assert om.run_cli(["--version"]) == 0
    print("python smoke test: ok")


if __name__ == "__main__":
    sys.exit(main())
