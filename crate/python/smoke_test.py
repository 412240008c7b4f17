"""Smoke test for the Python extension.

Build it first:
    cargo build -p fejer-py --release --features extension-module
    cp target/release/libfejer.so python/fejer.so
then run `python3 python/smoke_test.py` from the workspace root.
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import fejer  # noqa: E402


def close(x, y, tol=1e-9):
    return abs(x - y) <= tol


def main():
    sq = fejer.Problem("x^2", 0.0, 1.0, fprime="2*x")
    r = fejer.bound_h_convex(sq, "power:1")
    assert close(r["measured"], 1 / 6) and close(r["bound"], 0.25) and r["satisfied"], r
    assert close(fejer.bound_convex(sq)["bound"], 0.25)
    assert close(sq.m(0.25), 0.5) and close(sq.m_abs_integral(), 0.5)
    lower, middle, upper = sq.fejer_triple()
    assert lower <= middle <= upper
    assert all(rep["satisfied"] for rep in sq.verify_lemma(21))

    root = fejer.Problem("(2/3)*x^1.5", 0.0, 1.0, fprime="x^0.5")
    r = fejer.bound_h_convex(root, "power:0.5")
    assert close(r["measured"], 1 / 15) and close(r["bound"], 0.160947, 1e-6), r
    assert close(r["bound"], fejer.bound_h_convex(root, "power:0.5", mirror=True)["bound"], 1e-8)
    assert close(r["bound"], fejer.bound_s_convex(root, 0.5)["bound"])

    m = fejer.means_bound(1.0, 2.0, 3.0, 1.0)
    assert close(m["measured"], 0.75) and close(m["bound"], 1.875), m
    mo = fejer.moment_bound("6*(x-1)*(2-x)", 1.0, 2.0, 1.0, "power:1")
    assert close(mo["measured"], 0.0) and close(mo["bound"], 0.5), mo

    ex = fejer.Problem("exp(x)", 0.0, 2.0, fprime="exp(x)")
    q = fejer.quadrature(ex, 4)
    assert q["certified"] and close(q["error_bound"], 0.81520, 5e-6), q
    ref = fejer.refine(sq, 0.13)
    assert ref["converged"] and len(ref["partition"]) - 1 <= 2, ref
    assert math.isclose(ref["partition"][-1], 1.0)

    assert not fejer.check_h_convex("sqrt(x)", 0.0, 1.0, "power:1")["passed"]
    assert fejer.check_h_convex("sqrt(x)", 0.0, 1.0, "power:0.5")["passed"]

    total, passed, failed = fejer.run_battery()
    assert total >= 25 and passed == total, failed

    try:
        fejer.Problem("x^", 0.0, 1.0)
    except ValueError as e:
        assert "syntax" in str(e)
    else:
        raise AssertionError("bad expression accepted")

    print(f"python smoke test: ok ({passed}/{total} battery cases)")


if __name__ == "__main__":
    main()
