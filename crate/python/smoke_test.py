"""Smoke test for the pycarleson extension.

Build and copy the module next to this file first:

    cargo build --release -p carleson-lab-py --features extension-module
    cp target/release/libpycarleson.so python/pycarleson.so
"""

import cmath
import json
import math
import os
import random
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pycarleson as pc


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    assert pc.psi(0.5) != 0.0 and pc.psi(2.0) == 0.0
    assert close(pc.psi(-0.7), -pc.psi(0.7), 0.0)
    assert pc.chi(0.05) == 1.0 and pc.chi(0.3) == 0.0
    assert pc.phi_hat(0.1) == 1.0

    assert pc.gauss_sum(1, 0, 2) == 0
    for q in (3, 5, 7, 9, 15):
        assert close(abs(pc.gauss_sum(1, 1, q)), q ** -0.5, 1e-12)
    assert len(pc.enumerate_shell(2)) == 11

    # H_j against a plain midpoint rule on the support 1/4 <= |u| <= 1.
    j, x, y = 3, 0.004, 0.05
    a, b = x * 4 ** j, y * 2 ** j
    n = 200000
    acc = 0j
    for lo in (-1.0, 0.25):
        for i in range(n):
            u = lo + (i + 0.5) * 0.75 / n
            acc += pc.psi(u) * cmath.exp(2j * math.pi * (a * u * u - b * u))
    acc *= 0.75 / n
    assert close(pc.h_j(j, x, y), acc, 1e-8), (pc.h_j(j, x, y), acc)

    z = pc.m_j(10, 0.3, 0.7)
    assert close(pc.m_j(10, 0.7, 0.3), -z.conjugate(), 1e-12)
    assert close(pc.e_j(12, 1e-8, 1e-8), 0.0, 1e-9)

    s = pc.LambdaSet.cantor(2, 6)
    assert len(s) == 64
    cert = json.loads(s.cover(2.0 ** -3))
    assert cert["N"] == 2 and all(int(iv["den"]) <= 4 for iv in cert["intervals"])

    origin, out = pc.apply_kernel([1.0], 0.0, 4)
    assert origin == -4
    for i, v in enumerate(out):
        m = i - 4
        assert close(v, 0 if m == 0 else 1 / m, 1e-14)

    rng = random.Random(1)
    f = [complex(rng.gauss(0, 1), rng.gauss(0, 1)) for _ in range(64)]
    _, one = pc.carleson_max(f, [0.25], 32)
    _, many = pc.carleson_max(f, [0.25, 0.5, 0.125], 32)
    assert all(p <= q + 1e-15 for p, q in zip(one, many))

    size = 1024
    lams = [16.0 * 2 ** (i / 8) for i in range(24)]
    g0 = int(size / (8 * max(lams)))
    sig = [cmath.exp(2j * math.pi * g0 * k / size) for k in range(size)]
    assert close(pc.bourgain_max_probe([0.0], 0.1, lams, sig), 1.0, 1e-10)
    assert pc.single_l_max_probe(2, [2.0 ** -10 * 1.3], [0j] * 512) == 0.0

    print("pycarleson smoke test: ok")


if __name__ == "__main__":
    main()
