#!/usr/bin/env python3
"""Independent scipy re-derivation of the values frozen in tests/golden/.

Uses the first-order launch of l_C, DOP853 and exact rational arithmetic for
the closed-form constants. Prints one JSON document.

    python3 astar_oracle.py [--check ../golden/oracle.json]
"""
import argparse
import json
import math
import sys
from fractions import Fraction as Fr

import numpy as np
from scipy.integrate import solve_ivp


def constants(m, p, N, s):
    ss = 2 * (p - 1) / (1 - m)
    al = (s + 2) / ((1 - m) * (s - ss))
    be = (p - m) / ((1 - m) * (s - ss))
    Z0 = (s + 2) * (m * (N + s) - p * (N - 2)) / (p - m) ** 2
    return dict(sigma_star=ss, alpha=al, beta=be, Z0=Z0, q_tail=(s + 2) / (p - m), y_Q3=-(s + 2) / (p - m))


def make(m, p, N, s):
    c = {k: float(v) for k, v in constants(Fr(m), Fr(p), N, Fr(s)).items()}
    al, Y3, ss = c["alpha"], c["y_Q3"], c["sigma_star"]

    def F(t, u):
        x, y, z = u
        return [x * (2 + (1 - m) * y), -x - (N - 2) * y + z - m * y * y - (p - m) / (s + 2) * x * y,
                z * (s + 2 + (p - m) * y)]

    def A2C(A):
        e = (1 - m) * (ss - s)
        return math.exp((math.log(A) - (s + 2) / e * math.log(al / m)) * e / 2) / m

    def run(A, rtol, x0, eta_span=120.0):
        C = A2C(A)
        eta0 = 0.5 * math.log(x0 * m / (al * A ** (1 - m)))
        u0 = [x0, -x0 / N, C * x0 ** ((s + 2) / 2)]

        def down(t, u):
            return u[1] - Y3
        down.terminal, down.direction = True, -1

        def r0(t, u):
            return min(u[1], u[2] - u[0])
        r0.terminal, r0.direction = True, 1

        sol = solve_ivp(F, [eta0, eta0 + eta_span], u0, method="DOP853", rtol=rtol, atol=1e-300,
                        events=[down, r0])
        if sol.t_events[0].size:
            return "C"
        if sol.t_events[1].size:
            return "A"
        return "U"

    return c, run


def bisect(run, rtol, x0, width):
    lo = 1.0
    while run(lo, rtol, x0) != "A":
        lo /= 4
    hi = lo * 4
    while run(hi, rtol, x0) != "C":
        hi *= 4
    while (hi - lo) / lo > width:
        mid = math.sqrt(lo * hi)
        c = run(mid, rtol, x0)
        if c == "A":
            lo = mid
        elif c == "C":
            hi = mid
        else:
            raise RuntimeError(f"undecided at A={mid}")
    return lo, hi


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--check", help="golden oracle.json to compare against")
    args = ap.parse_args()

    out = {}
    for name, (m, p, N, s) in {"P0": (0.5, 2.0, 3, 4.5), "P1": (0.5, 2.0, 1, 12.0)}.items():
        c, run = make(m, p, N, s)
        lo, hi = bisect(run, 1e-13, 1e-8, 1e-12)
        out[name] = dict(constants=c, A_star_first_order=math.sqrt(lo * hi), bracket=[lo, hi],
                         launch="first", x0=1e-8, rtol=1e-13)
    print(json.dumps(out, indent=2))

    if args.check:
        gold = json.load(open(args.check))
        bad = []
        for name, row in out.items():
            g = gold[name]["A_star_first_order"]
            if abs(row["A_star_first_order"] - g) > 1e-9 * g:
                bad.append(f"{name}: {row['A_star_first_order']} vs golden {g}")
        if bad:
            print("\n".join(bad), file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
