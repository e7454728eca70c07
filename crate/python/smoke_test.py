"""Smoke test for the curvflow Python extension.

Build the extension first (see README), which places curvflow.so next to
this file, then run: python3 python/smoke_test.py
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import curvflow  # noqa: E402


def check(label, ok):
    print(f"{'ok  ' if ok else 'FAIL'} {label}")
    return ok


def main():
    results = []

    ev = curvflow.eigenvalues([[2, 1j], [-1j, 2]])
    results.append(check("eigenvalues of [[2, i], [-i, 2]] are 1 and 3",
                         abs(ev[0] - 1) < 1e-12 and abs(ev[1] - 3) < 1e-12))
    results.append(check("lambda12 of diag(1, 2, 5) is 3",
                         abs(curvflow.lambda12([[1, 0, 0], [0, 2, 0], [0, 0, 5]]) - 3) < 1e-12))
    cls = curvflow.classify_lambda12([0.0, 2.0])
    results.append(check("[0, 2] is 2-quasi-positive", cls["class"] == "TWO_QUASI_POSITIVE"))

    cert = curvflow.certify_two_positivity(3, restarts=4, iters=200, seed=1)
    results.append(check("quadric Q^3 has min lambda12 = 4", abs(cert["min_lambda12"] - 4) < 1e-6))
    s = 1 / math.sqrt(2)
    u = [s, s * 1j, 0]
    results.append(check("orthogonal Ricci at the equality vector is 4n - 8 = 4",
                         abs(curvflow.orthogonal_ricci(u) - 4) < 1e-9))
    results.append(check("bisectional curvature is nonnegative",
                         curvflow.bisectional_curvature([1, 0, 0], [0, 1j, 0]) >= -1e-12))

    deg = curvflow.degree_certificate([-1, 2, 2], 3, 0)
    results.append(check("splitting (-1, 2, 2) passes the degree chain", deg["verdict"] == "pass"))

    mesh = curvflow.SphereMesh(2)
    results.append(check("level-2 icosphere has 320 faces and area 4 pi",
                         mesh.n_faces == 320 and abs(mesh.total_area() - 4 * math.pi) < 1e-10))

    mono = curvflow.GaugeField.monopole(mesh, [1, 1])
    results.append(check("monopole (1,1) has degree 2 and energy 2 pi",
                         mono.total_degree() == 2 and abs(mono.energy() - 2 * math.pi) < 1e-9))
    start = mono.perturb(0.1, 3).gauge_scramble(4)
    final, trace = start.flow(max_steps=20000, record_every=100)
    results.append(check("perturbed (1,1) flow converges", trace["converged"]))
    results.append(check("degree is constant along the flow",
                         all(r["degree"] == 2 for r in trace["records"])))
    cert = final.certificate(trace)
    results.append(check("recovered splitting type is (1, 1)", cert["splitting"] == [1, 1]))

    try:
        curvflow.GaugeField.identity(mesh, 9)
        results.append(check("rank 9 is rejected", False))
    except ValueError:
        results.append(check("rank 9 is rejected", True))

    print(f"{sum(results)}/{len(results)} checks passed")
    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())
