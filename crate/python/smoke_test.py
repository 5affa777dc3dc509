#!/usr/bin/env python3
"""Smoke test for the hodgelab_py extension module.

Builds nothing itself: run `cargo build -p hodgelab-py` (or --release)
first, then `python3 python/smoke_test.py`. The script locates the cdylib
in target/, exposes it on sys.path under the importable name, and runs a
few end-to-end checks.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path


def locate_extension():
    root = Path(__file__).resolve().parent.parent
    candidates = []
    for profile in ("release", "debug"):
        for stem in ("libhodgelab_py.so", "hodgelab_py.dll", "libhodgelab_py.dylib"):
            candidates.append(root / "target" / profile / stem)
    for path in candidates:
        if path.exists():
            return path
    sys.exit(
        "hodgelab_py cdylib not found; run `cargo build -p hodgelab-py` first"
    )


def import_module():
    lib = locate_extension()
    staging = Path(tempfile.mkdtemp(prefix="hodgelab_py_"))
    suffix = ".so" if lib.suffix in (".so", ".dylib") else ".pyd"
    shutil.copy2(lib, staging / f"hodgelab_py{suffix}")
    sys.path.insert(0, str(staging))
    import hodgelab_py

    return hodgelab_py


def approx(a, b, rel=1e-6, absolute=1e-12):
    return abs(a - b) <= max(rel * abs(b), absolute)


def main():
    hl = import_module()
    checks = 0

    # mesh generation and validation
    torus = hl.Mesh.flat_torus(2, 16)
    assert torus.vertex_count() == 256
    assert torus.euler_characteristic() == 0
    report = torus.validate()
    assert report["pass"] and report["dd_zero"]
    checks += 1
    print(f"[ok] torus mesh: {torus!r}")

    sphere = hl.Mesh.icosphere(3)
    assert sphere.vertex_count() == 10 * 4**3 + 2
    assert sphere.euler_characteristic() == 2
    assert approx(sphere.volume, 4 * math.pi, rel=5e-3)
    checks += 1
    print(f"[ok] icosphere mesh: {sphere!r}")

    # scalar spectrum against the lattice oracle
    spec = hl.solve(torus, degree=0, count=8, tol=1e-9, scheme="circumcentric")
    lam = spec.eigenvalues
    oracle = []
    for value, mult in hl.torus_spectrum(2, 10):
        oracle.extend([value] * mult)
    assert abs(lam[0]) < 1e-9
    for i in range(1, 8):
        assert approx(lam[i], oracle[i], rel=0.02), (i, lam[i], oracle[i])
    assert spec.kernel_dimension() == 1
    checks += 1
    print(f"[ok] torus spectrum: {['%.4f' % v for v in lam]}")

    # sphere eigenvalues cluster at l(l+1)
    sspec = hl.solve(sphere, degree=0, count=6, tol=1e-8, scheme="circumcentric")
    for i in range(1, 4):
        assert approx(sspec.eigenvalues[i], 2.0, rel=0.02)
    checks += 1
    print(f"[ok] sphere spectrum: {sspec!r}")

    # Betti numbers of the torus
    assert hl.betti(torus, 0) == 1
    assert hl.betti(torus, 1, count=8) == 2
    assert hl.betti(torus, 2) == 1
    checks += 1
    print("[ok] torus Betti numbers (1, 2, 1)")

    # Weyl slope on a denser run
    big = hl.Mesh.flat_torus(2, 48)
    bspec = hl.solve(big, degree=0, count=120, tol=1e-8, scheme="circumcentric")
    weyl = hl.weyl_check(bspec, betti=1)
    assert weyl["pass"], weyl
    checks += 1
    print(f"[ok] weyl slope {weyl['slope']:.3f} (expect {weyl['expected_slope']:.3f})")

    # gradient lemma stays within its discretization budget
    lemma = hl.lemma_check(big, bspec, k=20, trials=50)
    assert lemma["pass"], lemma
    checks += 1
    print(f"[ok] gradient lemma max rho {lemma['max_rho']:.4f}")

    # heat kernel settles to 1/V and matches the wrapped Gaussian on T^1
    ring = hl.Mesh.flat_torus(1, 128)
    rspec = hl.solve(ring, degree=0, count=40, tol=1e-10)
    h_long = hl.heat_kernel(ring, rspec, 0, 17, 50.0)
    assert approx(h_long, 1.0 / (2 * math.pi), rel=1e-8)
    h_mid = hl.heat_kernel(ring, rspec, 0, 16, 0.5)
    x = 2 * math.pi * 16 / 128
    oracle_mid = hl.circle_heat_kernel(0.0, x, 0.5)
    assert approx(h_mid, oracle_mid, rel=1e-4), (h_mid, oracle_mid)
    checks += 1
    print(f"[ok] heat kernel H(0,x,0.5) = {h_mid:.8f} vs oracle {oracle_mid:.8f}")

    # log-log fit helper
    xs = [float(i) for i in range(1, 20)]
    ys = [3.0 * x**2 for x in xs]
    slope, intercept, r2 = hl.fit_slope(xs, ys)
    assert approx(slope, 2.0) and approx(r2, 1.0)
    checks += 1
    print(f"[ok] fit_slope: slope {slope:.3f}, r^2 {r2:.3f}")

    print(f"smoke test passed ({checks} groups)")


if __name__ == "__main__":
    main()
