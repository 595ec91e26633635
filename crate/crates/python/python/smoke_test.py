"""Smoke test for the awbem extension module.

Build first:
    cargo build --release -p awbem-py --features extension-module
then run this script from anywhere. If `awbem` is not importable, the
library is loaded from the workspace target directory.
"""

import importlib.machinery
import importlib.util
import math
import pathlib
import sys


def load():
    try:
        import awbem

        return awbem
    except ImportError:
        pass
    root = pathlib.Path(__file__).resolve().parents[3]
    for profile in ("release", "debug"):
        for name in ("libawbem_py.so", "libawbem_py.dylib", "awbem_py.dll"):
            path = root / "target" / profile / name
            if path.exists():
                loader = importlib.machinery.ExtensionFileLoader("awbem", str(path))
                spec = importlib.util.spec_from_loader("awbem", loader)
                module = importlib.util.module_from_spec(spec)
                loader.exec_module(module)
                return module
    sys.exit("awbem extension not found; build it with --features extension-module")


def main():
    awbem = load()

    f = awbem.Surface.fichera()
    assert f.num_patches == 12
    assert abs(f.total_area - 6.0) < 1e-12
    assert f.is_closed()
    cube = awbem.Surface("cube")
    assert cube.patch_relation(0, 0) == ("identical", True)

    total = sum(awbem.solid_angle(q, [0.75, 0.75, 0.75]) for q in f.patches())
    assert abs(total - 4 * math.pi) < 1e-10, total

    out = awbem.solve(cube, rhs="constant", mode="uniform", max_level=1, eps=1e-6)
    assert [row[1] for row in out["history"]] == [24]
    u = out["u"]
    one = sum(v * v for _, v in u.items())
    assert abs(one - cube.total_area) < 1e-6, one

    w, err = awbem.apply(cube, u, 0.1)
    assert err <= 0.1
    diff = math.sqrt(sum((w.get(i) - v) ** 2 for i, v in u.items()))
    assert diff < 0.1, diff

    slope, _, r2 = awbem.fit_rate([(10.0, 1.0), (100.0, 10 ** -0.5), (1000.0, 0.1)])
    assert abs(slope - 0.5) < 1e-12 and abs(r2 - 1.0) < 1e-12
    assert awbem.lemma_a1_check([0.1], [1.0], 0.5, 3.0)
    assert awbem.weighted_sobolev_finiteness(0.5, 0.4) == (True, False)
    g = awbem.predicted_gamma(1.5, 0.0, 1.0, 2.0, 0.5)
    assert g["rate"] > 0

    try:
        awbem.Surface("torus")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown surface accepted")

    print("awbem smoke test passed")


if __name__ == "__main__":
    main()
