"""Smoke test for the `sadmm` Python extension.

Build first with

    cargo build --release -p sadmm-py --features extension-module

or install it with `maturin develop -m crates/python/Cargo.toml`.
"""

import importlib
import importlib.util
import json
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent

CONFIG = {
    "problem": {
        "data": {"kind": "synthetic", "n": 60, "d": 8, "sparsity": 3, "noise": 0.05, "seed": 2},
        "mu": 1e-3,
    },
    "solvers": ["acc", "stoc"],
    "epochs": 5,
    "seeds": [0, 1],
}


def load_module():
    if importlib.util.find_spec("sadmm") is not None:
        return importlib.import_module("sadmm")
    for profile in ("release", "debug"):
        for name in ("libsadmm.so", "libsadmm.dylib", "sadmm.dll"):
            lib = ROOT / "target" / profile / name
            if lib.exists():
                tmp = Path(tempfile.mkdtemp())
                shutil.copy(lib, tmp / ("sadmm.pyd" if name.endswith(".dll") else "sadmm.so"))
                sys.path.insert(0, str(tmp))
                return importlib.import_module("sadmm")
    sys.exit("sadmm extension not found; build crates/python first")


def main():
    sadmm = load_module()

    assert sadmm.soft_threshold([3.0, -0.5, 1.0], 1.0) == [2.0, 0.0, 0.0]
    t1, t2 = sadmm.theta(2.0, 2.0, 10, 3)
    assert abs(t1 - 1.0 / 8.0) < 1e-15 and abs(t2 - 8.0 / 18.0) < 1e-15
    assert abs(sadmm.rate_slope([(s, 1.0 / s) for s in (8, 16, 32, 64)]) + 1.0) < 1e-12

    text = json.dumps(CONFIG)
    x1, x2, csv = sadmm.solve(text, "acc", 0)
    assert len(x1) == len(x2) == 8
    rows = csv.strip().splitlines()
    assert rows[0].startswith("epoch,grad_evals") and len(rows) == CONFIG["epochs"] + 2

    with tempfile.TemporaryDirectory() as out:
        manifest = json.loads(sadmm.run_experiment(text, out))
        assert all(r["status"] == "ok" for r in manifest["runs"]), manifest
        assert sorted(manifest["aggregates"]) == ["acc_mean.csv", "stoc_mean.csv"]
        first = (Path(out) / "acc_seed0.csv").read_text()
        sadmm.run_experiment(text, out)
        assert (Path(out) / "acc_seed0.csv").read_text() == first

    report = json.loads(sadmm.check_experiment(text))
    assert all(e["passed"] for e in report["entries"]), report

    try:
        sadmm.solve(text, "admm", 0)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown solver accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
