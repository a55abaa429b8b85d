"""Smoke test for the peerfx Python module.

Builds the extension with cargo (unless PEERFX_SO points at a built
library), copies it next to a temporary import path and exercises the API.
"""

import math
import os
import random
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def build_library() -> Path:
    explicit = os.environ.get("PEERFX_SO")
    if explicit:
        return Path(explicit)
    subprocess.run(
        ["cargo", "build", "--release", "-p", "peerfx-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    return ROOT / "target" / "release" / "libpeerfx.so"


def import_peerfx(lib: Path, workdir: Path):
    shutil.copy(lib, workdir / "peerfx.so")
    sys.path.insert(0, str(workdir))
    import peerfx

    return peerfx


def check(cond, msg):
    if not cond:
        raise AssertionError(msg)
    print(f"ok  {msg}")


def main() -> int:
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        px = import_peerfx(build_library(), tmp)

        check(abs(px.ols_plim_reflection(0.5) - 0.8) < 1e-12, "reflection plim at beta 0.5 is 0.8")
        t = px.equilibrium_solve([1.0, 1.0], [0.0, 0.0], 0.5, [[0.0, 1.0], [1.0, 0.0]])
        check(all(abs(v - 2.0) < 1e-12 for v in t), "2x2 equilibrium solves to 2")
        try:
            px.ols_plim_reflection(1.5)
            raise AssertionError("expected a domain error")
        except ValueError:
            print("ok  |beta| >= 1 raises ValueError")

        rng = random.Random(3)
        n = 400
        x = [[1.0, rng.gauss(0, 1)] for _ in range(n)]
        y = [2.0 + 3.0 * r[1] + rng.gauss(0, 0.1) for r in x]
        fit = px.ols(y, x, names=["const", "slope"])
        check(abs(fit["beta"][1] - 3.0) < 0.05, f"ols slope {fit['beta'][1]:.4f}")
        iv = px.tsls(y, [[r[1]] for r in x], [[r[1]] for r in x], w=[[1.0] for _ in x])
        check(abs(iv["beta"][0] - fit["beta"][1]) < 1e-10, "tsls with z = x equals ols")

        panel, truth = px.simulate(mode="two_player_reflection", beta=0.5, n_players=2000, seed=7)
        check(len(panel) == 2 * truth["n_matches"], f"{panel!r}")
        check(abs(truth["ols_plim"] - 0.8) < 1e-12, "truth sidecar carries the plim")
        rep = panel.estimate(scheme="pooled", interactions=False, behavior="intensity", outcomes=["propagation"], ols_baseline=False)
        b, se = rep["fits"][0]["tsls"]["beta"][0], rep["fits"][0]["tsls"]["se"][0]
        check(abs(b - 0.5) < 4 * se, f"2SLS recovers 0.5: {b:.4f} (se {se:.4f})")

        panel, _ = px.simulate(n_players=800, seed=1)
        csv = tmp / "panel.csv"
        panel.write_csv(str(csv))
        again = px.Panel.read_csv(str(csv))
        check(again.n_rows == panel.n_rows and again.has_party_column, "CSV round trip")
        table = again.describe()
        check(len(table["cells"]) == 4, "describe returns four cells")
        rep = again.estimate()
        eff = rep["fits"][0]["marginal_effects"]
        check(len(eff) == 2 and all(math.isfinite(e["loss_effect"]) for e in eff), "marginal effects present")
        try:
            px.simulate(mode="two_player_reflection", beta=1.5)
            raise AssertionError("expected a configuration error")
        except ValueError as e:
            check("spectral radius" in str(e), "explosive reflection rejected")
    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
