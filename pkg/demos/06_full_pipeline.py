"""The whole pipeline through the command-line interface.

Runs synth -> train -> simulate -> evaluate -> sweep in a temporary
directory, exactly as a shell user would, and prints where every artifact
lands. A short iteration override keeps the demo quick; drop the override
for the full bundled configuration.
"""

import json
import tempfile
from pathlib import Path

from crowdtcn.cli import main

root = Path(tempfile.mkdtemp(prefix="crowdtcn-demo-"))


def step(title, argv):
    print(f"\n$ crowdtcn {' '.join(argv)}")
    code = main(argv)
    assert code == 0, f"{title} exited with {code}"


step("synth", ["synth", "--geometry", "t-junction", "--out", str(root),
               "--n-train", "16", "--n-test", "4"])
config = root / "run.json"

step("train", ["train", "--config", str(config), "--iterations", "200"])
step("simulate", ["simulate", "--config", str(config),
                  "--artifact", str(root / "out" / "model.bin")])
step("evaluate", ["evaluate",
                  "--scenario", str(root / "scenario.json"),
                  "--experiment", str(root / "test.txt"),
                  "--simulation", str(root / "out" / "test.sim.txt"),
                  "--output-dir", str(root / "eval")])
step("sweep", ["sweep", "--config", str(config), "--iterations", "200",
               "--exit-distances", "20,50", "--step-degs", "18",
               "--output-dir", str(root / "sweep"), "--jobs", "2"])

metrics = json.loads((root / "eval" / "metrics.json").read_text())
print("\nheadline metrics:")
for key in ("ete_s", "pete"):
    print(f"  {key}: {metrics[key]:.4g}")
for key in ("tte_s", "tde_m", "fde_m"):
    print(f"  {key}: mean {metrics[key]['mean']:.4g}, p95 {metrics[key]['p95']:.4g}")

print("\nsweep table:")
print((root / "sweep" / "sweep.csv").read_text().strip())

print("\nartifacts:")
for p in sorted(root.rglob("*")):
    if p.is_file():
        print(f"  {p.relative_to(root)}")
