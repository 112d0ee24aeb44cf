"""The batch workflow through the `randtime` command-line interface.

Every subcommand writes its output file plus a manifest
(<out>.manifest.json) recording the subcommand, model hash, configuration
and seed, so runs are reproducible from the artifacts alone. Exit codes:
0 success, 1 a validation suite failed, 2 configuration error.
"""

import json
import tempfile
from pathlib import Path

from randtime import cli

workdir = Path(tempfile.mkdtemp(prefix="randtime_demo_"))
print(f"artifacts in {workdir}\n")

model = workdir / "bm.json"
model.write_text(json.dumps({"kind": "levy", "alpha": -1.0, "sigma2": 1.0}))

# simulate the time and size of the overall maximum
out = workdir / "max.csv"
code = cli.main(["simulate-max", "--model", str(model), "--n", "2000",
                 "--seed", "7", "--out", str(out)])
print(f"simulate-max -> exit {code}, wrote {out.name} "
      f"+ {out.name}.manifest.json")

# tabulate a closed-form density for plotting elsewhere
dens = workdir / "exp_sup.csv"
code = cli.main(["density", "--oracle", "exp_sup", "--q", "2.0",
                 "--grid", "x=0:5:251", "--out", str(dens)])
print(f"density      -> exit {code}, wrote {dens.name}")

# run a reduced-scale validation suite; the JSON report carries every check
report = workdir / "validate.json"
code = cli.main(["validate", "--suite", "levy_max", "--n", "5000",
                 "--out", str(report)])
payload = json.loads(report.read_text())
print(f"validate     -> exit {code}, suite passed: {payload['passed']}")

# exact identity verification on a tree file
from randtime.discrete import generate_corpus, tree_to_dict

trees = workdir / "trees.json"
trees.write_text(json.dumps(
    {"trees": [tree_to_dict(t) for t in generate_corpus(seed=1, n_trees=20)]}))
tree_report = workdir / "trees_report.csv"
code = cli.main(["discrete-verify", "--trees", str(trees),
                 "--report", str(tree_report)])
print(f"discrete-verify -> exit {code}")

manifest = json.loads((workdir / "max.csv.manifest.json").read_text())
print(f"\nmanifest for max.csv: seed={manifest['seed']}, "
      f"model sha256={manifest['model_hash'][:12]}..., "
      f"version={manifest['tool_version']}")
