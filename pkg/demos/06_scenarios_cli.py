"""
Running scenarios from config files
===================================

Every study can also be run from a JSON config with the ``switchdiff``
command; each run writes ``manifest.json`` (resolved config, constants,
package versions) and CSV results to its output directory:

    switchdiff demos/configs/criterion.json --out runs/criterion
    switchdiff demos/configs/sweep.json --out runs/sweep --workers 4

This script does the same in-process for the small configs and prints
what was written.
"""

import json
import pathlib
import tempfile

from switchdiff.cli import main

HERE = pathlib.Path(__file__).parent / "configs"

with tempfile.TemporaryDirectory() as tmp:
    for name in ("criterion", "simulate", "hit"):
        out = pathlib.Path(tmp) / name
        status = main([str(HERE / f"{name}.json"), "--out", str(out)])
        files = sorted(p.name for p in out.iterdir())
        print(f"{name}: exit {status}, wrote {', '.join(files)}")
        print("  " + (out / "results.csv").read_text().splitlines()[1][:100])
    manifest = json.loads((pathlib.Path(tmp) / "hit" / "manifest.json").read_text())
    print("defaults applied to hit.json:", manifest["defaults_applied"])
