"""
The benchmark suite, end to end
===============================

Writes the synthetic suite to disk, runs the cohort validation from the
manifest, and emits every report format. Same as::

    handval synth suite --out DIR/data
    handval cohort DIR/data/manifest.json --out DIR/report --format json,csv_tables,plotdata
"""

import sys
import tempfile
from pathlib import Path

from handval.cli import main

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="handval_"))
main(["synth", "suite", "--out", str(out / "data")])
main(["cohort", str(out / "data" / "manifest.json"), "--out", str(out / "report"),
      "--format", "json,csv_tables,plotdata"])

report = out / "report"
print(len(list(report.iterdir())), "files in", report)
print((report / "agreement_SFT.csv").read_text())
