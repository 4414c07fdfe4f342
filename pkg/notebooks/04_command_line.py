"""
Driving the command-line tool
=============================

The same pipeline through the ``entropy-homogenizer`` entry point.  Each
command writes CSV files into ``--out``; reruns with the same settings
produce identical bytes.
"""

import tempfile
from pathlib import Path

from entropy_homogenizer.cli import main

out = Path(tempfile.mkdtemp())

main(["case", "list"])

###############################################################################
# Capacity and transformed channel of the two-form case, with SVG plots.
main(["homogenize", "--case", "fig3", "--ne", "200", "--nq", "200", "--svg",
      "--out", str(out / "fig3")])
print(sorted(p.name for p in (out / "fig3").iterdir()))

###############################################################################
# Closed-form check on the slope-halving case.
main(["slowchange", "--case", "fig2", "--ne", "500", "--nq", "500", "--out", str(out / "fig2")])

###############################################################################
# Compare a case against its expected values.  Exit code 4 flags a failure.
code = main(["verify", "--case", "fig3", "--out", str(out / "verify")])
print("exit code", code)
print((out / "verify" / "results.csv").read_text().splitlines()[:4])
