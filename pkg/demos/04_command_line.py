"""
The command-line workflow
=========================

Every step above is also a subcommand of ``python -m clustered_mallows``.
Files carry a ``# config:`` header recording the arguments and seed, so any
output can be regenerated.  Here the subcommands are driven from Python for
convenience; the same argument lists work in a shell.
"""

import json
import os
import tempfile

from clustered_mallows.cli import main

work = tempfile.mkdtemp(prefix="cmm_demo_")
data = os.path.join(work, "rankings.csv")


def run(*argv):
    print("$ clustered_mallows", " ".join(str(a) for a in argv))
    code = main([str(a) for a in argv])
    assert code == 0, code


# Simulate 300 complete rankings of six items.
run("simulate", "--z", "1,1,2,2,3,3", "--theta", 0.8, "--q", 300, "--seed", 1, "--out", work)

# Normaliser: exact enumeration against importance sampling.
run("psi", "--ct", "2,2,2", "--theta", 0.8, "--exact")
run("psi", "--ct", "2,2,2", "--theta", 0.8, "--is", "--M", 100_000, "--seed", 2)

# Merge indistinguishable pairs for a starting table, then search from it.
run("init-ct", "--input", data)
run("search-ct", "--input", data, "--ct", "2,2,2", "--M", 20_000, "--seed", 3, "--out", work)

# Maximum likelihood and posterior fits for the chosen table.
run("fit-mle", "--input", data, "--ct", "2,2,2", "--seed", 4, "--out", work)
run("fit-bayes", "--input", data, "--ct", "2,2,2", "--iters", 2000, "--burn-in", 400,
    "--seed", 5, "--out", work)

with open(os.path.join(work, "map.json"), encoding="utf-8") as fh:
    summary = json.load(fh)
print("posterior theta:", summary["theta"])
print("files written:", sorted(os.listdir(work)))
