"""Run the quick validation suites and print their verdicts.

The same checks are available from the command line as
``cogbeam validate --suite <name>``; ``figures`` is slow and omitted here.

    python3 demos/06_validation_checks.py
"""
from cogbeam.suites import run_suite

for name in ("exactness", "rounding", "kkt"):
    for result in run_suite(name):
        print(result.line())
