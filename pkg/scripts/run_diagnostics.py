#!/usr/bin/env python3
"""Run the exhaustive chain diagnostics and print the JSON report."""

import sys

from dbpdet.diagnostics import report_json, run_diagnostic_suite

if __name__ == "__main__":
    report = run_diagnostic_suite()
    sys.stdout.write(report_json(report))
    sys.exit(0 if report["passed"] else 3)
