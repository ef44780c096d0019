"""``uamo`` command line.

Exit codes: 0 success, 2 configuration error, 3 an acceptance-grade check
failed (the table is still written), 4 anything else.
"""

from __future__ import annotations

import logging
import os
import sys

from uamo.harness.config import ConfigError, parse_config
from uamo.harness.runner import ExperimentError, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INTERNAL = 0, 2, 3, 4

log = logging.getLogger("uamo")


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("UAMO_LOG", "WARNING"), format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"uamo: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        table = run_experiment(cfg)
    except ExperimentError as exc:
        print(f"uamo: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"uamo: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    text = table.dumps(cfg.format)
    if cfg.out:
        os.makedirs(os.path.dirname(os.path.abspath(cfg.out)), exist_ok=True)
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for line in table.failures:
        print(f"uamo: check failed: {line}", file=sys.stderr)
    return EXIT_NUMERIC if table.failures else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
