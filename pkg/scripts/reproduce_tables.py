"""Run the full simulation grid and write tables, ACF curves and summary.json.

    python scripts/reproduce_tables.py --out results/tables --threads 8

Any ``reproduce-tables`` flag is accepted; see ``asis-panel reproduce-tables -h``.
"""

import sys

from asis_panel.cli import main

if __name__ == "__main__":
    sys.exit(main(["reproduce-tables", *sys.argv[1:]]))
