"""Convert the 48-state cigarette panel (1985-1995) into the package's long CSV.

The source is the ``Cigarette`` / ``CigarettesSW`` table distributed with the R
packages Ecdat and AER, exported to CSV.  Expected columns (case-insensitive):
state, year, cpi, pop, packpc, income, tax, avgprs.

Output columns: id, t, y, x1, x2, x3 with
    y  = packs per capita
    x1 = real per capita income   (income / pop / cpi)
    x2 = real average price       (avgprs / cpi)
    x3 = real average excise tax  (tax / cpi)
Consumption, income and price are logged unless --no-log is given; the tax is
logged only with --log-tax.
"""

import argparse
import csv
import math
import sys
from pathlib import Path


def convert(rows, log=True, log_tax=False):
    out = []
    for r in rows:
        r = {k.strip().lower(): v for k, v in r.items()}
        cpi, pop = float(r["cpi"]), float(r["pop"])
        y = float(r["packpc"])
        income = float(r["income"]) / pop / cpi
        price = float(r["avgprs"]) / cpi
        tax = float(r["tax"]) / cpi
        if log:
            y, income, price = math.log(y), math.log(income), math.log(price)
        if log_tax:
            tax = math.log(tax)
        out.append((r["state"].strip(), int(float(r["year"])), y, income, price, tax))
    return sorted(out)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("source", type=Path, help="CSV export of the cigarette table")
    p.add_argument("output", type=Path)
    p.add_argument("--no-log", action="store_true")
    p.add_argument("--log-tax", action="store_true")
    args = p.parse_args(argv)
    with open(args.source, newline="") as fh:
        records = convert(csv.DictReader(fh), log=not args.no_log, log_tax=args.log_tax)
    with open(args.output, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "t", "y", "x1", "x2", "x3"])
        w.writerows([s, t] + [repr(v) for v in vals] for s, t, *vals in records)
    ids = {r[0] for r in records}
    years = {r[1] for r in records}
    print(f"wrote {args.output}: {len(ids)} units x {len(years)} periods", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
