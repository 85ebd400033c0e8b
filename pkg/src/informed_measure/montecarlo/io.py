"""CSV and JSON output for experiment results.

CSV files are RFC-4180 style with a header row, ``.`` decimals and LF line
endings.  Floats are written with ``repr`` (shortest round-trip form), so the
same result always serialises to the same bytes.
"""

import csv
import json
import math

from .experiments import MEDIAN_SEQUENCE_COLUMNS, _jsonable


def _fmt(value) -> str:
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def write_records_csv(result, fh) -> None:
    """One row per (n, replicate): ``n,replicate,ok,<statistic columns>``."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["n", "replicate", "ok", *result.columns])
    for n, k, ok, values in result.records:
        writer.writerow([n, k, int(ok), *(_fmt(v) for v in values)])


def write_summary_json(result, fh) -> None:
    json.dump(_jsonable(result.to_dict()), fh, indent=2, allow_nan=False)
    fh.write("\n")


def write_median_sequence_csv(rows, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(MEDIAN_SEQUENCE_COLUMNS)
    for n, classical, informed, monotone in rows:
        writer.writerow([n, _fmt(classical), _fmt(informed), _fmt(monotone)])
