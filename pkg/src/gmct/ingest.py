"""CSV readers for the three input layouts.

Every reader returns groups in alphabetical label order and reports all
offending rows of a malformed file in one error.
"""

from __future__ import annotations

import csv
import logging
import math
from collections import defaultdict

from .core import CountTable2xK, GroupedSample, SurvivalSample
from .errors import ValidationError

log = logging.getLogger(__name__)

MAX_REPORTED_ROWS = 10


def read_rows(path, columns):
    """Header-checked CSV rows as dicts restricted to ``columns``."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [c for c in columns if c not in header]
            if missing:
                raise ValidationError(f"{path}: missing column(s) {missing}; header is {header}")
            # line 1 is the header
            return [(i, {c: (row[c] or "").strip() for c in columns}) for i, row in enumerate(reader, start=2)]
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except UnicodeDecodeError as exc:
        raise ValidationError(f"{path} is not valid UTF-8") from exc


def _raise_bad(path, bad):
    shown = "; ".join(f"line {i}: {msg}" for i, msg in bad[:MAX_REPORTED_ROWS])
    more = f" (and {len(bad) - MAX_REPORTED_ROWS} more)" if len(bad) > MAX_REPORTED_ROWS else ""
    raise ValidationError(f"{path}: invalid rows: {shown}{more}")


def _number(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("not finite")
    return value


def _integer(text):
    value = float(text)
    if not value.is_integer():
        raise ValueError("not an integer")
    return int(value)


def read_grouped(path, response="response", group="group", drop_singletons=False):
    """Response/group CSV as a GroupedSample.

    Returns the sample and a list of warnings (one per dropped group).
    """
    values = defaultdict(list)
    bad = []
    for line, row in read_rows(path, [response, group]):
        if not row[group]:
            bad.append((line, "empty group label"))
            continue
        try:
            values[row[group]].append(_number(row[response]))
        except ValueError:
            bad.append((line, f"{response}={row[response]!r} is not a finite number"))
    if bad:
        _raise_bad(path, bad)
    warnings = []
    if drop_singletons:
        for lab in [lab for lab, v in values.items() if len(v) == 1]:
            del values[lab]
            msg = f"group {lab!r} has a single observation and was dropped"
            log.info(msg)
            warnings.append(msg)
    return GroupedSample([(lab, values[lab]) for lab in sorted(values)]), warnings


def read_counts(path, label="label", events="events", trials="trials"):
    rows = {}
    bad = []
    for line, row in read_rows(path, [label, events, trials]):
        try:
            x, n = _integer(row[events]), _integer(row[trials])
        except ValueError:
            bad.append((line, "events and trials must be integers"))
            continue
        if not row[label]:
            bad.append((line, "empty label"))
        elif row[label] in rows:
            bad.append((line, f"duplicate label {row[label]!r}"))
        elif not 0 <= x <= n or n < 1:
            bad.append((line, f"need 0 <= events <= trials and trials >= 1, got {x}/{n}"))
        else:
            rows[row[label]] = (x, n)
    if bad:
        _raise_bad(path, bad)
    return CountTable2xK([(lab, *rows[lab]) for lab in sorted(rows)])


def read_survival(path, time="time", status="status", group="group"):
    """Time/status/group CSV; status 1 is an event, 0 is censored."""
    t, e, g = [], [], []
    bad = []
    for line, row in read_rows(path, [time, status, group]):
        try:
            ti = _number(row[time])
        except ValueError:
            bad.append((line, f"{time}={row[time]!r} is not a finite number"))
            continue
        if ti <= 0:
            bad.append((line, f"{time} must be > 0"))
        elif row[status] not in ("0", "1"):
            bad.append((line, f"{status} must be 0 or 1, got {row[status]!r}"))
        elif not row[group]:
            bad.append((line, "empty group label"))
        else:
            t.append(ti)
            e.append(row[status] == "1")
            g.append(row[group])
    if bad:
        _raise_bad(path, bad)
    return SurvivalSample(t, e, g, labels=sorted(set(g)))
