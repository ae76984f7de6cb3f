"""Verdict lines collected by the acceptance suite and printed at the end."""

VERDICTS = []


def verdict(number, title, ok, detail=""):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}"
    if detail:
        line += f"  ({detail})"
    VERDICTS.append(line)
    assert ok, line
