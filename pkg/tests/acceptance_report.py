"""Shared store for the one-line acceptance verdicts printed after the run."""

REPORT: dict[int, str] = {}


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    REPORT[n] = line
    print(line)
