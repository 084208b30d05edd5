"""One summary line per acceptance criterion, printed at the end of the run."""

import time

RESULTS = {}


class Criterion:
    """Context manager: times the block and records PASS/FAIL with details."""

    def __init__(self, number: int, title: str, budget: float):
        self.number, self.title, self.budget = number, title, budget
        self.details = []

    def note(self, text: str):
        self.details.append(text)

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        dt = time.perf_counter() - self.t0
        ok = exc_type is None and dt <= self.budget
        extra = "" if dt <= self.budget else f" (over the {self.budget:g} s budget)"
        if exc_type is not None:
            self.details.append(f"{exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}")
        line = (f"CRITERION {self.number:2d} {'PASS' if ok else 'FAIL'}  {self.title}  [{dt:.1f} s{extra}]  "
                + "; ".join(self.details))
        RESULTS[self.number] = line
        print(line)
        if exc_type is None and not ok:
            raise AssertionError(f"criterion {self.number} exceeded its runtime budget: {dt:.1f} s")
        return False
