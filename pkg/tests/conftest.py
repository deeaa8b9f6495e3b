from __future__ import annotations

from functools import lru_cache

from isohk.moduli import ExtendedPoint, PoleOrders, random_point

CASES = ([7], [5, 3], [5, 1], [9], [7, 1])
CASE_IDS = [",".join(map(str, c)) for c in CASES]


@lru_cache(maxsize=None)
def sample(case: tuple[int, ...], seed: int) -> tuple[PoleOrders, ExtendedPoint]:
    """Seeded exact random point for the pole orders ``case``."""
    orders = PoleOrders.from_pole_orders(case)
    return orders, random_point(orders, seed)


# One summary line per acceptance criterion, printed after the run.
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, title: str, ok: bool, detail: str) -> bool:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
