import gmpy2

from app.models.interval import Precision, bound_from_text
from app.models.orbit import ParamSegment


def segment(lo: str, hi: str, prec: Precision) -> ParamSegment:
    return ParamSegment(
        bound_from_text(lo, prec, gmpy2.RoundToNearest),
        bound_from_text(hi, prec, gmpy2.RoundToNearest),
    )


def assert_tiles(records, lo, hi) -> None:
    ordered = sorted(records, key=lambda r: r.lo)
    assert ordered[0].lo == lo
    assert ordered[-1].hi == hi
    for left, right in zip(ordered, ordered[1:]):
        assert left.hi == right.lo
