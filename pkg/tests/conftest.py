"""Shared build cache so expensive quotient constructions run once per
pytest session and are reused across test modules."""

import time

import pytest

from su3tree.algebra import Curve
from su3tree.tree import TreeContext
from su3tree.quotient import build_quotient

_CACHE = {}


def _build(q, family, depth):
    key = (q, family, depth)
    hit = _CACHE.get(key)
    if hit is None:
        cv = Curve(q, family)
        ctx = TreeContext(cv)
        t0 = time.time()
        Q = build_quotient(ctx, max_depth=depth)
        hit = {"ctx": ctx, "Q": Q, "seconds": time.time() - t0}
        _CACHE[key] = hit
    return hit


@pytest.fixture(scope="session")
def quotient_cache():
    """Callable: quotient_cache(q, family, depth) -> dict with the
    TreeContext, the built QuotientGraph, and the build wall time."""
    return _build
