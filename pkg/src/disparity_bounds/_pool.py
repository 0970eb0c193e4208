"""Deterministic parallel map: results always come back in input order."""

from __future__ import annotations

from concurrent.futures import Executor


def pmap(func, items, pool: Executor | None = None) -> list:
    if pool is None:
        return [func(x) for x in items]
    return list(pool.map(func, items))
