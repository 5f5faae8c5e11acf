"""Input checks shared by the estimator classes."""

from __future__ import annotations

from typing import Any, Sequence


def check_sources(X: Any, name: str = "X") -> list[str]:
    """Accept one Java method per element, as a string or a ``{"code": ...}`` record."""
    if isinstance(X, (str, bytes)):
        raise TypeError(f"{name} must be a sequence of methods, not a single string")
    try:
        items = list(X)
    except TypeError:
        raise TypeError(f"{name} must be iterable, got {type(X).__name__}") from None
    out = []
    for i, item in enumerate(items):
        if isinstance(item, dict):
            item = item.get("code")
        if not isinstance(item, str):
            raise TypeError(f"{name}[{i}] is {type(item).__name__}, expected Java source text")
        out.append(item)
    if not out:
        raise ValueError(f"{name} is empty")
    return out


def check_summaries(y: Any, n: int) -> list[str | None]:
    """Reference summaries aligned with ``n`` sources; ``None`` means use the Javadoc."""
    if y is None:
        return [None] * n
    if isinstance(y, str):
        raise TypeError("y must be a sequence of summaries, not a single string")
    ys = list(y)
    if len(ys) != n:
        raise ValueError(f"X has {n} methods but y has {len(ys)} summaries")
    for i, s in enumerate(ys):
        if s is not None and not isinstance(s, str):
            raise TypeError(f"y[{i}] is {type(s).__name__}, expected str")
    return ys


def check_ids(ids: Sequence | None, n: int) -> list[str]:
    if ids is None:
        return [str(i) for i in range(n)]
    ids = [str(i) for i in ids]
    if len(ids) != n:
        raise ValueError(f"{len(ids)} ids for {n} methods")
    if len(set(ids)) != n:
        raise ValueError("ids are not unique")
    return ids
