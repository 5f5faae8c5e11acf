"""Deterministic toy corpus of Java methods with template Javadoc summaries."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterator

VERBS = [
    ("count", "counts"), ("find", "finds"), ("update", "updates"), ("load", "loads"),
    ("compute", "computes"), ("remove", "removes"), ("build", "builds"), ("collect", "collects"),
    ("validate", "validates"), ("merge", "merges"), ("print", "prints"), ("sort", "sorts"),
    ("save", "saves"), ("copy", "copies"), ("reset", "resets"), ("send", "sends"),
]
NOUNS = [
    "user", "item", "order", "column", "table", "file", "record", "node", "entry", "task",
    "message", "account", "session", "event", "token", "page", "row", "field", "request", "buffer",
]
ADJECTIVES = ["active", "pending", "cached", "remote", "local", "stale", "valid", "hidden"]
CONDITIONS = ["valid", "empty", "enabled", "expired", "visible", "ready", "locked", "dirty"]
_SYLLABLES = ["zor", "blax", "quim", "vel", "drak", "mip", "tor", "gun", "plex", "fen", "wob", "rix"]

_KIND_WEIGHTS = [
    ("For", 30), ("If", 30), ("While", 12), ("Try", 8), ("Switch", 6),
    ("DoWhile", 4), ("TryWith", 4), ("SynchBlock", 3), ("Label", 3),
]


def invented_noun(rng: random.Random) -> str:
    return "".join(rng.choice(_SYLLABLES) for _ in range(rng.choice((2, 3))))


def _cap(word: str) -> str:
    return word[:1].upper() + word[1:]


@dataclass
class _Ctx:
    rng: random.Random
    noun: str
    cond: str
    nest_prob: float
    clauses: list[str] = field(default_factory=list)
    counter: int = 0

    @property
    def plural(self) -> str:
        return self.noun + "s"

    @property
    def cls(self) -> str:
        return _cap(self.noun)

    def fresh(self, base: str) -> str:
        self.counter += 1
        return f"{base}{self.counter}" if self.counter > 1 else base


_CLAUSES = {
    "For": "for each {noun}",
    "If": "if it is {cond}",
    "While": "while more {noun}s remain",
    "DoWhile": "repeating until done",
    "Switch": "depending on the {noun} kind",
    "Try": "handling any errors",
    "TryWith": "with a managed resource",
    "SynchBlock": "under a lock",
    "Label": "in a labeled loop",
}


def _simple(ctx: _Ctx) -> str:
    r = ctx.rng
    n, p, c = ctx.noun, ctx.plural, ctx.cls
    choices = [
        f"count++;",
        f"total += {n}.getSize();",
        f"result.add({n});",
        f"{c} current = {p}.get(index);",
        f'log.info("{n} done");',
        f"index = index + 1;",
        f"{p}.remove({n});",
        f"cache.put({n}.getId(), {n});",
        f"int size = {p}.size();",
        f"String name = {n}.getName().trim();",
        f"{n}.set{_cap(ctx.cond)}(true);",
    ]
    return r.choice(choices)


def _body(ctx: _Ctx, depth: int) -> list[str]:
    r = ctx.rng
    stmts = [_simple(ctx) for _ in range(r.randint(1, 2))]
    if depth < 3 and r.random() < ctx.nest_prob / (depth + 1):
        stmts.insert(r.randint(0, len(stmts)), _composite(ctx, depth + 1, clause=depth == 0))
    return stmts


def _block(stmts: list[str], indent: int) -> str:
    pad = "    " * indent
    inner = "".join(f"{pad}    {s}\n" for s in stmts)
    return "{\n" + inner + pad + "}"


def _composite(ctx: _Ctx, depth: int, clause: bool = True) -> str:
    r = ctx.rng
    kinds, weights = zip(*_KIND_WEIGHTS)
    kind = r.choices(kinds, weights)[0]
    if clause:
        ctx.clauses.append(_CLAUSES[kind].format(noun=ctx.noun, cond=ctx.cond))
    n, p, c = ctx.noun, ctx.plural, ctx.cls
    ind = depth + 1
    body = _block(_body(ctx, depth), ind)
    if kind == "For":
        if r.random() < 0.5:
            return f"for ({c} {n} : {p}) {body}"
        i = ctx.fresh("i")
        return f"for (int {i} = 0; {i} < {p}.size(); {i}++) {body}"
    if kind == "If":
        head = f"if ({n}.is{_cap(ctx.cond)}()) {body}"
        if r.random() < 0.3:
            head += " else " + _block([_simple(ctx)], ind)
        return head
    if kind == "While":
        return f"while (iterator.hasNext()) {body}"
    if kind == "DoWhile":
        return f"do {body} while (retries < {r.randint(2, 5)});"
    if kind == "Switch":
        pad = "    " * ind
        return (
            f"switch ({n}.getKind()) {{\n"
            f"{pad}case {r.randint(0, 3)}:\n{pad}    {_simple(ctx)}\n{pad}    break;\n"
            f"{pad}default:\n{pad}    {_simple(ctx)}\n"
            + "    " * (ind - 1) + "}"
        )
    if kind == "Try":
        handler = _block([f'log.warn("{n} failed", e);'], ind)
        out = f"try {body} catch (IOException e) {handler}"
        if r.random() < 0.3:
            out += " finally " + _block([f"{p}.clear();"], ind)
        return out
    if kind == "TryWith":
        handler = _block(["throw new IllegalStateException(e);"], ind)
        return f"try (Reader reader = open({p})) {body} catch (IOException e) {handler}"
    if kind == "SynchBlock":
        return f"synchronized (lock) {body}"
    # Label wraps a loop
    return f"outer: for ({c} {n} : {p}) {body}"


def generate_method(rng: random.Random, *, invented_rate: float = 0.0, nest_prob: float = 0.7) -> tuple[str, str]:
    """One (source, javadoc) pair."""
    verb, verb_s = rng.choice(VERBS)
    noun = invented_noun(rng) if rng.random() < invented_rate else rng.choice(NOUNS)
    adj = rng.choice(ADJECTIVES) if rng.random() < 0.5 else None
    ctx = _Ctx(rng, noun, rng.choice(CONDITIONS), nest_prob)
    name_parts = [verb] + ([_cap(adj)] if adj else []) + [_cap(noun) + "s"]
    name = "".join(name_parts)
    returns = rng.random() < 0.5
    segs: list[str] = []
    n_segs = rng.randint(1, 3)
    for _ in range(n_segs):
        if rng.random() < 0.55:
            segs.append(_composite(ctx, 0))
        else:
            segs.extend(_simple(ctx) for _ in range(rng.randint(1, 3)))
    if returns:
        segs.append("return result;")
    mods = rng.choice(["public ", "private ", "public static ", "protected "])
    ret = "List<" + ctx.cls + ">" if returns else "void"
    throws = " throws IOException" if any(s.startswith("try") for s in segs) else ""
    source = f"{mods}{ret} {name}(List<{ctx.cls}> {ctx.plural}){throws} " + _block(segs, 0)
    words = [verb_s, "the"] + ([adj] if adj else []) + [noun + "s"]
    for clause in ctx.clauses[:3]:
        words.append(clause)
    sentence = " ".join(words)
    javadoc = f"/**\n * {_cap(sentence)}.\n * @param {ctx.plural} the input\n */"
    return source, javadoc


def generate_corpus(seed: int, n: int, **kwargs) -> Iterator[tuple[str, str]]:
    """Yield ``n`` deterministic (source, javadoc) pairs for ``seed``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = random.Random(seed)
    for _ in range(n):
        yield generate_method(rng, **kwargs)


def nested_method(k: int, kind: str = "If") -> str:
    """A method whose body nests ``k`` composite statements of one kind."""
    heads = {
        "If": "if (a > {i})",
        "While": "while (a > {i})",
        "For": "for (int i{i} = 0; i{i} < a; i{i}++)",
        "SynchBlock": "synchronized (lock{i})",
    }
    inner = "return a;"
    for i in reversed(range(k)):
        inner = heads[kind].format(i=i) + " { " + inner + " }"
    return f"int nested(int a) {{ {inner} return 0; }}"


def to_record(idx: int, source: str, javadoc: str, prefix: str = "m") -> dict:
    """Corpus JSONL record with the Javadoc embedded in the code."""
    return {"id": f"{prefix}{idx:05d}", "code": javadoc + "\n" + source}
