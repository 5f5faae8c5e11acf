"""Recursive-descent parser for a single Java method declaration.

Every token becomes a terminal in source order, except the braces that
delimit a method body, block, or switch body: those are implied by the
enclosing ``MethBody``/``Block``/``Switch`` node. Type expressions are
flattened into one terminal whose label is the concatenated token text.
"""

from __future__ import annotations

from .lexer import PRIMITIVE_TYPES, Token, tokenize
from .tree import Node, leaf

_MODIFIERS = frozenset(
    "public protected private static final abstract native synchronized transient "
    "volatile strictfp default".split()
)
_ASSIGN_OPS = frozenset("= += -= *= /= %= &= |= ^= <<= >>= >>>=".split())
_BINARY_PREC = {
    "||": 1, "&&": 2, "|": 3, "^": 4, "&": 5, "==": 6, "!=": 6,
    "<": 7, ">": 7, "<=": 7, ">=": 7, "instanceof": 7,
    "<<": 8, ">>": 8, ">>>": 8, "+": 9, "-": 9, "*": 10, "/": 10, "%": 10,
}
_LITERAL_KINDS = frozenset(
    ("int-literal", "float-literal", "string-literal", "char-literal")
)
_CAST_FOLLOWERS_KW = frozenset("this super new true false null".split())


class ParseError(ValueError):
    def __init__(self, offset: int, expected: str, found: str):
        super().__init__(f"expected {expected}, found {found!r} at byte {offset}")
        self.offset = offset
        self.expected = expected
        self.found = found


class _Backtrack(Exception):
    pass


def _stmt(label: str, children: list[Node]) -> Node:
    return Node(label, children, "simple-stmt")


def _composite(label: str, children: list[Node]) -> Node:
    return Node(label, children, "composite-stmt")


def _expr(label: str, children: list[Node]) -> Node:
    return Node(label, children, "expression-part")


def _sig(label: str, children: list[Node]) -> Node:
    return Node(label, children, "signature-part")


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.pos = 0
        self.pending_gt = 0  # '>' still owed from a split '>>' or '>>>'
        self.implied: list[int] = []

    # -- token helpers -------------------------------------------------

    def peek(self, k: int = 0) -> Token | None:
        i = self.pos + k
        return self.toks[i] if i < len(self.toks) else None

    def at(self, text: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t is not None and t.text == text and t.kind not in _LITERAL_KINDS

    def at_kind(self, kind: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t is not None and t.kind == kind

    def fail(self, expected: str):
        t = self.peek()
        if t is None:
            end = self.toks[-1].offset + len(self.toks[-1].text.encode()) if self.toks else 0
            raise ParseError(end, expected, "<end of input>")
        raise ParseError(t.offset, expected, t.text)

    def take(self) -> Node:
        t = self.peek()
        if t is None:
            self.fail("a token")
        self.pos += 1
        return leaf(t.text)

    def expect(self, text: str) -> Node:
        if not self.at(text):
            self.fail(repr(text))
        return self.take()

    def skip(self, text: str) -> None:
        """Consume a delimiter that is implied by the tree shape."""
        if not self.at(text):
            self.fail(repr(text))
        self.implied.append(self.pos)
        self.pos += 1

    def ident(self) -> Node:
        if not self.at_kind("identifier"):
            self.fail("identifier")
        return self.take()

    def mark(self) -> tuple[int, int]:
        return self.pos, self.pending_gt

    def reset(self, m: tuple[int, int]) -> None:
        self.pos, self.pending_gt = m

    # -- types ---------------------------------------------------------

    def type_text(self, allow_varargs: bool = False) -> str:
        """Consume a type and return its flattened text; _Backtrack on failure."""
        start = self.pos
        parts: list[str] = []
        t = self.peek()
        if t is None:
            raise _Backtrack
        if t.kind == "keyword" and t.text in PRIMITIVE_TYPES:
            parts.append(t.text)
            self.pos += 1
        elif t.kind == "identifier":
            self._class_type(parts)
        else:
            raise _Backtrack
        while self.at("[") and self.at("]", 1):
            parts.append("[]")
            self.pos += 2
        if allow_varargs and self.at("..."):
            parts.append("...")
            self.pos += 1
        if self.pending_gt:
            raise _Backtrack
        if self.pos == start:
            raise _Backtrack
        return "".join(parts)

    def _class_type(self, parts: list[str]) -> None:
        while True:
            if not self.at_kind("identifier"):
                raise _Backtrack
            parts.append(self.peek().text)
            self.pos += 1
            if self.at("<"):
                self._type_args(parts)
            if self.at(".") and self.at_kind("identifier", 1):
                parts.append(".")
                self.pos += 1
                continue
            return

    def _type_args(self, parts: list[str]) -> None:
        parts.append("<")
        self.pos += 1
        if self.at(">"):  # diamond
            parts.append(">")
            self.pos += 1
            return
        while True:
            if self.at("?"):
                parts.append("?")
                self.pos += 1
                if self.at("extends") or self.at("super"):
                    parts.append(self.peek().text)
                    self.pos += 1
                    parts.append(self._nested_type())
            else:
                parts.append(self._nested_type())
            if self.pending_gt:
                break
            if self.at(","):
                parts.append(",")
                self.pos += 1
                continue
            break
        self._close_angle(parts)

    def _nested_type(self) -> str:
        parts: list[str] = []
        t = self.peek()
        if t is not None and t.kind == "keyword" and t.text in PRIMITIVE_TYPES:
            parts.append(t.text)
            self.pos += 1
        else:
            self._class_type(parts)
        if self.pending_gt:
            return "".join(parts)
        while self.at("[") and self.at("]", 1):
            parts.append("[]")
            self.pos += 2
        return "".join(parts)

    def _close_angle(self, parts: list[str]) -> None:
        if self.pending_gt:
            self.pending_gt -= 1
            return
        t = self.peek()
        if t is None or t.kind != "operator":
            raise _Backtrack
        if t.text == ">":
            parts.append(">")
        elif t.text == ">>":
            parts.append(">>")
            self.pending_gt = 1
        elif t.text == ">>>":
            parts.append(">>>")
            self.pending_gt = 2
        else:
            raise _Backtrack
        self.pos += 1

    def type_leaf(self, allow_varargs: bool = False) -> Node:
        m = self.mark()
        try:
            return leaf(self.type_text(allow_varargs))
        except _Backtrack:
            self.reset(m)
            self.fail("type")

    # -- method declaration -------------------------------------------

    def method(self) -> Node:
        sig: list[Node] = []
        mods = self.modifiers()
        if mods:
            sig.append(_sig("Modifiers", mods))
        if self.at("<"):
            m = self.mark()
            parts: list[str] = []
            try:
                self._type_args(parts)
            except _Backtrack:
                self.reset(m)
                self.fail("type parameters")
            sig.append(_sig("TypeParams", [leaf("".join(parts))]))
        if self.at_kind("identifier") and self.at("(", 1):
            pass  # constructor: no return type
        else:
            sig.append(_sig("ReturnType", [self.type_leaf()]))
        sig.append(_sig("MethodName", [self.ident()]))
        sig.append(self.params())
        dims = []
        while self.at("["):
            dims += [self.expect("["), self.expect("]")]
        if dims:
            sig.append(_sig("Dims", dims))
        if self.at("throws"):
            throws = [self.take(), self.type_leaf()]
            while self.at(","):
                throws += [self.take(), self.type_leaf()]
            sig.append(_sig("Throws", throws))
        body = Node("MethBody", self.block_statements(), "signature-part")
        if self.peek() is not None:
            self.fail("end of method")
        return Node("Root", [_sig("MethSig", sig), body], "signature-part")

    def modifiers(self) -> list[Node]:
        out: list[Node] = []
        while True:
            if self.at("@") and not self.at("interface", 1):
                out.append(self.annotation())
            elif self.at_kind("keyword") and self.peek().text in _MODIFIERS:
                out.append(self.take())
            else:
                return out

    def annotation(self) -> Node:
        kids = [self.expect("@"), self.ident()]
        while self.at(".") and self.at_kind("identifier", 1):
            kids += [self.take(), self.take()]
        if self.at("("):
            kids.append(self.take())
            if not self.at(")"):
                kids.append(self.expression())
                while self.at(","):
                    kids += [self.take(), self.expression()]
            kids.append(self.expect(")"))
        return _sig("Annotation", kids)

    def params(self) -> Node:
        kids = [self.expect("(")]
        if not self.at(")"):
            kids.append(self.param())
            while self.at(","):
                kids += [self.take(), self.param()]
        kids.append(self.expect(")"))
        return _sig("Params", kids)

    def param(self) -> Node:
        kids = self.modifiers()
        kids.append(self.type_leaf(allow_varargs=True))
        kids.append(self.ident())
        while self.at("["):
            kids += [self.expect("["), self.expect("]")]
        return _sig("Param", kids)

    # -- statements ----------------------------------------------------

    def block_statements(self) -> list[Node]:
        self.skip("{")
        stmts = []
        while not self.at("}"):
            if self.peek() is None:
                self.fail("'}'")
            stmts.append(self.statement())
        self.skip("}")
        return stmts

    def block(self) -> Node:
        return _stmt("Block", self.block_statements())

    def statement(self) -> Node:
        t = self.peek()
        if t is None:
            self.fail("statement")
        text = t.text if t.kind in ("keyword", "punctuation", "operator") else None
        if text == "{":
            return self.block()
        if text == ";":
            return _stmt("Empty", [self.take()])
        if text == "if":
            return self.if_stmt()
        if text == "for":
            return self.for_stmt()
        if text == "while":
            kids = [self.take(), self.expect("("), _expr("Cond", [self.expression()]), self.expect(")")]
            kids.append(_expr("Body", [self.statement()]))
            return _composite("While", kids)
        if text == "do":
            kids = [self.take(), _expr("Body", [self.statement()]), self.expect("while")]
            kids += [self.expect("("), _expr("Cond", [self.expression()]), self.expect(")"), self.expect(";")]
            return _composite("DoWhile", kids)
        if text == "switch":
            return self.switch_stmt()
        if text == "synchronized":
            kids = [self.take(), self.expect("("), _expr("Cond", [self.expression()]), self.expect(")")]
            kids.append(self.block())
            return _composite("SynchBlock", kids)
        if text == "try":
            return self.try_stmt()
        if text == "return":
            kids = [self.take()]
            if not self.at(";"):
                kids.append(self.expression())
            kids.append(self.expect(";"))
            return _stmt("Return", kids)
        if text in ("break", "continue"):
            kids = [self.take()]
            if self.at_kind("identifier"):
                kids.append(self.take())
            kids.append(self.expect(";"))
            return _stmt(text.capitalize(), kids)
        if text == "throw":
            return _stmt("Throw", [self.take(), self.expression(), self.expect(";")])
        if text == "assert":
            kids = [self.take(), self.expression()]
            if self.at(":"):
                kids += [self.take(), self.expression()]
            kids.append(self.expect(";"))
            return _stmt("Assert", kids)
        if text in ("class", "interface", "enum"):
            self.fail("statement (local type declarations are unsupported)")
        if t.kind == "identifier" and self.at(":", 1):
            return _composite("Label", [self.take(), self.take(), self.statement()])
        decl = self.try_local_decl()
        if decl is not None:
            decl.append(self.expect(";"))
            return _stmt("LocalVarDecl", decl)
        return _stmt("ExprStmt", [self.expression(), self.expect(";")])

    def try_local_decl(self, for_each: bool = False) -> list[Node] | None:
        """Local variable declaration without its terminating ';', or None."""
        m = self.mark()
        mods = self.modifiers()
        t = self.peek()
        if t is None:
            self.reset(m)
            return None
        try:
            type_text = self.type_text()
        except _Backtrack:
            if mods:
                self.fail("type")
            self.reset(m)
            return None
        if not self.at_kind("identifier") or not (
            self.at("=", 1) or self.at(";", 1) or self.at(",", 1) or self.at("[", 1) or self.at(":", 1)
        ):
            if mods:
                self.fail("variable declarator")
            self.reset(m)
            return None
        kids = mods + [leaf(type_text)]
        if for_each and self.at(":", 1):
            return kids + [self.ident()]
        kids.append(self.declarator())
        while self.at(","):
            kids += [self.take(), self.declarator()]
        return kids

    def declarator(self) -> Node:
        kids = [self.ident()]
        while self.at("["):
            kids += [self.expect("["), self.expect("]")]
        if self.at("="):
            kids.append(self.take())
            kids.append(self.array_init() if self.at("{") else self.expression())
        return _expr("VarDeclarator", kids)

    def if_stmt(self) -> Node:
        kids = [self.take(), self.expect("("), _expr("Cond", [self.expression()]), self.expect(")")]
        kids.append(_expr("Then", [self.statement()]))
        if self.at("else"):
            kids += [self.take(), _expr("Else", [self.statement()])]
        return _composite("If", kids)

    def for_stmt(self) -> Node:
        kids = [self.take(), self.expect("(")]
        decl = self.try_local_decl(for_each=True)
        if decl is not None and self.at(":"):
            kids.append(_expr("ForEach", decl + [self.take(), self.expression()]))
            kids.append(self.expect(")"))
            kids.append(_expr("Body", [self.statement()]))
            return _composite("For", kids)
        init: list[Node] = []
        if decl is not None:
            init = decl
        elif not self.at(";"):
            init = self.expression_list()
        # empty header slots get no wrapper node
        if init:
            kids.append(_expr("ForInit", init))
        kids.append(self.expect(";"))
        if not self.at(";"):
            kids.append(_expr("Cond", [self.expression()]))
        kids.append(self.expect(";"))
        if not self.at(")"):
            kids.append(_expr("ForUpdate", self.expression_list()))
        kids.append(self.expect(")"))
        kids.append(_expr("Body", [self.statement()]))
        return _composite("For", kids)

    def expression_list(self) -> list[Node]:
        out = [self.expression()]
        while self.at(","):
            out += [self.take(), self.expression()]
        return out

    def switch_stmt(self) -> Node:
        kids = [self.take(), self.expect("("), _expr("Cond", [self.expression()]), self.expect(")")]
        self.skip("{")
        while not self.at("}"):
            if self.at("case"):
                head = [self.take(), self.expression()]
                while self.at(","):
                    head += [self.take(), self.expression()]
            elif self.at("default"):
                head = [self.take()]
            else:
                self.fail("'case' or 'default'")
            if self.at("->"):
                self.fail("':' (arrow-form switch is unsupported)")
            head.append(self.expect(":"))
            body = []
            while not (self.at("case") or self.at("default") or self.at("}")):
                if self.peek() is None:
                    self.fail("'}'")
                body.append(self.statement())
            kids.append(_expr("SwitchCase", head + body))
        self.skip("}")
        return _composite("Switch", kids)

    def try_stmt(self) -> Node:
        kids = [self.take()]
        label = "Try"
        if self.at("("):
            label = "TryWith"
            res = [self.take(), self.resource()]
            while self.at(";"):
                res.append(self.take())
                if self.at(")"):
                    break
                res.append(self.resource())
            res.append(self.expect(")"))
            kids.append(_expr("Resources", res))
        kids.append(self.block())
        n_handlers = 0
        while self.at("catch"):
            c = [self.take(), self.expect("(")] + self.modifiers() + [self.type_leaf()]
            while self.at("|"):
                c += [self.take(), self.type_leaf()]
            c += [self.ident(), self.expect(")"), self.block()]
            kids.append(_expr("Catch", c))
            n_handlers += 1
        if self.at("finally"):
            kids.append(_expr("Finally", [self.take(), self.block()]))
            n_handlers += 1
        if label == "Try" and not n_handlers:
            self.fail("'catch' or 'finally'")
        return _composite(label, kids)

    def resource(self) -> Node:
        decl = self.try_local_decl()
        if decl is None:
            return _expr("Resource", [self.expression()])
        return _expr("Resource", decl)

    # -- expressions ---------------------------------------------------

    def expression(self) -> Node:
        lhs = self.ternary()
        t = self.peek()
        if t is not None and t.kind == "operator" and t.text in _ASSIGN_OPS:
            op = self.take()
            rhs = self.array_init() if self.at("{") else self.expression()
            return _expr("Assign", [lhs, op, rhs])
        if self.at("->"):
            self.fail("expression (lambdas are unsupported)")
        return lhs

    def ternary(self) -> Node:
        cond = self.binary(1)
        if self.at("?"):
            q = self.take()
            a = self.ternary()
            colon = self.expect(":")
            b = self.ternary()
            return _expr("Ternary", [cond, q, a, colon, b])
        return cond

    def binary(self, min_prec: int) -> Node:
        lhs = self.unary()
        while True:
            t = self.peek()
            if t is None or t.kind not in ("operator", "keyword"):
                return lhs
            prec = _BINARY_PREC.get(t.text)
            if prec is None or prec < min_prec:
                return lhs
            op = self.take()
            if t.text == "instanceof":
                mods = self.modifiers()
                lhs = _expr("InstanceOf", [lhs, op, *mods, self.type_leaf()])
                continue
            rhs = self.binary(prec + 1)
            lhs = _expr("Binary", [lhs, op, rhs])

    def unary(self) -> Node:
        t = self.peek()
        if t is None:
            self.fail("expression")
        if t.kind == "operator" and t.text in ("+", "-", "!", "~", "++", "--"):
            op = self.take()
            return _expr("Unary", [op, self.unary()])
        if self.at("("):
            cast = self.try_cast()
            if cast is not None:
                return cast
        return self.postfix()

    def try_cast(self) -> Node | None:
        m = self.mark()
        self.pos += 1
        t = self.peek()
        primitive = t is not None and t.kind == "keyword" and t.text in PRIMITIVE_TYPES
        try:
            type_text = self.type_text()
        except _Backtrack:
            self.reset(m)
            return None
        if not self.at(")"):
            self.reset(m)
            return None
        nxt = self.peek(1)
        if nxt is None:
            self.reset(m)
            return None
        if not primitive:
            ok = (
                nxt.kind in ("identifier", *_LITERAL_KINDS)
                or (nxt.kind == "keyword" and nxt.text in _CAST_FOLLOWERS_KW)
                or nxt.text in ("(", "!", "~")
            )
            if not ok:
                self.reset(m)
                return None
        open_paren = leaf("(")
        close_paren = self.take()
        return _expr("Cast", [open_paren, leaf(type_text), close_paren, self.unary()])

    def postfix(self) -> Node:
        node = self.primary()
        while True:
            if self.at("."):
                dot = self.take()
                if self.at("<"):
                    self.fail("member name (generic method calls are unsupported)")
                t = self.peek()
                if t is None or not (t.kind == "identifier" or t.text in ("this", "class", "super")):
                    self.fail("member name")
                name = self.take()
                if self.at("("):
                    node = _expr("MethodCall", [node, dot, name, self.arguments()])
                else:
                    node = _expr("FieldAccess", [node, dot, name])
            elif self.at("["):
                node = _expr("ArrayAccess", [node, self.take(), self.expression(), self.expect("]")])
            elif self.at("++") or self.at("--"):
                node = _expr("Postfix", [node, self.take()])
            elif self.at("::"):
                self.fail("expression (method references are unsupported)")
            else:
                return node

    def arguments(self) -> Node:
        kids = [self.expect("(")]
        if not self.at(")"):
            kids += self.expression_list()
        kids.append(self.expect(")"))
        return _expr("Args", kids)

    def primary(self) -> Node:
        t = self.peek()
        if t is None:
            self.fail("expression")
        if t.kind in _LITERAL_KINDS:
            return self.take()
        if t.kind == "identifier":
            name = self.take()
            if self.at("("):
                return _expr("MethodCall", [name, self.arguments()])
            return name
        if t.kind == "keyword":
            if t.text in ("this", "super", "true", "false", "null"):
                name = self.take()
                if self.at("("):
                    return _expr("MethodCall", [name, self.arguments()])
                return name
            if t.text == "new":
                return self.creation()
            if t.text in PRIMITIVE_TYPES and self.at(".", 1) and self.at("class", 2):
                return _expr("FieldAccess", [self.take(), self.take(), self.take()])
        if self.at("("):
            return _expr("Paren", [self.take(), self.expression(), self.expect(")")])
        if self.at("{"):
            return self.array_init()
        self.fail("expression")

    def creation(self) -> Node:
        new = self.take()
        m = self.mark()
        try:
            base = []
            t = self.peek()
            if t is not None and t.kind == "keyword" and t.text in PRIMITIVE_TYPES:
                base.append(t.text)
                self.pos += 1
            else:
                self._class_type(base)
            if self.pending_gt:
                raise _Backtrack
        except _Backtrack:
            self.reset(m)
            self.fail("type after 'new'")
        type_node = leaf("".join(base))
        if self.at("["):
            kids = [new, type_node]
            while self.at("["):
                if self.at("]", 1):
                    kids += [self.take(), self.take()]
                else:
                    kids += [self.take(), self.expression(), self.expect("]")]
            if self.at("{"):
                kids.append(self.array_init())
            return _expr("NewArray", kids)
        node = _expr("New", [new, type_node, self.arguments()])
        if self.at("{"):
            self.fail("expression (anonymous classes are unsupported)")
        return node

    def array_init(self) -> Node:
        kids = [self.expect("{")]
        while not self.at("}"):
            kids.append(self.array_init() if self.at("{") else self.expression())
            if self.at(","):
                kids.append(self.take())
            elif not self.at("}"):
                self.fail("',' or '}'")
        kids.append(self.expect("}"))
        return _expr("ArrayInit", kids)


def parse_method(tokens: list[Token]) -> Node:
    """Parse exactly one method declaration into its full AST."""
    if not tokens:
        raise ParseError(0, "method declaration", "<end of input>")
    return _Parser(tokens).method()


def parse_source(source: str) -> Node:
    return parse_method(tokenize(source))


def implied_delimiters(tokens: list[Token]) -> list[Token]:
    """Tokens with no terminal in the AST (block and switch braces)."""
    p = _Parser(tokens)
    p.method()
    return [tokens[i] for i in p.implied]
