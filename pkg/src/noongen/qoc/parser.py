"""Lexer, recursive-descent parser and static validator for ``.qoc`` programs.

Grammar (v1)::

    program  = NL* header { NL+ stmt } NL* EOF
    header   = "modes" INT { NL+ "param" IDENT { IDENT } }
    stmt     = "bs" INT INT expr [ expr | "@sym" ]
             | "ps" INT expr
             | "detect" INT "->" IDENT
             | "vacuum" INT
             | "if" cond "{" block "}" [ "else" "{" block "}" ]
             | "discard_if" cond
             | "unreachable"
    block    = NL* [ stmt { NL+ stmt } ] NL*
    cond     = expr ( "<" | "<=" | "==" | ">" | ">=" ) expr
    expr     = term { ("+" | "-") term }
    term     = unary { ("*" | "/") unary }
    unary    = "-" unary | atom
    atom     = NUMBER | "pi" | IDENT | FUNC "(" expr ")" | "(" expr ")"

Newlines terminate statements; ``#`` starts a comment.  Mode indices are
0-based.
"""

from dataclasses import dataclass

from . import ast as A

KEYWORDS = frozenset(
    ["modes", "param", "bs", "ps", "detect", "vacuum", "if", "else", "discard_if", "unreachable"]
)
MAX_MODES = 64
MAX_DEPTH = 100
_DIGITS = frozenset("0123456789")
_IDENT_START = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_IDENT_REST = _IDENT_START | _DIGITS
_SINGLE = {"+", "-", "*", "/", "(", ")", "{", "}"}


class QocError(Exception):
    def __init__(self, message, span=None, expected=()):
        self.message = message
        self.span = span
        self.expected = frozenset(expected)
        super().__init__(self.__str__())

    def __str__(self):
        where = "" if self.span is None else f"line {self.span.line}, column {self.span.column}: "
        exp = ""
        if self.expected:
            exp = " (expected " + ", ".join(sorted(self.expected)) + ")"
        return f"{where}{self.message}{exp}"


class ParseError(QocError):
    """Lexical or syntax error."""


class ValidationError(QocError):
    """Well-formed program that violates a static rule."""


@dataclass(frozen=True)
class Token:
    kind: str  # INT NUMBER IDENT KW OP NL EOF SYM
    text: str
    span: A.Span


def _span_at(src, offset, line_starts):
    # line_starts is sorted; binary search keeps lexing linear
    lo, hi = 0, len(line_starts) - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if line_starts[mid] <= offset:
            lo = mid
        else:
            hi = mid - 1
    return A.Span(lo + 1, offset - line_starts[lo] + 1, offset)


def tokenize(src):
    line_starts = [0] + [i + 1 for i, ch in enumerate(src) if ch == "\n"]
    tokens = []
    i = 0
    n = len(src)

    def span(pos):
        return _span_at(src, pos, line_starts)

    while i < n:
        ch = src[i]
        if ch in " \t\r":
            i += 1
        elif ch == "#":
            while i < n and src[i] != "\n":
                i += 1
        elif ch == "\n":
            tokens.append(Token("NL", "\n", span(i)))
            i += 1
        elif ch in _DIGITS or (ch == "." and i + 1 < n and src[i + 1] in _DIGITS):
            start = i
            while i < n and src[i] in _DIGITS:
                i += 1
            kind = "INT"
            if i < n and src[i] == ".":
                kind = "NUMBER"
                i += 1
                while i < n and src[i] in _DIGITS:
                    i += 1
            if i < n and src[i] in "eE":
                j = i + 1
                if j < n and src[j] in "+-":
                    j += 1
                if j < n and src[j] in _DIGITS:
                    kind = "NUMBER"
                    i = j
                    while i < n and src[i] in _DIGITS:
                        i += 1
            tokens.append(Token(kind, src[start:i], span(start)))
        elif ch in _IDENT_START:
            start = i
            while i < n and src[i] in _IDENT_REST:
                i += 1
            word = src[start:i]
            tokens.append(Token("KW" if word in KEYWORDS else "IDENT", word, span(start)))
        elif ch == "@":
            start = i
            i += 1
            while i < n and src[i] in _IDENT_REST:
                i += 1
            if src[start:i] != "@sym":
                raise ParseError(f"unknown annotation {src[start:i]!r}", span(start), {"@sym"})
            tokens.append(Token("SYM", "@sym", span(start)))
        elif src.startswith("->", i):
            tokens.append(Token("OP", "->", span(i)))
            i += 2
        elif ch in "<>=":
            if src.startswith("<=", i) or src.startswith(">=", i) or src.startswith("==", i):
                tokens.append(Token("OP", src[i : i + 2], span(i)))
                i += 2
            elif ch == "=":
                raise ParseError("single '=' is not an operator", span(i), {"=="})
            else:
                tokens.append(Token("OP", ch, span(i)))
                i += 1
        elif ch in _SINGLE:
            tokens.append(Token("OP", ch, span(i)))
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r}", span(i))
    tokens.append(Token("EOF", "", span(n)))
    return tokens


def _describe(tok):
    if tok.kind == "NL":
        return "newline"
    if tok.kind == "EOF":
        return "end of input"
    return repr(tok.text)


class _Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.pos = 0
        self.depth = 0

    @property
    def tok(self):
        return self.toks[self.pos]

    def advance(self):
        tok = self.toks[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def error(self, what, expected):
        raise ParseError(f"unexpected {_describe(self.tok)}{what}", self.tok.span, expected)

    def at(self, kind, text=None):
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def expect(self, kind, text=None, label=None):
        if not self.at(kind, text):
            self.error("", {label or text or kind.lower()})
        return self.advance()

    def skip_newlines(self):
        while self.at("NL"):
            self.advance()

    def end_of_statement(self, in_block):
        if self.at("NL"):
            self.skip_newlines()
            return
        if self.at("EOF") or (in_block and self.at("OP", "}")):
            return
        self.error(" after statement", {"newline"})

    def integer(self, label):
        tok = self.expect("INT", label=label)
        if len(tok.text) > 9:
            raise ParseError("integer literal too large", tok.span)
        return int(tok.text)

    # -- program ---------------------------------------------------------------

    def program(self):
        self.skip_newlines()
        start = self.expect("KW", "modes").span
        mode_count = self.integer("mode count")
        params = []
        self.end_of_statement(False)
        while self.at("KW", "param"):
            self.advance()
            params.append(self.expect("IDENT", label="parameter name"))
            while self.at("IDENT"):
                params.append(self.advance())
            self.end_of_statement(False)
        stmts = self.block(in_block=False)
        if not self.at("EOF"):
            self.error("", {"statement"})
        prog = A.Program(mode_count, tuple(t.text for t in params), tuple(stmts), start)
        return prog, params

    def block(self, in_block):
        stmts = []
        self.skip_newlines()
        while not self.at("EOF") and not (in_block and self.at("OP", "}")):
            stmts.append(self.statement(in_block))
        return stmts

    def statement(self, in_block):
        tok = self.tok
        if tok.kind != "KW" or tok.text in ("modes", "param", "else"):
            self.error("", {"bs", "ps", "detect", "vacuum", "if", "discard_if", "unreachable"})
        self.advance()
        kw = tok.text
        if kw == "bs":
            a = self.integer("mode index")
            b = self.integer("mode index")
            gamma = self.expr()
            chi = None
            if self.at("SYM"):
                sym = self.advance()
                chi = A.BinOp("/", A.Name("pi", sym.span), A.Num(2.0, sym.span), sym.span)
            elif not (self.at("NL") or self.at("EOF") or (in_block and self.at("OP", "}"))):
                chi = self.expr()
            st = A.BS(a, b, gamma, chi, tok.span)
        elif kw == "ps":
            st = A.PS(self.integer("mode index"), self.expr(), tok.span)
        elif kw == "detect":
            mode = self.integer("mode index")
            self.expect("OP", "->")
            reg = self.expect("IDENT", label="register name").text
            st = A.Detect(mode, reg, tok.span)
        elif kw == "vacuum":
            st = A.Vacuum(self.integer("mode count"), tok.span)
        elif kw == "discard_if":
            st = A.DiscardIf(self.condition(), tok.span)
        elif kw == "unreachable":
            st = A.Unreachable(tok.span)
        else:  # if
            cond = self.condition()
            body = self.braced()
            orelse = None
            if self.at("KW", "else"):
                self.advance()
                orelse = tuple(self.braced())
            st = A.If(cond, tuple(body), orelse, tok.span)
        self.end_of_statement(in_block)
        return st

    def braced(self):
        self.expect("OP", "{")
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise ParseError("blocks nested too deeply", self.tok.span)
        body = self.block(in_block=True)
        self.expect("OP", "}")
        self.depth -= 1
        return body

    def condition(self):
        left = self.expr()
        if not (self.tok.kind == "OP" and self.tok.text in A.COMPARISONS):
            self.error("", set(A.COMPARISONS))
        op = self.advance()
        return A.Compare(op.text, left, self.expr(), op.span)

    # -- expressions -----------------------------------------------------------

    def expr(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise ParseError("expression nested too deeply", self.tok.span)
        node = self.term()
        while self.tok.kind == "OP" and self.tok.text in "+-" and len(self.tok.text) == 1:
            op = self.advance()
            node = A.BinOp(op.text, node, self.term(), op.span)
        self.depth -= 1
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind == "OP" and self.tok.text in ("*", "/"):
            op = self.advance()
            node = A.BinOp(op.text, node, self.unary(), op.span)
        return node

    def unary(self):
        if self.at("OP", "-"):
            op = self.advance()
            self.depth += 1
            if self.depth > MAX_DEPTH:
                raise ParseError("expression nested too deeply", op.span)
            node = A.Unary("-", self.unary(), op.span)
            self.depth -= 1
            return node
        return self.atom()

    def atom(self):
        tok = self.tok
        if tok.kind in ("INT", "NUMBER"):
            self.advance()
            value = float(tok.text) if len(tok.text) < 400 else float("inf")
            if value == float("inf"):
                raise ParseError("numeric literal out of range", tok.span)
            return A.Num(value, tok.span)
        if tok.kind == "IDENT":
            self.advance()
            if self.at("OP", "("):
                self.advance()
                arg = self.expr()
                self.expect("OP", ")")
                return A.Call(tok.text, arg, tok.span)
            return A.Name(tok.text, tok.span)
        if self.at("OP", "("):
            self.advance()
            node = self.expr()
            self.expect("OP", ")")
            return node
        self.error("", {"expression"})


def parse_unvalidated(source):
    if isinstance(source, (bytes, bytearray)):
        try:
            source = bytes(source).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"invalid UTF-8: {exc.reason}", A.Span(1, exc.start + 1, exc.start)) from None
    prog, _ = _Parser(tokenize(source)).program()
    return prog


def parse(source):
    """Parse and validate ``.qoc`` source (``str`` or UTF-8 ``bytes``)."""
    prog = parse_unvalidated(source)
    validate(prog)
    return prog


# -- validation -------------------------------------------------------------------


def validate(prog):
    if not 1 <= prog.mode_count <= MAX_MODES:
        raise ValidationError(f"mode count must be in [1, {MAX_MODES}]", prog.span)
    seen = set()
    for name in prog.params:
        if name in seen:
            raise ValidationError(f"parameter {name} declared twice", prog.span)
        if name in A.FUNCTIONS or name in A.CONSTANTS:
            raise ValidationError(f"parameter name {name} is reserved", prog.span)
        seen.add(name)
    state = _Scope(set(prog.params), set(), set())
    modes = _check_block(prog.statements, prog.mode_count, state)
    if modes > MAX_MODES:
        raise ValidationError(f"program grows to {modes} modes (max {MAX_MODES})", prog.span)
    return prog


@dataclass
class _Scope:
    params: set
    definite: set  # registers written on every path so far
    possible: set  # registers written on some path so far


def _check_mode(mode, modes, span):
    if not 0 <= mode < modes:
        raise ValidationError(f"mode index {mode} out of range (program has {modes} modes here)", span)


def _check_expr(e, scope):
    if isinstance(e, A.Num):
        return
    if isinstance(e, A.Name):
        if e.id in A.CONSTANTS or e.id in scope.params:
            return
        if e.id in A.FUNCTIONS:
            raise ValidationError(f"function {e.id} used without an argument", e.span)
        if e.id not in scope.definite:
            raise ValidationError(f"register {e.id} read before it is written", e.span)
        return
    if isinstance(e, A.Unary):
        _check_expr(e.operand, scope)
    elif isinstance(e, (A.BinOp, A.Compare)):
        _check_expr(e.left, scope)
        _check_expr(e.right, scope)
    elif isinstance(e, A.Call):
        if e.func not in A.FUNCTIONS:
            raise ValidationError(f"unknown function {e.func}", e.span, set(A.FUNCTIONS))
        _check_expr(e.arg, scope)


def _check_block(stmts, modes, scope):
    for st in stmts:
        if isinstance(st, A.BS):
            _check_mode(st.mode_a, modes, st.span)
            _check_mode(st.mode_b, modes, st.span)
            if st.mode_a == st.mode_b:
                raise ValidationError("beam splitter needs two distinct modes", st.span)
            _check_expr(st.gamma, scope)
            if st.chi is not None:
                _check_expr(st.chi, scope)
        elif isinstance(st, A.PS):
            _check_mode(st.mode, modes, st.span)
            _check_expr(st.chi, scope)
        elif isinstance(st, A.Detect):
            _check_mode(st.mode, modes, st.span)
            if st.register in scope.possible:
                raise ValidationError(f"register {st.register} written twice", st.span)
            if st.register in scope.params or st.register in A.CONSTANTS or st.register in A.FUNCTIONS:
                raise ValidationError(f"register name {st.register} shadows a parameter or builtin", st.span)
            scope.definite.add(st.register)
            scope.possible.add(st.register)
        elif isinstance(st, A.Vacuum):
            if st.count < 1:
                raise ValidationError("vacuum needs at least one mode", st.span)
            modes += st.count
            if modes > MAX_MODES:
                raise ValidationError(f"more than {MAX_MODES} modes", st.span)
        elif isinstance(st, A.DiscardIf):
            _check_expr(st.cond, scope)
        elif isinstance(st, A.If):
            _check_expr(st.cond, scope)
            body_scope = _Scope(scope.params, set(scope.definite), set(scope.possible))
            body_modes = _check_block(st.body, modes, body_scope)
            else_scope = _Scope(scope.params, set(scope.definite), set(scope.possible))
            else_modes = _check_block(st.orelse or (), modes, else_scope)
            if body_modes != else_modes:
                raise ValidationError(
                    f"branches end with different mode counts ({body_modes} vs {else_modes})", st.span
                )
            modes = body_modes
            scope.definite = body_scope.definite & else_scope.definite
            scope.possible = body_scope.possible | else_scope.possible
    return modes
