"""Text formats: KB files, action files and MUST/MAY query files.

KB file::

    VOCAB
    closed concept S3::Bucket, KMS::Key
    open concept PublicBucket
    closed role loggingConfiguration
    open individual Private
    model individual r
    resource node b
    TBOX
    exists loggingDestination- <= not PublicBucket
    SBOX
    S3::Bucket <= exists loggingConfiguration
    funct bucketEncryptionRule
    ABOX
    PublicBucket(p)
    MBOX
    tree b { S3::Bucket(b), loggingConfiguration(b, c) }

Action file::

    action createBucket(x: name, y: acl) = new x { S3::Bucket(x), accessControl(x, y) } ; .
    action deleteLoggingConfiguration(x) =
        when [y] S3::Bucket(x) and loggingConfiguration(x, y) -> del x { loggingConfiguration(x, y) } ; .

Query file::

    q[x] = MUST { S3::Bucket(x) } and not MAY { exists y . accessControl(x, y), y != Private }

``#`` starts a comment.  Commas between list items are optional.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator

from .actions import Action, AddTo, AddTree, Cond, RemoveFrom, RemoveTree, Step
from .kb import (
    BOTTOM,
    Assertion,
    BasicConcept,
    CcKB,
    ConceptAssertion,
    Exists,
    Functionality,
    MBox,
    Named,
    NegativeInclusion,
    PositiveInclusion,
    RoleAssertion,
    Vocabulary,
    VocabularyError,
    active_domain,
    ind,
    sort_key,
    validate_placement,
)
from .queries import (
    ActionQuery,
    And,
    AQAnd,
    AQAtom,
    AQNot,
    AQOr,
    ConjunctiveQuery,
    May,
    Must,
    Not,
    Or,
    Query,
    QueryAtom,
    QueryError,
    UnionQuery,
    formula_terms,
    leaves,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: {message}" if line else message)


class PlacementError(ParseError):
    def __init__(self, violations):
        self.violations = violations
        lines = "; ".join(f"{v.element}: {v.reason}" for v in violations)
        super().__init__(f"placement violations: {lines}")


@dataclass(frozen=True)
class Token:
    kind: str  # "name" or the punctuation itself
    text: str
    line: int
    column: int


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<punct><=|!=|->|[(){}\[\],;.=:|\-])
  | (?P<name>[A-Za-z0-9_]+(?:::[A-Za-z0-9_]+)*)
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        if kind == "punct":
            tokens.append(Token(value, value, line, pos - line_start + 1))
        elif kind == "name":
            tokens.append(Token("name", value, line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rindex("\n") + 1
        pos = m.end()
    return tokens


class _Stream:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self, offset: int = 0) -> Token | None:
        j = self.i + offset
        return self.tokens[j] if j < len(self.tokens) else None

    def at(self, *texts: str, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok is not None and tok.text in texts

    def at_name(self) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == "name"

    def error(self, message: str) -> ParseError:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else None
            return ParseError(f"{message} (at end of input)", last.line if last else 1, last.column if last else 1)
        return ParseError(f"{message}, found {tok.text!r}", tok.line, tok.column)

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of input")
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}")
        return self.next()

    def name(self, what: str = "name") -> Token:
        if not self.at_name():
            raise self.error(f"expected {what}")
        return self.next()

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def done(self) -> bool:
        return self.i >= len(self.tokens)


def _name_list(ts: _Stream, what: str) -> list[str]:
    names = [ts.name(what).text]
    while ts.accept(","):
        names.append(ts.name(what).text)
    return names


def _args(ts: _Stream) -> list[Token]:
    ts.expect("(")
    args = [ts.name("term")]
    while ts.accept(","):
        args.append(ts.name("term"))
    ts.expect(")")
    if len(args) > 2:
        raise ParseError("atoms take one or two arguments", args[0].line, args[0].column)
    return args


def _assertion(ts: _Stream) -> tuple[Assertion, Token]:
    pred = ts.name("predicate")
    args = [a.text for a in _args(ts)]
    if len(args) == 1:
        return ConceptAssertion(pred.text, args[0]), pred
    return RoleAssertion(pred.text, args[0], args[1]), pred


def _assertion_block(ts: _Stream) -> list[tuple[Assertion, Token]]:
    ts.expect("{")
    out = []
    while not ts.at("}"):
        out.append(_assertion(ts))
        ts.accept(",")
    ts.expect("}")
    return out


# --- KB files ------------------------------------------------------------------------

SECTIONS = ("VOCAB", "TBOX", "SBOX", "ABOX", "MBOX")

_VOCAB_KINDS = {
    ("closed", "concept"): "closed_concepts",
    ("open", "concept"): "open_concepts",
    ("closed", "role"): "closed_roles",
    ("open", "role"): "open_roles",
    ("open", "individual"): "open_individuals",
    ("model", "individual"): "model_individuals",
    ("resource", "node"): "resource_nodes",
}


def _basic_concept(ts: _Stream) -> tuple[BasicConcept, Token]:
    tok = ts.peek()
    if ts.accept("Bot"):
        return BOTTOM, tok
    if ts.accept("exists"):
        role = ts.name("role")
        inverse = ts.accept("-")
        return Exists(role.text, inverse), role
    return Named(ts.name("concept").text), tok


def _axiom(ts: _Stream):
    start = ts.peek()
    if ts.accept("funct"):
        role = ts.name("role")
        return Functionality(role.text, ts.accept("-")), [(role.text, "role", role)]
    lhs, ltok = _basic_concept(ts)
    ts.expect("<=")
    negative = ts.accept("not")
    rhs, rtok = _basic_concept(ts)
    refs = []
    for b, tok in ((lhs, ltok), (rhs, rtok)):
        if isinstance(b, Named):
            refs.append((b.name, "concept", tok))
        elif isinstance(b, Exists):
            refs.append((b.role, "role", tok))
    ax = NegativeInclusion(lhs, rhs) if negative else PositiveInclusion(lhs, rhs)
    return ax, refs or [(None, None, start)]


def parse_kb(text: str, *, check_placement: bool = True) -> CcKB:
    """Parse the sectioned KB format.

    Individuals that are never declared become open when they first occur in
    the ABox and model nodes when they occur in the MBox.
    """
    ts = _Stream(text)
    decl: dict[str, set[str]] = {field: set() for field in _VOCAB_KINDS.values()}
    tbox, sbox, abox = [], [], []
    trees: dict[str, set] = {}
    refs: list[tuple[str, str, Token]] = []  # (name, kind, token) for undeclared-name checks
    section = None
    while not ts.done():
        if ts.at(*SECTIONS):
            section = ts.next().text
            continue
        if section is None:
            raise ts.error("expected a section header (VOCAB, TBOX, SBOX, ABOX, MBOX)")
        if section == "VOCAB":
            first = ts.name("declaration kind")
            second = ts.name("declaration kind")
            key = _VOCAB_KINDS.get((first.text, second.text))
            if key is None:
                raise ParseError(f"unknown declaration '{first.text} {second.text}'", first.line, first.column)
            for name in _name_list(ts, "name"):
                decl[key].add(name)
        elif section in ("TBOX", "SBOX"):
            ax, ax_refs = _axiom(ts)
            (tbox if section == "TBOX" else sbox).append(ax)
            refs.extend(r for r in ax_refs if r[0] is not None)
            ts.accept(",")
        elif section == "ABOX":
            a, tok = _assertion(ts)
            abox.append(a)
            refs.append((a.predicate, "concept" if isinstance(a, ConceptAssertion) else "role", tok))
            ts.accept(",")
        else:
            ts.expect("tree")
            root = ts.name("tree root").text
            block = _assertion_block(ts)
            tree = trees.setdefault(root, set())
            for a, tok in block:
                tree.add(a)
                refs.append((a.predicate, "concept" if isinstance(a, ConceptAssertion) else "role", tok))

    for name, kind, tok in refs:
        declared = decl[f"closed_{kind}s"] | decl[f"open_{kind}s"]
        if name not in declared:
            raise ParseError(f"undeclared {kind} {name}", tok.line, tok.column)

    for root in decl["resource_nodes"]:
        trees.setdefault(root, set())
    mbox = MBox(trees)
    open_inds = decl["open_individuals"] | ind(abox)
    model = decl["model_individuals"] | mbox.roots | (active_domain(mbox) - open_inds)
    try:
        vocab = Vocabulary(
            closed_concepts=frozenset(decl["closed_concepts"]),
            open_concepts=frozenset(decl["open_concepts"]),
            closed_roles=frozenset(decl["closed_roles"]),
            open_roles=frozenset(decl["open_roles"]),
            open_individuals=frozenset(open_inds),
            model_individuals=frozenset(model),
            resource_nodes=mbox.roots,
        )
    except VocabularyError as e:
        raise ParseError(str(e)) from e
    kb = CcKB(vocab, frozenset(tbox), frozenset(sbox), frozenset(abox), mbox)
    if check_placement:
        report = validate_placement(kb)
        if report:
            raise PlacementError(report)
    return kb


def serialize_kb(kb: CcKB) -> str:
    """Inverse of :func:`parse_kb` (up to ordering, which is canonical here)."""
    v = kb.vocabulary
    lines = ["VOCAB"]
    non_root_model = v.model_individuals - v.resource_nodes
    for (first, second), key in _VOCAB_KINDS.items():
        names = non_root_model if key == "model_individuals" else getattr(v, key)
        if names:
            lines.append(f"{first} {second} {', '.join(sorted(names))}")
    for header, axioms in (("TBOX", kb.tbox), ("SBOX", kb.sbox)):
        lines.append(header)
        lines.extend(str(ax) for ax in sorted(axioms, key=sort_key))
    lines.append("ABOX")
    lines.extend(str(a) for a in sorted(kb.abox, key=sort_key))
    lines.append("MBOX")
    for root, tree in kb.mbox.canonical():
        if tree:
            body = "\n".join(f"  {a}" for a in tree)
            lines.append(f"tree {root} {{\n{body}\n}}")
        else:
            lines.append(f"tree {root} {{ }}")
    return "\n".join(lines) + "\n"


# --- action files --------------------------------------------------------------------------


def _aq_formula(ts: _Stream):
    left = _aq_conj(ts)
    while ts.accept("or"):
        left = AQOr(left, _aq_conj(ts))
    return left


def _aq_conj(ts: _Stream):
    left = _aq_unary(ts)
    while ts.accept("and"):
        left = AQAnd(left, _aq_unary(ts))
    return left


def _aq_unary(ts: _Stream):
    if ts.accept("not"):
        return AQNot(_aq_unary(ts))
    if ts.accept("("):
        inner = _aq_formula(ts)
        ts.expect(")")
        return inner
    pred = ts.name("predicate")
    return AQAtom(pred.text, tuple(a.text for a in _args(ts)))


def _aq_atoms(phi) -> Iterator[AQAtom]:
    if isinstance(phi, AQAtom):
        yield phi
    elif isinstance(phi, AQNot):
        yield from _aq_atoms(phi.operand)
    else:
        yield from _aq_atoms(phi.left)
        yield from _aq_atoms(phi.right)


def _check_closed(vocab: Vocabulary | None, predicate: str, arity: int, tok: Token) -> None:
    if vocab is None:
        return
    if arity == 1 and not vocab.is_concept(predicate) or arity == 2 and not vocab.is_role(predicate):
        raise ParseError(f"undeclared {'concept' if arity == 1 else 'role'} {predicate}", tok.line, tok.column)
    if not vocab.is_closed(predicate):
        raise ParseError(f"{predicate} is open; action effects and queries use closed predicates", tok.line, tok.column)


def _basic_effect(ts: _Stream, scope: set[str], vocab: Vocabulary | None):
    kw = ts.name("effect keyword")
    if kw.text not in ("add", "del", "new", "drop"):
        raise ParseError(f"unknown effect {kw.text!r}", kw.line, kw.column)
    node = ts.name("node")
    if node.text not in scope:
        raise ParseError(f"effect node {node.text} must be a parameter or answer variable", node.line, node.column)
    if kw.text == "drop":
        return RemoveTree(node.text)
    block = _assertion_block(ts)
    for a, tok in block:
        _check_closed(vocab, a.predicate, len(a.individuals()), tok)
    assertions = tuple(a for a, _ in block)
    cls = {"add": AddTo, "del": RemoveFrom, "new": AddTree}[kw.text]
    return cls(node.text, assertions)


def _action(ts: _Stream, vocab: Vocabulary | None) -> Action:
    ts.expect("action")
    name = ts.name("action name").text
    ts.expect("(")
    params, tags = [], []
    while not ts.at(")"):
        p = ts.name("parameter")
        if p.text in params:
            raise ParseError(f"duplicate parameter {p.text}", p.line, p.column)
        params.append(p.text)
        tags.append(ts.name("sort tag").text if ts.accept(":") else None)
        if not ts.accept(","):
            break
    ts.expect(")")
    ts.expect("=")
    steps: list[Step] = []
    scope = set(params)
    while not ts.accept("."):
        if ts.accept("when"):
            answer_vars: list[str] = []
            if ts.accept("["):
                while not ts.at("]"):
                    v = ts.name("answer variable")
                    if v.text in scope:
                        raise ParseError(f"answer variable {v.text} shadows a parameter", v.line, v.column)
                    answer_vars.append(v.text)
                    if not ts.accept(","):
                        break
                ts.expect("]")
            formula_tok = ts.peek()
            formula = _aq_formula(ts)
            for atom in _aq_atoms(formula):
                _check_closed(vocab, atom.predicate, len(atom.args), formula_tok)
            missing = set(answer_vars) - formula_terms(formula)
            if missing:
                raise ParseError(f"answer variables {sorted(missing)} do not occur in the query", formula_tok.line, formula_tok.column)
            try:
                query = ActionQuery(formula, tuple(answer_vars), frozenset(params))
            except QueryError as e:
                raise ParseError(str(e), formula_tok.line, formula_tok.column) from e
            ts.expect("->")
            effect = _basic_effect(ts, scope | set(answer_vars), vocab)
            steps.append(Cond(query, effect))
        else:
            steps.append(_basic_effect(ts, scope, vocab))
        if not ts.accept(";"):
            ts.expect(".")
            break
    return Action(name, tuple(params), tuple(steps), tuple(tags))


def parse_actions(text: str, vocabulary: Vocabulary | None = None) -> dict[str, Action]:
    """Parse an action file into ``{name: Action}`` in declaration order."""
    ts = _Stream(text)
    actions: dict[str, Action] = {}
    while not ts.done():
        tok = ts.peek()
        action = _action(ts, vocabulary)
        if action.name in actions:
            raise ParseError(f"duplicate action {action.name}", tok.line, tok.column)
        actions[action.name] = action
    return actions


def parse_action(text: str, vocabulary: Vocabulary | None = None) -> Action:
    """Parse a single action definition."""
    actions = parse_actions(text, vocabulary)
    if len(actions) != 1:
        raise ParseError(f"expected exactly one action, found {len(actions)}")
    return next(iter(actions.values()))


# --- MUST/MAY queries -------------------------------------------------------------------------


def _cq(ts: _Stream, answer_vars: tuple[str, ...], allow_ineq: bool) -> ConjunctiveQuery:
    existential: list[str] = []
    start = ts.peek()
    if ts.accept("exists"):
        existential = _name_list(ts, "variable")
        ts.expect(".")
    atoms, ineqs = [], []
    while True:
        if ts.at_name() and ts.at("!=", offset=1):
            tok = ts.next()
            ts.expect("!=")
            if not allow_ineq:
                raise ParseError("inequalities are only allowed under MAY", tok.line, tok.column)
            ineqs.append((tok.text, ts.name("term").text))
        else:
            pred = ts.name("atom")
            atoms.append(QueryAtom(pred.text, tuple(a.text for a in _args(ts))))
        if not ts.accept(","):
            break
    try:
        return ConjunctiveQuery(answer_vars, tuple(existential), tuple(atoms), tuple(ineqs))
    except QueryError as e:
        raise ParseError(str(e), start.line, start.column) from e


def _leaf(ts: _Stream, answer_vars: tuple[str, ...]):
    kw = ts.next()
    must = kw.text == "MUST"
    ts.expect("{")
    disjuncts = [_cq(ts, answer_vars, not must)]
    while ts.accept("|"):
        disjuncts.append(_cq(ts, answer_vars, not must))
    ts.expect("}")
    ucq = UnionQuery(tuple(disjuncts))
    return Must(ucq) if must else May(ucq)


def _mm_formula(ts: _Stream, answer_vars):
    left = _mm_conj(ts, answer_vars)
    while ts.accept("or"):
        left = Or(left, _mm_conj(ts, answer_vars))
    return left


def _mm_conj(ts: _Stream, answer_vars):
    left = _mm_unary(ts, answer_vars)
    while ts.accept("and"):
        left = And(left, _mm_unary(ts, answer_vars))
    return left


def _mm_unary(ts: _Stream, answer_vars):
    if ts.accept("not"):
        return Not(_mm_unary(ts, answer_vars))
    if ts.accept("("):
        inner = _mm_formula(ts, answer_vars)
        ts.expect(")")
        return inner
    if ts.at("MUST", "MAY"):
        return _leaf(ts, answer_vars)
    raise ts.error("expected MUST, MAY, not or '('")


def _query(ts: _Stream) -> Query:
    name = ts.name("query name").text
    answer_vars: list[str] = []
    if ts.accept("["):
        while not ts.at("]"):
            answer_vars.append(ts.name("answer variable").text)
            if not ts.accept(","):
                break
        ts.expect("]")
    ts.expect("=")
    return Query(tuple(answer_vars), _mm_formula(ts, tuple(answer_vars)), name)


def parse_query(text: str) -> Query:
    ts = _Stream(text)
    query = _query(ts)
    if not ts.done():
        raise ts.error("unexpected trailing input")
    return query


@dataclass(frozen=True)
class Goal:
    tuple: tuple[str, ...]
    query: Query


def parse_goal(text: str) -> Goal:
    """``goal t1, t2`` followed by a query definition."""
    ts = _Stream(text)
    ts.expect("goal")
    values: list[str] = []
    if ts.accept("("):
        if not ts.at(")"):
            values = _name_list(ts, "individual")
        ts.expect(")")
    elif not ts.at_name() or not ts.at("[", "=", offset=1):
        values = _name_list(ts, "individual")
    query = _query(ts)
    if not ts.done():
        raise ts.error("unexpected trailing input")
    if len(values) != query.arity:
        raise ParseError(f"goal tuple has {len(values)} values, query arity is {query.arity}")
    return Goal(tuple(values), query)


def check_query_vocabulary(query: Query, vocab: Vocabulary) -> None:
    for leaf in leaves(query.formula):
        for cq in leaf.query.disjuncts:
            for atom in cq.atoms:
                ok = vocab.is_concept(atom.predicate) if len(atom.args) == 1 else vocab.is_role(atom.predicate)
                if not ok:
                    raise QueryError(f"query uses undeclared predicate {atom.predicate}")
