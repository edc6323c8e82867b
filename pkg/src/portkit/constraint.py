"""A module containing the selection constraint language.

Selection constraints are propositional formulas over event symbols, e.g.

    not e_taken and e_arm_idle and e_pull_idle

The grammar (lowest to highest precedence) is

    expr    := and_expr ("or" and_expr)*
    and_expr:= unary ("and" unary)*
    unary   := "not" unary | atom
    atom    := "true" | "false" | IDENT | "(" expr ")"

Keywords are lower case and reserved. Binary operators associate to the
left. An event symbol evaluates to true when it is in the active set and to
false otherwise.

The module also implements the configuration time consistency check: every
assignment over the union of the table's symbols is enumerated and each pair
of connections whose rules can hold at the same time is reported with a
witness assignment.

Example:
    expr = parse_constraint("not e_face_detected")
    evaluate(expr, {"e_face_detected"})  # False
"""

import itertools
import re
import threading
from dataclasses import dataclass

from portkit.errors import (
    ParseError,
    ReservedWordAsIdentifier,
    TooManyVariables,
)
from portkit.events import RESERVED_WORDS

# The most variables the consistency check will enumerate
MAX_CHECK_VARIABLES = 20

_TOKEN = re.compile(r"\s*(?:(?P<word>[A-Za-z_][A-Za-z0-9_]*)|(?P<punct>[()]))")


@dataclass(frozen=True)
class ConstTrue:
    """The constant true."""


@dataclass(frozen=True)
class ConstFalse:
    """The constant false."""


@dataclass(frozen=True)
class Var:
    """An event symbol."""

    name: str


@dataclass(frozen=True)
class Not:
    """Negation."""

    operand: object


@dataclass(frozen=True)
class And:
    """Conjunction."""

    left: object
    right: object


@dataclass(frozen=True)
class Or:
    """Disjunction."""

    left: object
    right: object


TRUE = ConstTrue()
FALSE = ConstFalse()


class _Token:
    """A token of constraint text."""

    __slots__ = ("kind", "text", "position", "number")

    def __init__(self, kind, text, position, number):
        self.kind = kind
        self.text = text
        self.position = position
        self.number = number


def tokenize(text):
    """
    Split constraint text into tokens.

    Args:
        text (str):
            The constraint text.

    Returns:
        list:
            The tokens, terminated by an "end" token.

    Raises:
        ParseError:
            If the text contains a character outside the language.
    """
    tokens = []
    index = 0
    while True:
        # Skip whitespace and stop at the end
        while index < len(text) and text[index].isspace():
            index += 1
        if index >= len(text):
            break

        match = _TOKEN.match(text, index)
        if match is None:
            raise ParseError(
                f"unexpected character {text[index]!r}",
                position=index,
                expected="identifier, keyword or parenthesis",
                token=len(tokens) + 1,
            )
        if match.group("word") is not None:
            word = match.group("word")
            kind = word if word in RESERVED_WORDS else "ident"
            tokens.append(
                _Token(kind, word, match.start("word"), len(tokens) + 1)
            )
        else:
            punct = match.group("punct")
            tokens.append(
                _Token(punct, punct, match.start("punct"), len(tokens) + 1)
            )
        index = match.end()

    tokens.append(_Token("end", "", len(text), len(tokens) + 1))
    return tokens


class _ConstraintParser:
    """A recursive descent parser over constraint tokens.

    Attributes:
        tokens (list):
            The tokens being parsed.
        index (int):
            The index of the current token.
    """

    def __init__(self, tokens):
        """
        Create the parser.

        Args:
            tokens (list):
                The tokens to parse.
        """
        self.tokens = tokens
        self.index = 0

    @property
    def token(self):
        """Return the current token."""
        return self.tokens[self.index]

    def advance(self):
        """Step to the next token and return the one stepped over."""
        token = self.token
        if token.kind != "end":
            self.index += 1
        return token

    def error(self, expected):
        """Build a parse error at the current token."""
        token = self.token
        found = "end of input" if token.kind == "end" else repr(token.text)
        return ParseError(
            f"unexpected {found}",
            position=token.position,
            expected=expected,
            token=token.number,
        )

    def parse(self):
        """Parse a complete expression."""
        expr = self.parse_or()
        if self.token.kind != "end":
            raise self.error("'and', 'or' or end of input")
        return expr

    def parse_or(self):
        """Parse a disjunction."""
        expr = self.parse_and()
        while self.token.kind == "or":
            self.advance()
            expr = Or(expr, self.parse_and())
        return expr

    def parse_and(self):
        """Parse a conjunction."""
        expr = self.parse_unary()
        while self.token.kind == "and":
            self.advance()
            expr = And(expr, self.parse_unary())
        return expr

    def parse_unary(self):
        """Parse a negation or an atom."""
        if self.token.kind == "not":
            self.advance()
            return Not(self.parse_unary())
        return self.parse_atom()

    def parse_atom(self):
        """Parse a literal, an identifier or a parenthesised expression."""
        token = self.token
        if token.kind == "true":
            self.advance()
            return TRUE
        if token.kind == "false":
            self.advance()
            return FALSE
        if token.kind == "ident":
            self.advance()
            return Var(token.text)
        if token.kind == "(":
            self.advance()
            expr = self.parse_or()
            if self.token.kind != ")":
                raise self.error("')'")
            self.advance()
            return expr
        raise self.error("an event name, 'true', 'false', 'not' or '('")


def parse_constraint(text):
    """
    Parse constraint text into an expression.

    Args:
        text (str):
            The constraint text.

    Returns:
        ConstraintExpr:
            The parsed expression.

    Raises:
        ParseError:
            If the text is malformed.
    """
    return _ConstraintParser(tokenize(text)).parse()


def parse_symbols(words):
    """
    Validate a sequence of words as event names.

    Args:
        words (iterable):
            The candidate event names.

    Returns:
        frozenset:
            The names.

    Raises:
        ReservedWordAsIdentifier:
            If a word is a keyword.
        ParseError:
            If a word is not an identifier.
    """
    symbols = set()
    for number, word in enumerate(words, start=1):
        if word in RESERVED_WORDS:
            raise ReservedWordAsIdentifier(
                f"{word!r} is a reserved word",
                expected="an event name",
                token=number,
            )
        if not re.fullmatch(r"[a-zA-Z_][a-zA-Z0-9_]*", word):
            raise ParseError(
                f"{word!r} is not an event name",
                expected="an identifier",
                token=number,
            )
        symbols.add(word)
    return frozenset(symbols)


def evaluate(expr, active):
    """
    Evaluate an expression against a set of active events.

    Args:
        expr (ConstraintExpr):
            The expression to evaluate.
        active (set):
            The names of the active events; anything else is false.

    Returns:
        bool:
            The truth value of the expression.
    """
    if isinstance(expr, Var):
        return expr.name in active
    if isinstance(expr, Not):
        return not evaluate(expr.operand, active)
    if isinstance(expr, And):
        return evaluate(expr.left, active) and evaluate(expr.right, active)
    if isinstance(expr, Or):
        return evaluate(expr.left, active) or evaluate(expr.right, active)
    if isinstance(expr, ConstTrue):
        return True
    if isinstance(expr, ConstFalse):
        return False
    raise TypeError(f"{expr!r} is not a constraint expression")


def free_vars(expr):
    """
    Return the event symbols occurring in an expression.

    Args:
        expr (ConstraintExpr):
            The expression.

    Returns:
        frozenset:
            The symbols.
    """
    if isinstance(expr, Var):
        return frozenset({expr.name})
    if isinstance(expr, Not):
        return free_vars(expr.operand)
    if isinstance(expr, (And, Or)):
        return free_vars(expr.left) | free_vars(expr.right)
    return frozenset()


# Binding strength of each node type when printing
_PRECEDENCE = {Or: 1, And: 2, Not: 3}


def _strength(expr):
    """Return how tightly an expression binds."""
    return _PRECEDENCE.get(type(expr), 4)


def print_constraint(expr):
    """
    Print an expression in minimally parenthesised canonical form.

    Left-associative chains need no parentheses on the left; a right operand
    of the same operator is parenthesised so the tree shape round trips.

    Args:
        expr (ConstraintExpr):
            The expression to print.

    Returns:
        str:
            The canonical text.
    """
    if isinstance(expr, ConstTrue):
        return "true"
    if isinstance(expr, ConstFalse):
        return "false"
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Not):
        operand = print_constraint(expr.operand)
        if _strength(expr.operand) < _strength(expr):
            operand = f"({operand})"
        return f"not {operand}"

    word = "and" if isinstance(expr, And) else "or"
    left = print_constraint(expr.left)
    right = print_constraint(expr.right)
    if _strength(expr.left) < _strength(expr):
        left = f"({left})"
    if _strength(expr.right) <= _strength(expr):
        right = f"({right})"
    return f"{left} {word} {right}"


class Violation:
    """
    A class describing two constraints that can hold at the same time.

    Attributes:
        first (str):
            The label of the first connection.
        second (str):
            The label of the second connection.
        witness (dict):
            An assignment (symbol -> bool) satisfying both constraints.
    """

    def __init__(self, first, second, witness):
        """
        Create the violation.

        Args:
            first (str):
                The label of the first connection.
            second (str):
                The label of the second connection.
            witness (dict):
                An assignment satisfying both constraints.
        """
        self.first = first
        self.second = second
        self.witness = witness

    def __eq__(self, other):
        """Compare two violations."""
        if not isinstance(other, Violation):
            return NotImplemented
        return (self.first, self.second, self.witness) == (
            other.first,
            other.second,
            other.witness,
        )

    def __repr__(self):
        """Return the debugging representation."""
        return f"Violation({self.first!r}, {self.second!r}, {self.witness!r})"

    def __str__(self):
        """Return the human readable description."""
        return f"{self.first} and {self.second} overlap when " + (
            format_assignment(self.witness) or "no events are considered"
        )

    def as_tuple(self):
        """Return the (first, second, witness) triple."""
        return (self.first, self.second, self.witness)


def format_assignment(assignment):
    """Render an assignment as "a=true b=false"."""
    return " ".join(
        f"{name}={'true' if assignment[name] else 'false'}"
        for name in sorted(assignment)
    )


class ConstraintTable:
    """
    A class defining the selection constraints of an arbitrated port.

    Connections without an explicit entry are governed by the constant true.
    Replacing an entry is atomic so a monitor callback can change its own
    rule in the middle of a run.

    Attributes:
        default (ConstraintExpr):
            The rule used for connections without an entry.
    """

    def __init__(self, default=TRUE):
        """
        Create the table.

        Args:
            default (ConstraintExpr):
                The rule used for connections without an entry.
        """
        self.default = default
        self._rules = {}
        self._lock = threading.Lock()

    def __contains__(self, connection):
        """Return whether a connection is registered in the table."""
        return connection in self._rules

    def __len__(self):
        """Return the number of registered connections."""
        return len(self._rules)

    def register(self, connection):
        """Register a connection with the default rule."""
        with self._lock:
            self._rules.setdefault(connection, self.default)

    def remove(self, connection):
        """Forget a connection."""
        with self._lock:
            self._rules.pop(connection, None)

    def get(self, connection):
        """Return the rule for a connection."""
        with self._lock:
            return self._rules.get(connection, self.default)

    def set(self, connection, rule):
        """
        Replace the rule for a connection.

        Args:
            connection (str):
                The connection label.
            rule (ConstraintExpr or str):
                The new rule or its text.
        """
        if isinstance(rule, str):
            rule = parse_constraint(rule)
        with self._lock:
            self._rules[connection] = rule

    def items(self):
        """Return the (connection, rule) pairs in registration order."""
        with self._lock:
            return list(self._rules.items())


def check_consistency(table, max_variables=MAX_CHECK_VARIABLES):
    """
    Find every pair of constraints that can be satisfied together.

    All assignments over the union of the table's symbols are enumerated
    (in binary counting order, variables sorted by name) and the first
    assignment satisfying both rules of a pair is kept as its witness.

    Args:
        table (ConstraintTable or dict or list):
            The rules, as a table, a mapping or (connection, rule) pairs.
        max_variables (int):
            The largest number of symbols the check will enumerate.

    Returns:
        list:
            The Violation instances, in table order of their pairs. An empty
            list means the rules are pairwise mutually exclusive.

    Raises:
        TooManyVariables:
            If the rules mention more than max_variables symbols.
    """
    if isinstance(table, ConstraintTable):
        rules = table.items()
    elif isinstance(table, dict):
        rules = list(table.items())
    else:
        rules = list(table)
    rules = [
        (connection, parse_constraint(rule) if isinstance(rule, str) else rule)
        for connection, rule in rules
    ]

    variables = sorted(
        set().union(*(free_vars(rule) for _, rule in rules))
        if rules
        else set()
    )
    if len(variables) > max_variables:
        raise TooManyVariables(
            f"{len(variables)} event symbols exceed the limit of "
            f"{max_variables} for exhaustive checking"
        )

    pairs = list(itertools.combinations(range(len(rules)), 2))
    witnesses = {}
    for values in itertools.product((False, True), repeat=len(variables)):
        active = {name for name, value in zip(variables, values) if value}
        holding = [
            index
            for index, (_, rule) in enumerate(rules)
            if evaluate(rule, active)
        ]
        if len(holding) < 2:
            continue
        for pair in itertools.combinations(holding, 2):
            if pair not in witnesses:
                witnesses[pair] = dict(zip(variables, values))
        if len(witnesses) == len(pairs):
            break

    return [
        Violation(rules[i][0], rules[j][0], witnesses[(i, j)])
        for i, j in pairs
        if (i, j) in witnesses
    ]
