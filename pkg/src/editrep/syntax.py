"""Toy-language grammar, parser, program graphs and tree decoder actions.

The language covers assignment and expression statements over identifiers,
integer literals, binary operators, parenthesized expressions, cast-style
wrappers and calls:

    u = x + x          ->  AssignStmt[u, =, Expr[x, +, x]]
    u = ( int ) x      ->  AssignStmt[u, =, Cast[(, int, ), x]]
    f ( a , 1 )        ->  Call[f, (, a, ,, 1, )]

Multiple juxtaposed statements parse into a variadic Program node. Trees
linearize into decoder actions (ExpandR / GenTerm / Reduce / TreeCp) and
replay back; greedy TreeCp emits whole matching source subtrees.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .align import GAP, TAG_DELETE, TAG_EQUAL, TAG_INSERT, TAG_REPLACE, align

# ---------------------------------------------------------------------------
# lexical classification

TYPE_KEYWORDS = ("int", "float", "bool", "str")
# Builtin callables are keywords: they survive variable normalization, which
# is what lets rewrite categories that introduce calls stay recognizable.
BUILTIN_CALLEES = ("chk", "safe", "renamed")
BINARY_OPS = ("+", "-", "*", "/", "==")
ASSIGN_OPS = ("=", "+=")
PUNCT = ("(", ")", ",")

# operator precedence, higher binds tighter
_PRECEDENCE = {"==": 1, "+": 2, "-": 2, "*": 3, "/": 3}

LEX_IDENT = "Ident"
LEX_INT = "IntLit"
LEX_OP = "Op"
LEX_ASSIGN_OP = "AsgnOp"
LEX_TYPE = "Type"

LEXICAL_CLASSES = (LEX_IDENT, LEX_INT, LEX_OP, LEX_ASSIGN_OP, LEX_TYPE)


def is_int_literal(token: str) -> bool:
    return token.isdigit()


def is_identifier(token: str) -> bool:
    return (
        token.replace("_", "a").isalnum()
        and not token[0].isdigit()
        and token not in TYPE_KEYWORDS
        and token not in BUILTIN_CALLEES
    )


def lexical_class(token: str) -> str | None:
    """The terminal class a token belongs to, or None for punctuation."""
    if token in BINARY_OPS:
        return LEX_OP
    if token in ASSIGN_OPS:
        return LEX_ASSIGN_OP
    if token in TYPE_KEYWORDS:
        return LEX_TYPE
    if token in BUILTIN_CALLEES:
        return LEX_IDENT
    if is_int_literal(token):
        return LEX_INT
    if is_identifier(token):
        return LEX_IDENT
    return None


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at token position {position}")
        self.position = position


# ---------------------------------------------------------------------------
# syntax trees


class Node:
    """Syntax tree node; leaves carry tokens, internal nodes carry labels."""

    __slots__ = ("label", "children", "parent")

    def __init__(self, label: str, children: list["Node"] | None = None):
        self.label = label
        self.children: list[Node] = []
        self.parent: Node | None = None
        for child in children or []:
            self.attach(child)

    def attach(self, child: "Node") -> None:
        child.parent = self
        self.children.append(child)

    @property
    def is_terminal(self) -> bool:
        return not self.children

    def leaves(self) -> list["Node"]:
        if self.is_terminal:
            return [self]
        out: list[Node] = []
        stack = [self]
        while stack:
            node = stack.pop()
            if node.is_terminal:
                out.append(node)
            else:
                stack.extend(reversed(node.children))
        return out

    def tokens(self) -> list[str]:
        return [leaf.label for leaf in self.leaves()]

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)

    def signature(self) -> str:
        if self.is_terminal:
            return self.label
        return f"({self.label} {' '.join(c.signature() for c in self.children)})"

    def clone(self) -> "Node":
        if self.is_terminal:
            return Node(self.label)
        return Node(self.label, [c.clone() for c in self.children])

    def __eq__(self, other) -> bool:
        return isinstance(other, Node) and self.signature() == other.signature()

    def __hash__(self) -> int:
        return hash(self.signature())

    def __repr__(self) -> str:
        return f"Node({self.signature()})"


def to_bracketed(node: Node) -> str:
    return node.signature()


# ---------------------------------------------------------------------------
# grammar

SYM_ROOT = "Root"
SYM_STMT = "Stmt"
SYM_EXPR = "Expr"

LABEL_PROGRAM = "Program"
LABEL_ASSIGN = "AssignStmt"
LABEL_EXPR = "Expr"
LABEL_PAREN = "Paren"
LABEL_CAST = "Cast"
LABEL_CALL = "Call"

NONTERMINAL_LABELS = (LABEL_PROGRAM, LABEL_ASSIGN, LABEL_EXPR, LABEL_PAREN, LABEL_CAST, LABEL_CALL)


@dataclass(frozen=True)
class Sym:
    symbol: str


@dataclass(frozen=True)
class Lex:
    cls: str


@dataclass(frozen=True)
class Lit:
    token: str


@dataclass(frozen=True)
class Star:
    """Variadic segment: `min_count`+ repetitions of `symbol`, Reduce-closed."""

    symbol: str
    separator: str | None
    min_count: int


@dataclass(frozen=True)
class Production:
    name: str
    lhs: str
    rhs: tuple  # of Sym | Lex | Lit | Star
    node_label: str | None  # None marks a refinement (no node is created)


PRODUCTIONS: tuple[Production, ...] = (
    # two or more statements: the parser never wraps a lone statement
    Production("prog", SYM_ROOT, (Star(SYM_STMT, None, 2),), LABEL_PROGRAM),
    Production("assign", SYM_STMT, (Lex(LEX_IDENT), Lex(LEX_ASSIGN_OP), Sym(SYM_EXPR)), LABEL_ASSIGN),
    Production("binary", SYM_EXPR, (Sym(SYM_EXPR), Lex(LEX_OP), Sym(SYM_EXPR)), LABEL_EXPR),
    Production("paren", SYM_EXPR, (Lit("("), Sym(SYM_EXPR), Lit(")")), LABEL_PAREN),
    Production("cast", SYM_EXPR, (Lit("("), Lex(LEX_TYPE), Lit(")"), Sym(SYM_EXPR)), LABEL_CAST),
    Production("call", SYM_EXPR, (Lex(LEX_IDENT), Lit("("), Star(SYM_EXPR, ",", 0), Lit(")")), LABEL_CALL),
    # refinements: they narrow the frontier symbol without creating a node
    Production("root_stmt", SYM_ROOT, (Sym(SYM_STMT),), None),
    Production("root_expr", SYM_ROOT, (Sym(SYM_EXPR),), None),
    Production("stmt_expr", SYM_STMT, (Sym(SYM_EXPR),), None),
    Production("expr_ident", SYM_EXPR, (Lex(LEX_IDENT),), None),
    Production("expr_int", SYM_EXPR, (Lex(LEX_INT),), None),
)

PRODUCTION_BY_NAME = {p.name: p for p in PRODUCTIONS}
PRODUCTION_FOR_LABEL = {p.node_label: p for p in PRODUCTIONS if p.node_label}

# Which node labels may fill a frontier symbol (used by TreeCp and replay).
ACCEPTED_LABELS = {
    SYM_EXPR: frozenset({LABEL_EXPR, LABEL_PAREN, LABEL_CAST, LABEL_CALL}),
    SYM_STMT: frozenset({LABEL_ASSIGN, LABEL_EXPR, LABEL_PAREN, LABEL_CAST, LABEL_CALL}),
    SYM_ROOT: frozenset(),  # no subtree copy straight into the virtual root
}

# Shortest refinement chain from a frontier symbol to a production lhs or
# lexical class; keys are (from_symbol, to) pairs.
REFINEMENT_CHAINS: dict[tuple[str, str], tuple[str, ...]] = {
    (SYM_ROOT, SYM_ROOT): (),
    (SYM_ROOT, SYM_STMT): ("root_stmt",),
    (SYM_ROOT, SYM_EXPR): ("root_expr",),
    (SYM_ROOT, LEX_IDENT): ("root_expr", "expr_ident"),
    (SYM_ROOT, LEX_INT): ("root_expr", "expr_int"),
    (SYM_STMT, SYM_STMT): (),
    (SYM_STMT, SYM_EXPR): ("stmt_expr",),
    (SYM_STMT, LEX_IDENT): ("stmt_expr", "expr_ident"),
    (SYM_STMT, LEX_INT): ("stmt_expr", "expr_int"),
    (SYM_EXPR, SYM_EXPR): (),
    (SYM_EXPR, LEX_IDENT): ("expr_ident",),
    (SYM_EXPR, LEX_INT): ("expr_int",),
}


@dataclass(frozen=True)
class Grammar:
    """Bundles the production table for callers that want one object."""

    productions: tuple[Production, ...] = PRODUCTIONS
    start_symbol: str = SYM_ROOT

    def production(self, name: str) -> Production:
        return PRODUCTION_BY_NAME[name]


GRAMMAR = Grammar()


# ---------------------------------------------------------------------------
# parser


class _Parser:
    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, offset: int = 0) -> str | None:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.pos)
        self.pos += 1
        return tok

    def expect(self, token: str) -> str:
        tok = self.peek()
        if tok != token:
            raise ParseError(f"expected {token!r}, found {tok!r}", self.pos)
        return self.take()

    def parse_program(self) -> Node:
        statements = [self.parse_statement()]
        while self.peek() is not None:
            statements.append(self.parse_statement())
        if len(statements) == 1:
            return statements[0]
        return Node(LABEL_PROGRAM, statements)

    def parse_statement(self) -> Node:
        tok, nxt = self.peek(), self.peek(1)
        if tok is not None and lexical_class(tok) == LEX_IDENT and nxt in ASSIGN_OPS:
            ident = Node(self.take())
            op = Node(self.take())
            value = self.parse_expression(1)
            return Node(LABEL_ASSIGN, [ident, op, value])
        return self.parse_expression(1)

    def parse_expression(self, min_prec: int) -> Node:
        left = self.parse_primary()
        while True:
            tok = self.peek()
            if tok not in BINARY_OPS or _PRECEDENCE[tok] < min_prec:
                return left
            op = Node(self.take())
            right = self.parse_expression(_PRECEDENCE[op.label] + 1)
            left = Node(LABEL_EXPR, [left, op, right])

    def parse_primary(self) -> Node:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.pos)
        if tok == "(":
            if self.peek(1) in TYPE_KEYWORDS and self.peek(2) == ")":
                open_p = Node(self.take())
                type_tok = Node(self.take())
                close_p = Node(self.take())
                operand = self.parse_primary()
                return Node(LABEL_CAST, [open_p, type_tok, close_p, operand])
            open_p = Node(self.take())
            inner = self.parse_expression(1)
            close_p = Node(self.expect(")"))
            return Node(LABEL_PAREN, [open_p, inner, close_p])
        cls = lexical_class(tok)
        if cls == LEX_INT:
            return Node(self.take())
        if cls == LEX_IDENT:
            name = Node(self.take())
            if self.peek() == "(":
                open_p = Node(self.take())
                children = [name, open_p]
                if self.peek() != ")":
                    children.append(self.parse_expression(1))
                    while self.peek() == ",":
                        children.append(Node(self.take()))
                        children.append(self.parse_expression(1))
                children.append(Node(self.expect(")")))
                return Node(LABEL_CALL, children)
            return name
        raise ParseError(f"unexpected token {tok!r}", self.pos)


def parse(tokens: list[str]) -> Node:
    """Parse a whitespace-pretokenized program into its minimal tree."""
    if not tokens:
        raise ParseError("empty input", 0)
    parser = _Parser(list(tokens))
    tree = parser.parse_program()
    if parser.pos != len(tokens):
        raise ParseError("trailing tokens", parser.pos)
    return tree


# ---------------------------------------------------------------------------
# program graphs

EDGE_CHILD = "Child"
EDGE_NEXT_TOKEN = "NextToken"
EDGE_REMOVED = "Removed"
EDGE_ADDED = "Added"
EDGE_REPLACED = "Replaced"
EDGE_EQUAL = "Equal"

EDGE_TYPES = (EDGE_CHILD, EDGE_NEXT_TOKEN, EDGE_REMOVED, EDGE_ADDED, EDGE_REPLACED, EDGE_EQUAL)

ORIGIN_SINGLE = "single"
ORIGIN_BEFORE = "before"
ORIGIN_AFTER = "after"


@dataclass
class GraphNode:
    node_id: int
    label: str
    tag: str
    origin: str
    is_terminal: bool
    tree_node: Node = field(repr=False, compare=False, default=None)


@dataclass(frozen=True)
class Edge:
    src: int
    edge_type: str
    dst: int


@dataclass
class ProgramGraph:
    nodes: list[GraphNode]
    edges: list[Edge]

    def edges_of_type(self, edge_type: str) -> list[Edge]:
        return [e for e in self.edges if e.edge_type == edge_type]

    def node_for(self, tree_node: Node) -> GraphNode:
        for gn in self.nodes:
            if gn.tree_node is tree_node:
                return gn
        raise KeyError("tree node not in graph")


def _add_tree(graph_nodes: list[GraphNode], edges: list[Edge], tree: Node, origin: str) -> dict[int, int]:
    """Append one tree in preorder; returns id(tree_node) -> graph node id."""
    mapping: dict[int, int] = {}

    def visit(node: Node) -> int:
        nid = len(graph_nodes)
        graph_nodes.append(GraphNode(nid, node.label, GAP, origin, node.is_terminal, node))
        mapping[id(node)] = nid
        for child in node.children:
            cid = visit(child)
            edges.append(Edge(nid, EDGE_CHILD, cid))
        return nid

    visit(tree)
    leaves = tree.leaves()
    for a, b in zip(leaves, leaves[1:]):
        edges.append(Edge(mapping[id(a)], EDGE_NEXT_TOKEN, mapping[id(b)]))
    return mapping


def build_graph(tree: Node) -> ProgramGraph:
    """Single-tree graph: Child edges plus the NextToken chain, all tags gap."""
    nodes: list[GraphNode] = []
    edges: list[Edge] = []
    _add_tree(nodes, edges, tree, ORIGIN_SINGLE)
    return ProgramGraph(nodes, edges)


def build_change_graph(before: Node, after: Node) -> ProgramGraph:
    """Merge both trees; leaf alignment yields Equal/Replaced links plus
    node tags, and equality propagates to inner nodes whose descendant
    leaves are all Equal-connected."""
    nodes: list[GraphNode] = []
    edges: list[Edge] = []
    before_map = _add_tree(nodes, edges, before, ORIGIN_BEFORE)
    after_map = _add_tree(nodes, edges, after, ORIGIN_AFTER)

    before_leaves = before.leaves()
    after_leaves = after.leaves()
    diff = align(before.tokens(), after.tokens())

    partner: dict[int, int] = {}  # before leaf index -> after leaf index, '=' only
    i = j = 0
    for entry in diff:
        if entry.tag == TAG_EQUAL:
            src = before_map[id(before_leaves[i])]
            dst = after_map[id(after_leaves[j])]
            edges.append(Edge(src, EDGE_EQUAL, dst))
            nodes[src].tag = nodes[dst].tag = TAG_EQUAL
            partner[i] = j
            i, j = i + 1, j + 1
        elif entry.tag == TAG_REPLACE:
            src = before_map[id(before_leaves[i])]
            dst = after_map[id(after_leaves[j])]
            edges.append(Edge(src, EDGE_REPLACED, dst))
            nodes[src].tag = nodes[dst].tag = TAG_REPLACE
            i, j = i + 1, j + 1
        elif entry.tag == TAG_DELETE:
            src = before_map[id(before_leaves[i])]
            edges.append(Edge(src, EDGE_REMOVED, src))
            nodes[src].tag = TAG_DELETE
            i += 1
        else:  # insertion
            dst = after_map[id(after_leaves[j])]
            edges.append(Edge(dst, EDGE_ADDED, dst))
            nodes[dst].tag = TAG_INSERT
            j += 1

    # upward propagation of equality
    before_leaf_pos = {id(leaf): idx for idx, leaf in enumerate(before_leaves)}
    after_leaf_pos = {id(leaf): idx for idx, leaf in enumerate(after_leaves)}

    def internal_nodes(root: Node) -> list[Node]:
        return [n for n in _preorder(root) if not n.is_terminal]

    def leaf_positions(node: Node, table: dict[int, int]) -> set[int]:
        return {table[id(leaf)] for leaf in node.leaves()}

    after_by_leafset = {}
    for a_node in internal_nodes(after):
        after_by_leafset[frozenset(leaf_positions(a_node, after_leaf_pos))] = a_node
    for b_node in internal_nodes(before):
        b_leaves = leaf_positions(b_node, before_leaf_pos)
        if not all(idx in partner for idx in b_leaves):
            continue
        mapped = frozenset(partner[idx] for idx in b_leaves)
        a_node = after_by_leafset.get(mapped)
        if a_node is None:
            continue
        src, dst = before_map[id(b_node)], after_map[id(a_node)]
        edges.append(Edge(src, EDGE_EQUAL, dst))
        nodes[src].tag = nodes[dst].tag = TAG_EQUAL
    return ProgramGraph(nodes, edges)


def preorder(root: Node) -> list[Node]:
    out = []
    stack = [root]
    while stack:
        node = stack.pop()
        out.append(node)
        stack.extend(reversed(node.children))
    return out


_preorder = preorder


def format_graph(graph: ProgramGraph) -> str:
    """Node table then `src<TAB>edge_type<TAB>dst` lines."""
    lines = ["# nodes: id\tlabel\ttag\torigin"]
    for n in graph.nodes:
        lines.append(f"{n.node_id}\t{n.label}\t{n.tag}\t{n.origin}")
    lines.append("# edges: src\ttype\tdst")
    for e in graph.edges:
        lines.append(f"{e.src}\t{e.edge_type}\t{e.dst}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# decoder actions


@dataclass(frozen=True)
class ExpandR:
    production: str


@dataclass(frozen=True)
class GenTerm:
    token: str


@dataclass(frozen=True)
class TreeCp:
    node_id: int


@dataclass(frozen=True)
class Reduce:
    pass


REDUCE = Reduce()
Action = ExpandR | GenTerm | TreeCp | Reduce


@dataclass
class _Slot:
    """One open frontier position.

    kind 'symbol': awaiting expansion of `symbol`;
    kind 'star': an open variadic segment;
    kind 'literal': a production-constant token, attached automatically.
    """

    kind: str
    symbol: str | None
    parent: Node | None
    literal: str | None = None
    separator: str | None = None
    min_count: int = 0
    count: int = 0
    parent_step: int = -1


class TreeBuilder:
    """Incremental grammar-directed tree construction shared by action
    replay and the tree decoder. Tracks the frontier and exposes the legal
    action set at every step."""

    def __init__(self, source_graph: ProgramGraph | None = None, enable_treecp: bool = True):
        self.stack: list[_Slot] = [_Slot("symbol", SYM_ROOT, None)]
        self.root: Node | None = None
        self.source_graph = source_graph
        self.enable_treecp = enable_treecp and source_graph is not None
        self.steps = 0

    # -- state inspection

    def done(self) -> bool:
        return not self.stack and self.root is not None

    def current_slot(self) -> _Slot:
        if not self.stack:
            raise ValueError("decoding already complete")
        return self.stack[-1]

    def frontier_symbol(self) -> str:
        return self.current_slot().symbol

    def parent_step(self) -> int:
        return self.current_slot().parent_step

    def legal_expansions(self) -> list[str]:
        slot = self.current_slot()
        if slot.symbol in LEXICAL_CLASSES:
            return []
        return [p.name for p in PRODUCTIONS if p.lhs == slot.symbol]

    def legal_token_class(self) -> str | None:
        slot = self.current_slot()
        return slot.symbol if slot.symbol in LEXICAL_CLASSES else None

    def reduce_legal(self) -> bool:
        slot = self.current_slot()
        return slot.kind == "star" and slot.count >= slot.min_count

    def legal_treecp_nodes(self) -> list[int]:
        if not self.enable_treecp:
            return []
        slot = self.current_slot()
        accepted = ACCEPTED_LABELS.get(slot.symbol, frozenset())
        out = []
        for gn in self.source_graph.nodes:
            if gn.origin in (ORIGIN_SINGLE, ORIGIN_BEFORE) and not gn.is_terminal \
                    and gn.label in accepted and gn.tree_node.size() >= 2:
                out.append(gn.node_id)
        return out

    # -- mutation

    def _attach(self, node: Node, slot: _Slot) -> None:
        if slot.parent is None:
            if self.root is not None:
                raise ValueError("tree already has a root")
            self.root = node
        else:
            slot.parent.attach(node)
        self._flush_literals()

    def _flush_literals(self) -> None:
        while self.stack and self.stack[-1].kind == "literal":
            slot = self.stack.pop()
            slot.parent.attach(Node(slot.literal))

    def _push_rhs(self, production: Production, node: Node, step: int) -> None:
        for item in reversed(production.rhs):
            if isinstance(item, Lit):
                self.stack.append(_Slot("literal", None, node, literal=item.token))
            elif isinstance(item, (Sym, Lex)):
                symbol = item.symbol if isinstance(item, Sym) else item.cls
                self.stack.append(_Slot("symbol", symbol, node, parent_step=step))
            elif isinstance(item, Star):
                self.stack.append(_Slot("star", item.symbol, node, separator=item.separator,
                                        min_count=item.min_count, parent_step=step))
        self._flush_literals()

    def _open_star_element(self, slot: _Slot) -> None:
        if slot.count > 0 and slot.separator is not None:
            slot.parent.attach(Node(slot.separator))
        slot.count += 1
        self.stack.append(_Slot("symbol", slot.symbol, slot.parent, parent_step=slot.parent_step))

    def apply(self, action: Action) -> None:
        """Apply one action; raises ValueError on illegal actions."""
        step = self.steps
        self.steps += 1
        slot = self.current_slot()
        if slot.kind == "star":
            if isinstance(action, Reduce):
                if slot.count < slot.min_count:
                    raise ValueError(f"Reduce before {slot.min_count} required elements")
                self.stack.pop()
                self._flush_literals()
                return
            self._open_star_element(slot)
            slot = self.current_slot()
        elif isinstance(action, Reduce):
            raise ValueError("Reduce outside a variadic production")

        if isinstance(action, ExpandR):
            production = PRODUCTION_BY_NAME.get(action.production)
            if production is None:
                raise ValueError(f"unknown production {action.production!r}")
            if production.lhs != slot.symbol:
                raise ValueError(f"production {production.name} does not expand {slot.symbol}")
            if production.node_label is None:
                item = production.rhs[0]
                slot.symbol = item.symbol if isinstance(item, Sym) else item.cls
                slot.parent_step = step
                return
            self.stack.pop()
            node = Node(production.node_label)
            self._push_rhs(production, node, step)
            self._attach(node, slot)
        elif isinstance(action, GenTerm):
            cls = self.legal_token_class()
            if cls is None:
                raise ValueError(f"GenTerm at non-lexical frontier {slot.symbol}")
            if lexical_class(action.token) != cls:
                raise ValueError(f"token {action.token!r} is not a {cls}")
            self.stack.pop()
            self._attach(Node(action.token), slot)
        elif isinstance(action, TreeCp):
            legal = self.legal_treecp_nodes()
            if action.node_id not in legal:
                raise ValueError(f"TreeCp of node {action.node_id} illegal at {slot.symbol}")
            self.stack.pop()
            subtree = self.source_graph.nodes[action.node_id].tree_node.clone()
            self._attach(subtree, slot)
        else:
            raise ValueError(f"unsupported action {action!r}")


def replay(actions: list[Action], source_graph: ProgramGraph | None = None,
           enable_treecp: bool = True) -> Node:
    """Rebuild the tree an action sequence describes."""
    builder = TreeBuilder(source_graph, enable_treecp)
    for action in actions:
        builder.apply(action)
    if not builder.done():
        raise ValueError("action sequence ended with an open frontier")
    return builder.root


def _subtree_index(source_graph: ProgramGraph) -> dict[str, int]:
    """signature -> earliest source node id, internal nodes of size >= 2."""
    table: dict[str, int] = {}
    for gn in source_graph.nodes:
        if gn.origin not in (ORIGIN_SINGLE, ORIGIN_BEFORE) or gn.is_terminal:
            continue
        if gn.tree_node.size() < 2:
            continue
        table.setdefault(gn.tree_node.signature(), gn.node_id)
    return table


def tree_to_actions(target: Node, source_graph: ProgramGraph | None = None,
                    enable_treecp: bool = False) -> list[Action]:
    """Depth-first linearization of `target`; with TreeCp enabled, any
    target subtree exactly matching a source subtree of two or more nodes
    becomes a single greedy TreeCp of the earliest such source node."""
    copy_table = _subtree_index(source_graph) if (enable_treecp and source_graph is not None) else {}
    actions: list[Action] = []

    def refine(symbol: str, to: str) -> None:
        chain = REFINEMENT_CHAINS.get((symbol, to))
        if chain is None:
            raise ValueError(f"no refinement from {symbol} to {to}")
        actions.extend(ExpandR(name) for name in chain)

    def linearize(symbol: str, node: Node) -> None:
        if node.is_terminal:
            cls = lexical_class(node.label)
            if cls is None:
                raise ValueError(f"token {node.label!r} has no lexical class")
            if symbol != cls:
                refine(symbol, cls)
            actions.append(GenTerm(node.label))
            return
        production = PRODUCTION_FOR_LABEL[node.label]
        if symbol != production.lhs:
            refine(symbol, production.lhs)
        # greedy subtree copy, checked at the refined frontier symbol
        if enable_treecp and node.size() >= 2 \
                and node.label in ACCEPTED_LABELS.get(production.lhs, frozenset()):
            source_id = copy_table.get(node.signature())
            if source_id is not None:
                actions.append(TreeCp(source_id))
                return
        actions.append(ExpandR(production.name))
        children = list(node.children)
        idx = 0
        for item in production.rhs:
            if isinstance(item, Lit):
                if idx >= len(children) or children[idx].label != item.token:
                    raise ValueError(f"tree does not match production {production.name}")
                idx += 1
            elif isinstance(item, (Sym, Lex)):
                symbol_name = item.symbol if isinstance(item, Sym) else item.cls
                linearize(symbol_name, children[idx])
                idx += 1
            else:  # Star
                stop_tokens = {r.token for r in production.rhs if isinstance(r, Lit)}
                while idx < len(children):
                    child = children[idx]
                    if child.is_terminal and child.label == item.separator:
                        idx += 1
                        continue
                    if child.is_terminal and child.label in stop_tokens:
                        break
                    linearize(item.symbol, child)
                    idx += 1
                actions.append(REDUCE)
        if idx != len(children):
            raise ValueError(f"tree does not match production {production.name}")

    linearize(SYM_ROOT, target)
    return actions
