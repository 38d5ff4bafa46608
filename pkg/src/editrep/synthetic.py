"""Synthetic edit corpus: random toy programs plus eight deterministic
rewrite rules that emulate fixer-style edit categories.

Every rule is a pure function over token sequences (parse, transform,
re-serialize), so re-applying a pair's rule to its before side always
reproduces the after side exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, CorpusError, EditPair, normalize_variables
from .syntax import (
    LABEL_ASSIGN,
    LABEL_CALL,
    LABEL_CAST,
    LABEL_EXPR,
    LABEL_PAREN,
    LABEL_PROGRAM,
    Node,
    parse,
    preorder,
)

IDENT_POOL = ("a", "b", "c", "d", "m", "n")
CALLEE_POOL = ("g", "h", "k")
INT_POOL = ("0", "1", "2", "3", "5", "7")
TYPE_POOL = ("int", "float", "bool", "str")


# ---------------------------------------------------------------------------
# tree helpers


def _replace(root: Node, old: Node, new: Node) -> Node:
    if old is root:
        new.parent = None
        return new
    parent = old.parent
    idx = parent.children.index(old)
    parent.children[idx] = new
    new.parent = parent
    return root


def _first(root: Node, predicate) -> Node | None:
    for node in preorder(root):
        if predicate(node):
            return node
    return None


def _first_label(root: Node, label: str) -> Node | None:
    return _first(root, lambda n: n.label == label and not n.is_terminal)


# ---------------------------------------------------------------------------
# program sampling


def _primary(rng: np.random.Generator) -> Node:
    if rng.random() < 0.6:
        return Node(str(rng.choice(IDENT_POOL)))
    return Node(str(rng.choice(INT_POOL)))


def _cast_form(rng: np.random.Generator) -> Node:
    return Node(LABEL_CAST, [Node("("), Node(str(rng.choice(TYPE_POOL))), Node(")"), _primary(rng)])


def _paren_form(rng: np.random.Generator) -> Node:
    inner = Node(LABEL_EXPR, [_primary(rng), Node(str(rng.choice(("+", "-", "*")))), _primary(rng)])
    return Node(LABEL_PAREN, [Node("("), inner, Node(")")])


def _div_form(rng: np.random.Generator) -> Node:
    return Node(LABEL_EXPR, [_primary(rng), Node("/"), _primary(rng)])


def random_program(rng: np.random.Generator, *, need_cast: bool = False,
                   need_paren: bool = False, need_div: bool = False) -> Node:
    """A 2-3 statement program; the first statement always has the
    v = v + E shape and the second always contains a call, so several
    rewrite rules stay applicable to every sampled program."""
    with_cast = need_cast or rng.random() < 0.4
    with_paren = need_paren or rng.random() < 0.4
    with_div = need_div or rng.random() < 0.4

    var = str(rng.choice(IDENT_POOL))
    tail = _div_form(rng) if with_div else _primary(rng)
    stmt1 = Node(LABEL_ASSIGN, [Node(var), Node("="),
                                Node(LABEL_EXPR, [Node(var), Node("+"), tail])])

    first_arg = _cast_form(rng) if with_cast else _primary(rng)
    call_children = [Node(str(rng.choice(CALLEE_POOL))), Node("("), first_arg]
    if with_paren or rng.random() < 0.5:
        call_children.append(Node(","))
        call_children.append(_paren_form(rng) if with_paren else _primary(rng))
    call_children.append(Node(")"))
    call = Node(LABEL_CALL, call_children)
    if rng.random() < 0.6:
        stmt2 = Node(LABEL_ASSIGN, [Node(str(rng.choice(IDENT_POOL))), Node("="), call])
    else:
        stmt2 = call

    statements = [stmt1, stmt2]
    if rng.random() < 0.5:
        statements.append(Node(LABEL_ASSIGN, [Node(str(rng.choice(IDENT_POOL))), Node("="),
                                              _primary(rng)]))
    return Node(LABEL_PROGRAM, statements)


def random_tree(rng: np.random.Generator) -> Node:
    """A random single tree (statement or program) for structural tests."""
    program = random_program(rng)
    if rng.random() < 0.5:
        return program
    return program.children[int(rng.integers(len(program.children)))].clone()


# ---------------------------------------------------------------------------
# rewrite rules


@dataclass(frozen=True)
class RewriteRule:
    rule_id: str
    needs: tuple[str, ...]  # feature flags random_program must guarantee

    def applicable(self, tree: Node) -> bool:
        return self._target(tree) is not None

    def apply(self, tree: Node) -> Node:
        """Transform a fresh parse of the program; raises if inapplicable."""
        tree = tree.clone()
        target = self._target(tree)
        if target is None:
            raise CorpusError(f"rule {self.rule_id} not applicable")
        return self._transform(tree, target)

    def apply_tokens(self, tokens) -> list[str]:
        return self.apply(parse(list(tokens))).tokens()

    # subclasses by dispatch table below
    def _target(self, tree: Node) -> Node | None:
        return _RULE_TARGETS[self.rule_id](tree)

    def _transform(self, tree: Node, target: Node) -> Node:
        return _RULE_TRANSFORMS[self.rule_id](tree, target)


def _swap_target(tree: Node):
    if tree.label == LABEL_PROGRAM and len(tree.children) >= 2 \
            and tree.children[0] != tree.children[1]:
        return tree
    return None


def _swap_transform(tree: Node, target: Node) -> Node:
    target.children[0], target.children[1] = target.children[1], target.children[0]
    return tree


def _assign_target(tree: Node):
    return _first(tree, lambda n: n.label == LABEL_ASSIGN and not n.is_terminal
                  and n.children[1].label == "=")


def _wrap_call_transform(tree: Node, target: Node) -> Node:
    rhs = target.children[2]
    wrapped = Node(LABEL_CALL, [Node("chk"), Node("("), rhs, Node(")")])
    target.children[2] = wrapped
    wrapped.parent = target
    return tree


def _compound_target(tree: Node):
    def matches(n: Node) -> bool:
        if n.label != LABEL_ASSIGN or n.is_terminal or n.children[1].label != "=":
            return False
        rhs = n.children[2]
        return (rhs.label == LABEL_EXPR and not rhs.is_terminal
                and rhs.children[1].label == "+"
                and rhs.children[0].is_terminal
                and rhs.children[0].label == n.children[0].label)
    return _first(tree, matches)


def _compound_transform(tree: Node, target: Node) -> Node:
    increment = target.children[2].children[2]
    op = Node("+=")
    target.children[1] = op
    op.parent = target
    target.children[2] = increment
    increment.parent = target
    return tree


def _cast_target(tree: Node):
    return _first_label(tree, LABEL_CAST)


def _cast_transform(tree: Node, target: Node) -> Node:
    return _replace(tree, target, target.children[3])


def _div_target(tree: Node):
    return _first(tree, lambda n: n.label == LABEL_EXPR and not n.is_terminal
                  and n.children[1].label == "/")


def _div_transform(tree: Node, target: Node) -> Node:
    call = Node(LABEL_CALL, [Node("safe"), Node("("), target.children[0],
                             Node(","), target.children[2], Node(")")])
    return _replace(tree, target, call)


def _call_target(tree: Node):
    return _first_label(tree, LABEL_CALL)


def _rename_transform(tree: Node, target: Node) -> Node:
    name = Node("renamed")
    target.children[0] = name
    name.parent = target
    return tree


def _add_arg_transform(tree: Node, target: Node) -> Node:
    closing = target.children.pop()
    if len(target.children) > 2:  # already has at least one argument
        target.attach(Node(","))
    target.attach(Node("0"))
    target.attach(closing)
    return tree


def _rename_target(tree: Node):
    node = _call_target(tree)
    if node is not None and node.children[0].label != "renamed":
        return node
    return None


def _paren_target(tree: Node):
    return _first_label(tree, LABEL_PAREN)


def _paren_transform(tree: Node, target: Node) -> Node:
    return _replace(tree, target, target.children[1])


_RULE_TARGETS = {
    "wrap-call": _assign_target,
    "remove-cast": _cast_target,
    "swap-statements": _swap_target,
    "compound-assign": _compound_target,
    "conditional-access": _div_target,
    "rename-method": _rename_target,
    "add-argument": _call_target,
    "inline-lambda": _paren_target,
}

_RULE_TRANSFORMS = {
    "wrap-call": _wrap_call_transform,
    "remove-cast": _cast_transform,
    "swap-statements": _swap_transform,
    "compound-assign": _compound_transform,
    "conditional-access": _div_transform,
    "rename-method": _rename_transform,
    "add-argument": _add_arg_transform,
    "inline-lambda": _paren_transform,
}

RULES: dict[str, RewriteRule] = {
    "wrap-call": RewriteRule("wrap-call", ()),
    "remove-cast": RewriteRule("remove-cast", ("cast",)),
    "swap-statements": RewriteRule("swap-statements", ()),
    "compound-assign": RewriteRule("compound-assign", ()),
    "conditional-access": RewriteRule("conditional-access", ("div",)),
    "rename-method": RewriteRule("rename-method", ()),
    "add-argument": RewriteRule("add-argument", ()),
    "inline-lambda": RewriteRule("inline-lambda", ("paren",)),
}

RULE_IDS = tuple(RULES)


def resolve_rules(spec: str | list[str]) -> list[RewriteRule]:
    if spec == "all" or spec == ["all"]:
        return [RULES[r] for r in RULE_IDS]
    names = spec.split(",") if isinstance(spec, str) else list(spec)
    unknown = [n for n in names if n not in RULES]
    if unknown:
        raise CorpusError(f"unknown rules {unknown}; available: {list(RULE_IDS)}")
    return [RULES[n] for n in names]


# ---------------------------------------------------------------------------
# corpus generation

_MAX_RESAMPLES = 50


def generate_synthetic(rule_set: str | list[str], n_pairs: int, seed: int,
                       normalize: bool = True) -> Corpus:
    """n_pairs labeled edit pairs cycling through the rule set, split
    80/10/10 by pair index; fully deterministic for a fixed seed."""
    if n_pairs < 1:
        raise CorpusError("n_pairs must be >= 1")
    rules = resolve_rules(rule_set)
    rng = np.random.default_rng(seed)
    corpus = Corpus(source="synthetic", generator_seed=seed)
    for i in range(n_pairs):
        rule = rules[i % len(rules)]
        flags = {f"need_{feat}": True for feat in rule.needs}
        pair = None
        for _ in range(_MAX_RESAMPLES):
            program = random_program(rng, **flags)
            if not rule.applicable(program):
                continue
            before = program.tokens()
            after = rule.apply(program).tokens()
            if before == after:
                continue
            pair = EditPair(id=f"syn-{i:05d}", before=tuple(before), after=tuple(after),
                            category=rule.rule_id)
            break
        if pair is None:
            raise CorpusError(f"rule {rule.rule_id}: no applicable program after "
                              f"{_MAX_RESAMPLES} resamples")
        if normalize:
            pair = normalize_variables(pair)
        bucket = i % 10
        if bucket <= 7:
            corpus.train.append(pair)
        elif bucket == 8:
            corpus.valid.append(pair)
        else:
            corpus.test.append(pair)
    return corpus
