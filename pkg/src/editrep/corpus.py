"""Edit-pair data model, JSONL corpus I/O, identifier normalization and
vocabulary construction.

Corpora are UTF-8 JSON-lines files, one edit pair per line with tokens
pre-split into arrays:

    {"id": "p1", "before": ["u", "=", "x"], "after": ["u", "=", "y"],
     "context_before": null, "context_after": null, "category": "swap"}
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace

from .syntax import is_identifier

log = logging.getLogger(__name__)

DEFAULT_MAX_TOKENS = 100

PAD = "<pad>"
UNK = "<unk>"
START = "<s>"
END = "</s>"
GAP_TOKEN = "∅"
SEP = "<sep>"

RESERVED = (PAD, UNK, START, END, GAP_TOKEN, SEP)


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class EditPair:
    """One edit: the before/after token sequences with optional context."""

    id: str
    before: tuple[str, ...]
    after: tuple[str, ...]
    context_before: tuple[str, ...] | None = None
    context_after: tuple[str, ...] | None = None
    category: str | None = None

    def validate(self, max_tokens: int = DEFAULT_MAX_TOKENS) -> None:
        if not self.id:
            raise CorpusError("edit pair id must be nonempty")
        if not self.before:
            raise CorpusError(f"pair {self.id!r}: `before` must be nonempty")
        if not self.after:
            raise CorpusError(f"pair {self.id!r}: `after` must be nonempty")
        if len(self.before) > max_tokens or len(self.after) > max_tokens:
            raise CorpusError(f"pair {self.id!r}: exceeds {max_tokens} tokens")


@dataclass
class Corpus:
    train: list[EditPair] = field(default_factory=list)
    valid: list[EditPair] = field(default_factory=list)
    test: list[EditPair] = field(default_factory=list)
    source: str = ""
    generator_seed: int | None = None

    def all_pairs(self) -> list[EditPair]:
        return [*self.train, *self.valid, *self.test]

    def split(self, name: str) -> list[EditPair]:
        if name not in ("train", "valid", "test"):
            raise CorpusError(f"unknown split {name!r}")
        return getattr(self, name)

    def check_disjoint(self) -> None:
        seen: dict[str, str] = {}
        for split in ("train", "valid", "test"):
            for pair in getattr(self, split):
                if pair.id in seen:
                    raise CorpusError(f"duplicate id {pair.id!r} in {seen[pair.id]} and {split}")
                seen[pair.id] = split


def _pair_to_record(pair: EditPair, split: str) -> dict:
    return {
        "id": pair.id,
        "split": split,
        "before": list(pair.before),
        "after": list(pair.after),
        "context_before": list(pair.context_before) if pair.context_before else None,
        "context_after": list(pair.context_after) if pair.context_after else None,
        "category": pair.category,
    }


def _record_to_pair(record: dict) -> tuple[EditPair, str]:
    def tokens(key, required):
        value = record.get(key)
        if value is None:
            if required:
                raise CorpusError(f"missing field {key!r}")
            return None
        if not isinstance(value, list) or not all(isinstance(t, str) for t in value):
            raise CorpusError(f"field {key!r} must be an array of strings")
        return tuple(value)

    pair = EditPair(
        id=str(record.get("id", "")),
        before=tokens("before", True) or (),
        after=tokens("after", True) or (),
        context_before=tokens("context_before", False),
        context_after=tokens("context_after", False),
        category=record.get("category"),
    )
    return pair, record.get("split", "train")


def save_corpus(path, corpus: Corpus) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        header = {"format": "editrep-corpus", "source": corpus.source,
                  "generator_seed": corpus.generator_seed}
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for split in ("train", "valid", "test"):
            for pair in getattr(corpus, split):
                fh.write(json.dumps(_pair_to_record(pair, split), ensure_ascii=False) + "\n")


def load_corpus(path, max_tokens: int = DEFAULT_MAX_TOKENS) -> Corpus:
    """Load and validate a JSONL corpus.

    Malformed lines raise with their line number; over-length pairs are
    skipped with a warning and counted in the log.
    """
    corpus = Corpus(source=str(path))
    seen_ids: set[str] = set()
    skipped_overlength = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if lineno == 1 and record.get("format") == "editrep-corpus":
                corpus.source = record.get("source", corpus.source)
                corpus.generator_seed = record.get("generator_seed")
                continue
            try:
                pair, split = _record_to_pair(record)
                pair.validate(max_tokens=max_tokens)
            except CorpusError as exc:
                if "exceeds" in str(exc):
                    skipped_overlength += 1
                    log.warning("%s:%d: %s (skipped)", path, lineno, exc)
                    continue
                raise CorpusError(f"{path}:{lineno}: {exc}") from None
            if pair.id in seen_ids:
                raise CorpusError(f"{path}:{lineno}: duplicate id {pair.id!r}")
            seen_ids.add(pair.id)
            corpus.split(split).append(pair)
    if skipped_overlength:
        log.warning("%s: skipped %d over-length pairs", path, skipped_overlength)
    return corpus


# ---------------------------------------------------------------------------
# identifier normalization


def normalize_variables(pair: EditPair) -> EditPair:
    """Rename each distinct identifier to V0, V1, ... in order of first
    occurrence scanning context_before, before, after, context_after.
    Idempotent; non-identifier tokens are untouched."""
    mapping: dict[str, str] = {}

    def scan(tokens):
        if tokens is None:
            return
        for tok in tokens:
            if is_identifier(tok) and tok not in mapping:
                mapping[tok] = f"V{len(mapping)}"

    for seq in (pair.context_before, pair.before, pair.after, pair.context_after):
        scan(seq)

    def rewrite(tokens):
        if tokens is None:
            return None
        return tuple(mapping.get(tok, tok) if is_identifier(tok) else tok for tok in tokens)

    return replace(
        pair,
        before=rewrite(pair.before),
        after=rewrite(pair.after),
        context_before=rewrite(pair.context_before),
        context_after=rewrite(pair.context_after),
    )


# ---------------------------------------------------------------------------
# vocabulary


@dataclass
class Vocabulary:
    """Dense token -> index bijection with fixed reserved symbols."""

    token_to_index: dict[str, int]
    index_to_token: list[str]

    @classmethod
    def from_tokens(cls, tokens: list[str]) -> "Vocabulary":
        index_to_token = list(RESERVED)
        seen = set(index_to_token)
        for tok in tokens:
            if tok not in seen:
                seen.add(tok)
                index_to_token.append(tok)
        return cls({tok: i for i, tok in enumerate(index_to_token)}, index_to_token)

    def __len__(self) -> int:
        return len(self.index_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_index

    def encode(self, token: str) -> int:
        return self.token_to_index.get(token, self.token_to_index[UNK])

    def encode_sequence(self, tokens) -> list[int]:
        return [self.encode(t) for t in tokens]

    def decode(self, index: int) -> str:
        return self.index_to_token[index]

    @property
    def pad_index(self) -> int:
        return self.token_to_index[PAD]

    @property
    def unk_index(self) -> int:
        return self.token_to_index[UNK]

    @property
    def start_index(self) -> int:
        return self.token_to_index[START]

    @property
    def end_index(self) -> int:
        return self.token_to_index[END]

    @property
    def gap_index(self) -> int:
        return self.token_to_index[GAP_TOKEN]

    @property
    def sep_index(self) -> int:
        return self.token_to_index[SEP]


def build_vocabulary(corpus: Corpus, min_count: int = 1) -> Vocabulary:
    """Tokens with training-corpus frequency >= min_count, plus reserved
    symbols. Rarer tokens encode as UNK."""
    if min_count < 1:
        raise CorpusError("min_count must be >= 1")
    pairs = corpus.all_pairs()
    if not pairs:
        raise CorpusError("cannot build a vocabulary from an empty corpus")
    counts: dict[str, int] = {}
    for pair in pairs:
        for seq in (pair.before, pair.after, pair.context_before, pair.context_after):
            if seq is None:
                continue
            for tok in seq:
                counts[tok] = counts.get(tok, 0) + 1
    kept = sorted(tok for tok, c in counts.items() if c >= min_count)
    return Vocabulary.from_tokens(kept)


# ---------------------------------------------------------------------------
# optional high-frequency down-sampling


def downsample_frequent(pairs: list[EditPair], threshold: int = 30,
                        seed: int = 0) -> list[EditPair]:
    """Cap the number of pairs sharing an identical (before, after) shape
    at `threshold`, sampling the survivors deterministically."""
    import numpy as np

    groups: dict[tuple, list[int]] = {}
    for i, pair in enumerate(pairs):
        groups.setdefault((pair.before, pair.after), []).append(i)
    rng = np.random.default_rng(seed)
    keep: set[int] = set()
    for key in sorted(groups, key=lambda k: (len(k[0]), k)):
        members = groups[key]
        if len(members) <= threshold:
            keep.update(members)
        else:
            chosen = rng.choice(len(members), size=threshold, replace=False)
            keep.update(members[int(c)] for c in chosen)
    return [p for i, p in enumerate(pairs) if i in keep]
