"""Deterministic token-level alignment of an edit's before/after sequences.

The alignment is a classic unit-cost edit-distance DP with a fixed
traceback preference, so identical inputs always produce identical
output. Each entry carries a tag: '=' unchanged, '↔' replaced,
'-' deleted, '+' inserted; the gap symbol '∅' fills the missing
token slot of insertions and deletions.
"""

from __future__ import annotations

from dataclasses import dataclass

TAG_EQUAL = "="
TAG_REPLACE = "↔"  # <->
TAG_DELETE = "-"
TAG_INSERT = "+"
GAP = "∅"

ALL_TAGS = (GAP, TAG_INSERT, TAG_DELETE, TAG_REPLACE, TAG_EQUAL)


@dataclass(frozen=True)
class DiffEntry:
    tag: str
    before_token: str  # GAP when the entry is an insertion
    after_token: str   # GAP when the entry is a deletion

    def __post_init__(self):
        ok = (
            (self.tag == TAG_INSERT and self.before_token == GAP and self.after_token != GAP)
            or (self.tag == TAG_DELETE and self.after_token == GAP and self.before_token != GAP)
            or (self.tag == TAG_EQUAL and self.before_token == self.after_token != GAP)
            or (self.tag == TAG_REPLACE and GAP not in (self.before_token, self.after_token)
                and self.before_token != self.after_token)
        )
        if not ok:
            raise ValueError(f"invalid diff entry ({self.tag!r}, {self.before_token!r}, {self.after_token!r})")


@dataclass(frozen=True)
class AlignedDiff:
    entries: tuple[DiffEntry, ...]

    @property
    def before_tokens(self) -> list[str]:
        return [e.before_token for e in self.entries if e.before_token != GAP]

    @property
    def after_tokens(self) -> list[str]:
        return [e.after_token for e in self.entries if e.after_token != GAP]

    def cost(self) -> int:
        """Number of non-'=' entries, i.e. the edit distance realised."""
        return sum(1 for e in self.entries if e.tag != TAG_EQUAL)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)


def align(before: list[str], after: list[str], *, consume_before_first: bool = True) -> AlignedDiff:
    """Minimum-cost alignment with deterministic tie-breaking.

    Costs: 0 for '=', 1 for each of '+', '-', '↔'. Ties resolve by
    preferring '=' over '↔' over '-' over '+' (the before sequence
    is consumed first). ``consume_before_first=False`` mirrors the
    '-'/'+' preference, which is what makes align(b, a) the exact flip
    of align(a, b).
    """
    if not before or not after:
        raise ValueError("align: both sequences must be nonempty")
    m, n = len(before), len(after)
    # dp[i][j] = cost of aligning before[i:] with after[j:]
    dp = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m):
        dp[i][n] = m - i
    for j in range(n):
        dp[m][j] = n - j
    for i in range(m - 1, -1, -1):
        row, below = dp[i], dp[i + 1]
        for j in range(n - 1, -1, -1):
            if before[i] == after[j]:
                row[j] = below[j + 1]
            else:
                row[j] = 1 + min(below[j + 1], below[j], row[j + 1])

    entries: list[DiffEntry] = []
    i = j = 0
    while i < m or j < n:
        cur = dp[i][j]
        if i < m and j < n and before[i] == after[j] and dp[i + 1][j + 1] == cur:
            entries.append(DiffEntry(TAG_EQUAL, before[i], after[j]))
            i, j = i + 1, j + 1
            continue
        if i < m and j < n and before[i] != after[j] and dp[i + 1][j + 1] + 1 == cur:
            entries.append(DiffEntry(TAG_REPLACE, before[i], after[j]))
            i, j = i + 1, j + 1
            continue
        delete_ok = i < m and dp[i + 1][j] + 1 == cur
        insert_ok = j < n and dp[i][j + 1] + 1 == cur
        if delete_ok and (consume_before_first or not insert_ok):
            entries.append(DiffEntry(TAG_DELETE, before[i], GAP))
            i += 1
        else:
            entries.append(DiffEntry(TAG_INSERT, GAP, after[j]))
            j += 1
    return AlignedDiff(tuple(entries))


def flip(diff: AlignedDiff) -> AlignedDiff:
    """Swap before/after roles: '-' becomes '+' and token columns swap."""
    swapped = {TAG_DELETE: TAG_INSERT, TAG_INSERT: TAG_DELETE}
    return AlignedDiff(tuple(
        DiffEntry(swapped.get(e.tag, e.tag), e.after_token, e.before_token)
        for e in diff.entries
    ))


def format_diff(diff: AlignedDiff) -> str:
    """Three tab-separated columns (tag, before, after), one entry per line."""
    return "\n".join(f"{e.tag}\t{e.before_token}\t{e.after_token}" for e in diff.entries)
