"""editrep: learning fixed-size distributed representations of edits."""

__version__ = "0.1.0"
