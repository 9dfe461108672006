"""Synthetic Apache access logs with per-character field annotations, a rule-based
annotator for real logs, numpy seq2seq parsers and edit-distance scoring."""

__version__ = "0.1.0"
