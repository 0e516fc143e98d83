"""Chapter-level ICD-9 coding toolkit.

Builds weighted entity categorizers for one ICD-9 chapter, routes ambiguous
documents to a human review queue, and trains per-code attention classifiers
on within-chapter data only.
"""

__version__ = "0.1.0"
