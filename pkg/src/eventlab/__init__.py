"""eventlab: a workbench for teaching event extractors.

Corpus search, protocol-driven span annotation over an append-only log,
character-to-token projection, sparse log-linear trigger/argument models,
tuple-level scoring, and annotation-time learning curves, served over HTTP
and a batch CLI.
"""

__version__ = "0.1.0"
