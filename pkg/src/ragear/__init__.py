"""Course recommender ranking lecture-transcript evidence.

Dense retrieval over transcript chunks, a property-graph catalogue for
symbolic filtering, and graph-aware aggregation of chunk evidence into
course rankings, with a full offline evaluation harness.
"""

__version__ = "0.1.0"
