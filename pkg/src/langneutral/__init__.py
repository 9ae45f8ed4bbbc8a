"""Toolkit for probing how language-neutral multilingual embeddings are.

Five probing tasks over stored contextual embeddings: language
identification, language similarity, parallel sentence retrieval, word
alignment, and MT quality estimation, plus the centering and projection
procedures used to strengthen language neutrality.
"""

__version__ = "0.1.0"
