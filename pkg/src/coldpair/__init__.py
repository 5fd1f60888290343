"""Cold-start pairing engine for item-based collaborative filtering.

Matches new items without behavioral data to established items via
document embeddings (tf-idf, LDA, or paragraph vectors), so the CF
recommender can surface them without any change to the CF core.
"""

__version__ = "0.1.0"
