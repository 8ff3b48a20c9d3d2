"""Self-contained dissertation repository service.

An embedded crash-safe store, provisioned registration with session auth,
role-gated administration, TF-IDF ranked search over an inverted index,
per-member favorites, and file upload/download, all behind one HTTP API.
"""

from .service import DrsService

__all__ = ["DrsService"]
