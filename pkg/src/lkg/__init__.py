"""Legal knowledge graph toolkit.

Builds a typed graph of Facts, Provisions, Legal Norms, and Legal
Applications from court-judgment documents, retrieves statutory provisions
for a query fact by embedding similarity plus graph traversal, and ships an
evaluation harness, an HTTP service, and a pipeline CLI.
"""

from lkg.ontology import EdgeType, NodeLabel

__version__ = "0.1.0"

__all__ = ["EdgeType", "NodeLabel", "__version__"]
