"""Human-machine interactive translation platform for bilingual legal judgments.

Core package: corpus handling, translation/proofreading memories with
positional neighbor retrieval, the three-agent translate/annotate/proofread
pipeline, quality evaluation, and cost accounting. The HTTP service in
``hmit.service`` and the CLI in ``hmit.cli`` are thin layers over this core.
"""

__version__ = "0.1.0"
