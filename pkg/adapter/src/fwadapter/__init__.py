"""Framework adapter: serves model-execution requests over stdin/stdout.

One process per framework. The engine speaks line-delimited JSON to this
process; the adapter rebuilds each serialized model as a real framework
computation with parameters regenerated from the shared counter-based
specification, so every backend evaluates the same mathematical function.
"""

__version__ = "0.1.0"

SUPPORTED_FRAMEWORKS = ("torch",)
