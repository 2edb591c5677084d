"""Term-similarity benchmarks from ontology releases, plus embedding evaluation tooling."""

__version__ = "0.1.0"
