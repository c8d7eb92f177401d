"""Exception hierarchy shared by the pipeline stages.

The CLI maps ``ValidationError`` to exit code 1 and ``ProviderError`` /
``CacheError`` to exit code 2.
"""


class CoverageError(Exception):
    pass


class ValidationError(CoverageError, ValueError):
    pass


class ProviderError(CoverageError):
    pass


class CacheError(CoverageError):
    pass


class IncompleteCacheError(CacheError):
    def __init__(self, missing):
        self.missing = sorted(missing)
        preview = ", ".join(f"{o}->{d} [{m}]" for o, d, m in self.missing[:10])
        more = f" (+{len(self.missing) - 10} more)" if len(self.missing) > 10 else ""
        super().__init__(f"travel cache is missing {len(self.missing)} legs: {preview}{more}")


class StrandedPairError(CoverageError, ValueError):
    """Neither transit nor walking is available for a facility pair."""
