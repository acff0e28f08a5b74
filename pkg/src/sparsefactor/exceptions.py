"""Exception hierarchy shared across the package."""


class SparseFactorError(Exception):
    """Base class for all package-specific errors."""


class EmptyInput(SparseFactorError):
    pass


class ConstantColumn(SparseFactorError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column} has zero sample variance")


class RowMismatch(SparseFactorError):
    pass


class BoundaryMismatch(SparseFactorError):
    pass


class ParseError(SparseFactorError):
    def __init__(self, row, col, message=""):
        self.row = row
        self.col = col
        super().__init__(message or f"could not parse numeric value at row {row}, column {col}")


class NonFinite(SparseFactorError):
    pass


class NoConvergence(SparseFactorError):
    def __init__(self, max_iters):
        self.max_iters = max_iters
        super().__init__(f"coordinate descent did not converge within {max_iters} sweeps")


class BisectionFailure(SparseFactorError):
    pass


class RankDeficient(SparseFactorError):
    pass


class DegenerateFactor(SparseFactorError):
    def __init__(self, message="latent score vector collapsed to zero", iteration=None):
        self.iteration = iteration
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)


class SingularDesign(SparseFactorError):
    pass


class DimensionMismatch(SparseFactorError):
    pass


class EmptyScreen(SparseFactorError):
    pass


class InsufficientRank(SparseFactorError):
    pass


class DesignMismatch(SparseFactorError):
    pass


class ZeroOracleMse(SparseFactorError):
    pass
