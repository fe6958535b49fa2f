class RRIQAError(Exception):
    """Base class of every domain error raised by the pipeline."""

    @property
    def name(self) -> str:
        return type(self).__name__


# Image input and geometry
class ImageError(RRIQAError):
    pass


class UnsupportedFormat(ImageError):
    pass


class CorruptFile(ImageError):
    pass


class EmptyImage(ImageError):
    pass


class ImageTooSmall(ImageError):
    pass


class InvalidSigma(ImageError):
    pass


# Tetrolet transform
class TransformError(RRIQAError):
    pass


class DimensionNotDivisible(TransformError):
    pass


class MalformedDecomposition(TransformError):
    pass


class IndexOutOfRange(TransformError):
    pass


# Density model, special functions and distances
class ModelError(RRIQAError):
    pass


class DegenerateSample(ModelError):
    pass


class TooFewSamples(ModelError):
    pass


class InvalidParams(ModelError):
    pass


class NonIntegrable(ModelError):
    pass


class HypergeometricDivergence(ModelError):
    pass


class DomainError(ModelError):
    pass


class NoConvergence(ModelError):
    pass


class EmptyBands(ModelError):
    pass


# Reduced-reference payload
class PayloadError(RRIQAError):
    pass


class DegenerateSubband(PayloadError):
    def __init__(self, band_id, message: str = ""):
        self.band_id = tuple(band_id)
        super().__init__(message or f"subband {self.band_id} has zero variance")


class MalformedPayload(PayloadError):
    pass


class BadMagic(PayloadError):
    pass


class UnsupportedVersion(PayloadError):
    pass


# Evaluation
class EvaluationError(RRIQAError):
    pass


class TooFewPoints(EvaluationError):
    pass


class DegenerateScores(EvaluationError):
    pass


class ConstantInput(EvaluationError):
    pass


class MalformedManifest(EvaluationError):
    pass
