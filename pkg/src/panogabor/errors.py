"""Exception types raised across the package."""


class PanoGaborError(ValueError):
    """Base class for all errors raised by panogabor."""

    def to_dict(self):
        return {"error": type(self).__name__, "message": str(self)}


class ShapeError(PanoGaborError):
    """Array shapes or channel chains are inconsistent."""


class FormatError(PanoGaborError):
    """A file could not be parsed.

    ``position`` is the byte offset at which parsing failed and ``section``
    names the header field or record being read, when known.
    """

    def __init__(self, message, position=None, section=None):
        super().__init__(message)
        self.position = position
        self.section = section

    def to_dict(self):
        d = super().to_dict()
        if self.position is not None:
            d["position"] = self.position
        if self.section is not None:
            d["section"] = self.section
        return d


class DivergenceError(PanoGaborError):
    """Gradient descent produced a non-finite loss."""

    def __init__(self, message, step):
        super().__init__(message)
        self.step = step

    def to_dict(self):
        d = super().to_dict()
        d["step"] = self.step
        return d
