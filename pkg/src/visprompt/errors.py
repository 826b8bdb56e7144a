"""Exception types shared across the package."""


class VisPromptError(Exception):
    """Base class for all errors raised by this package."""


# --- signal ingestion / preprocessing ---

class EmptyInput(VisPromptError):
    pass


class MalformedRow(VisPromptError):
    def __init__(self, row: int, detail: str = ""):
        self.row = row
        super().__init__(f"non-numeric value at data row {row}" + (f": {detail}" if detail else ""))


class ChannelCountMismatch(VisPromptError):
    pass


class NoDataForUser(VisPromptError):
    pass


class ChannelLayoutMismatch(VisPromptError):
    pass


class WindowLongerThanSeries(VisPromptError):
    pass


# --- signal processing ---

class SignalTooShort(VisPromptError):
    pass


class BadParams(VisPromptError):
    pass


class BadBand(VisPromptError):
    pass


class TooFewPeaks(VisPromptError):
    pass


# --- rendering ---

class IncompatibleModality(VisPromptError):
    pass


class TooManyChannels(VisPromptError):
    pass


# --- prompt building ---

class NoTextPart(VisPromptError):
    pass


class EmptySummary(VisPromptError):
    pass


class TokenizerUnavailable(VisPromptError):
    pass


# --- visualization generator ---

class EmptyCatalog(VisPromptError):
    pass


class NoJsonArray(VisPromptError):
    pass


class AllIdsUnknown(VisPromptError):
    pass


class TooFewCandidates(VisPromptError):
    pass


class FilterFailed(VisPromptError):
    pass


class SelectionFailed(VisPromptError):
    pass


# --- MLLM client ---

class MissingTranscript(VisPromptError):
    def __init__(self, digest: str):
        self.digest = digest
        super().__init__(f"no recorded response for request digest {digest}")


class HttpError(VisPromptError):
    pass


class AuthMissing(VisPromptError):
    pass


class NoLabelFound(VisPromptError):
    pass


class AmbiguousLabel(VisPromptError):
    pass


# --- evaluation harness ---

class InsufficientSamples(VisPromptError):
    def __init__(self, label: str, have: int, need: int):
        self.label = label
        super().__init__(f"label {label!r} has {have} samples, needs {need}")
