"""Exception hierarchy shared across the package.

Every failure mode the public operations can produce has its own class so
callers (service handlers, CLI) can map them to status codes / exit codes
without string matching.
"""

from __future__ import annotations


class BoxlabError(Exception):
    """Base class for all boxlab errors."""


# --- geometry / annotation lifecycle ---------------------------------------

class ZeroAreaError(BoxlabError):
    """Box width or height is not strictly positive."""


class OutOfBoundsError(BoxlabError):
    """Box (or region) exceeds the image extent."""


class IllegalTransitionError(BoxlabError):
    """Event is not applicable to the annotation's current status."""

    def __init__(self, status, event_kind):
        self.status = status
        self.event_kind = event_kind
        super().__init__(f"cannot apply {event_kind.value} in status {status.value}")


# --- image ingestion --------------------------------------------------------

class DecodeError(BoxlabError):
    """Bytes could not be decoded as a supported raster image."""


# --- labeling pipeline ------------------------------------------------------

class EmptyBatchError(BoxlabError):
    """A prompt request was built with no items."""


class UnresolvedPlaceholderError(BoxlabError):
    """Prompt template contains a placeholder with no value."""


class ProviderExhaustedError(BoxlabError):
    """Provider kept failing transiently until max_attempts ran out."""


class AuthError(BoxlabError):
    """Provider rejected the credentials; never retried."""


class MalformedResponseError(BoxlabError):
    """Provider payload could not be decoded."""


class EmptyLabelError(BoxlabError):
    """Label text is blank after trimming."""


# --- taxonomy ----------------------------------------------------------------

class NotInTaxonomyError(BoxlabError):
    """Canonical label has no taxonomy entry."""


# --- evaluation ---------------------------------------------------------------

class EmptyEvaluationError(BoxlabError):
    """Evaluation was asked to summarize zero results."""


class NegativeParamError(BoxlabError):
    """Cost parameter below zero."""


# --- project store ------------------------------------------------------------

class ProjectIOError(BoxlabError):
    """Filesystem failure while saving or loading a project."""


class CorruptProjectError(BoxlabError):
    """Project on disk fails schema or checksum validation."""

    def __init__(self, message, file_name=None):
        self.file_name = file_name
        if file_name:
            message = f"{message} (file: {file_name})"
        super().__init__(message)


class UnlabeledInExportError(BoxlabError):
    """An annotation selected for export carries no label."""


class DanglingReferenceError(BoxlabError):
    """Document references an image or category that does not resolve."""


class InvalidBoxError(BoxlabError):
    """Imported bbox is degenerate or exceeds its image."""


# --- service -------------------------------------------------------------------

class UnknownProjectError(BoxlabError):
    """No project with that id."""


class InvalidFilterError(BoxlabError):
    """Label-job filter is not a recognized selection."""


class UnknownAnnotationError(BoxlabError):
    """No annotation with that id."""


class InvalidRequestError(BoxlabError):
    """Service request body fails domain validation."""
