class ExportError(Exception):
    """Runtime failure while exporting (model load, non-finite output, bad file)."""


class InputError(ExportError):
    """Caller-side problem: unknown model name, malformed CSV, bad flag value."""
