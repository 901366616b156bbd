"""Label scheme of the downstream trainer: four classes, the rest discarded."""

from .errors import InputError

CLASSES = ("anger", "happiness", "sadness", "neutral")
DISCARD = "discard"

_MAP = {name: name for name in CLASSES}
_MAP["excitement"] = "happiness"  # merged into the happiness class downstream
for _rare in ("surprise", "fear", "disgust", "frustration", "other"):
    _MAP[_rare] = DISCARD
_MAP[DISCARD] = DISCARD


def map_label(raw: str) -> str:
    key = raw.strip().lower()
    if key not in _MAP:
        raise InputError(f"unknown emotion label {raw!r}")
    return _MAP[key]
