from .audio import TARGET_RATE, load_wav, seconds
from .errors import ExportError, InputError
from .export import (
    MODEL_REGISTRY,
    AudioItem,
    ExportJob,
    export,
    frame_count,
    load_frozen,
    resolve_model,
)
from .format import read_feature_file, write_feature_file
from .labels import CLASSES, DISCARD, map_label

__version__ = "0.1.0"
