"""Run configuration: every hyperparameter a training run depends on."""

from dataclasses import asdict, dataclass, field, replace

from .errors import ConfigurationError

POOLING_METHODS = ("mean", "meanstd", "corr", "attcorr")


@dataclass
class TrainConfig:
    pooling: str = "attcorr"
    dv: int = 256
    heads: int = 4
    dropout: float = 0.25
    label_smoothing: float = 0.25
    epsilon: float = 1e-8
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    grad_clip: float = 0.0  # 0 disables clipping
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0

    def validate(self) -> "TrainConfig":
        if self.pooling not in POOLING_METHODS:
            raise ConfigurationError(f"pooling must be one of {POOLING_METHODS}, got {self.pooling!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigurationError(f"dropout must be in [0, 1), got {self.dropout}")
        if not 0.0 <= self.label_smoothing <= 1.0:
            raise ConfigurationError(f"label smoothing must be in [0, 1], got {self.label_smoothing}")
        if self.heads < 1:
            raise ConfigurationError(f"head count must be >= 1, got {self.heads}")
        if self.dv < 2:
            raise ConfigurationError(f"projection dim must be >= 2, got {self.dv}")
        if self.epsilon <= 0:
            raise ConfigurationError(f"correlation epsilon must be positive, got {self.epsilon}")
        if self.lr <= 0:
            raise ConfigurationError(f"learning rate must be positive, got {self.lr}")
        if self.epochs < 0:
            raise ConfigurationError(f"epoch count must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch size must be >= 1, got {self.batch_size}")
        if self.grad_clip < 0:
            raise ConfigurationError(f"gradient clip must be >= 0, got {self.grad_clip}")
        return self

    def asdict(self) -> dict:
        return asdict(self)

    def updated(self, **kwargs) -> "TrainConfig":
        return replace(self, **kwargs).validate()
