"""Configuration management for gazemodal."""

from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from gazemodal.errors import ConfigError

# Fixed offsets for the seeded generator hierarchy; one global seed reproduces everything.
SEED_OFFSETS: Dict[str, int] = {
    "dataset": 0,
    "corpus": 101,
    "embedding": 202,
    "init": 303,
    "shuffle": 404,
    "folds": 505,
}


class Settings(BaseSettings):
    """Application settings."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="GAZEMODAL_",
        case_sensitive=False,
        extra="ignore",
    )

    # Output
    out: Path = Field(default=Path("./gazemodal-out"))

    # Logging
    log_level: str = Field(default="INFO")
    log_format: str = Field(default="console")
    check_finite: bool = Field(default=False)

    # Reproducibility
    seed: int = Field(default=7)

    # Synthetic dataset
    n_studies: int = Field(default=600)
    image_size: int = Field(default=64)
    temporal_frames: int = Field(default=8)
    corpus_size: int = Field(default=2000)
    annotation_fraction: float = Field(default=1.0)
    missing_gaze_fraction: float = Field(default=0.0)

    # Text embedding
    embedding_dim: int = Field(default=150)
    embedding_window: int = Field(default=5)
    embedding_negatives: int = Field(default=5)
    embedding_epochs: int = Field(default=15)
    embedding_min_count: int = Field(default=2)
    embedding_lr: float = Field(default=0.025)

    # Training
    folds: int = Field(default=5)
    epochs: int = Field(default=30)
    batch_size: int = Field(default=16)
    lr: float = Field(default=1e-3)
    beta1: float = Field(default=0.9)
    beta2: float = Field(default=0.999)
    epsilon: float = Field(default=1e-8)
    encoder_channels: str = Field(default="8,16,32,64")
    lstm_hidden: int = Field(default=32)
    heatmap_peak_weight: float = Field(default=20.0)

    @field_validator("log_level")
    @classmethod
    def normalize_level(cls, v: str) -> str:
        """Upper-case the log level name."""
        return v.upper()

    @property
    def channel_widths(self) -> Tuple[int, ...]:
        """Encoder widths parsed from the comma-separated setting."""
        return parse_widths(self.encoder_channels)


def parse_widths(value: str) -> Tuple[int, ...]:
    return tuple(int(part) for part in value.split(",") if part.strip())


def derive_seed(seed: int, stream: str) -> int:
    """Seed for one named stream of the generator hierarchy."""
    return int(seed) + SEED_OFFSETS[stream]


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


settings = get_settings()


def _setting(name: str):
    return lambda: getattr(get_settings(), name)


class RunConfig(BaseModel):
    """Effective configuration of one command-line run.

    Built from defaults in :class:`Settings`, then a flat ``key = value`` file,
    then command-line options. Unknown keys are rejected.
    """

    model_config = ConfigDict(extra="forbid")

    out: Path = Field(default_factory=_setting("out"))
    data: Optional[Path] = None
    embeddings: Optional[Path] = None
    seed: int = Field(default_factory=_setting("seed"))

    n_studies: int = Field(default_factory=_setting("n_studies"), ge=1)
    image_size: int = Field(default_factory=_setting("image_size"), ge=8)
    temporal_frames: int = Field(default_factory=_setting("temporal_frames"), ge=1)
    corpus_size: int = Field(default_factory=_setting("corpus_size"), ge=0)
    annotation_fraction: float = Field(default_factory=_setting("annotation_fraction"), ge=0, le=1)
    missing_gaze_fraction: float = Field(default_factory=_setting("missing_gaze_fraction"), ge=0, le=1)

    embedding_dim: int = Field(default_factory=_setting("embedding_dim"), ge=1)
    window: int = Field(default_factory=_setting("embedding_window"), ge=1)
    negatives: int = Field(default_factory=_setting("embedding_negatives"), ge=1)
    embedding_epochs: int = Field(default_factory=_setting("embedding_epochs"), ge=0)
    min_count: int = Field(default_factory=_setting("embedding_min_count"), ge=1)

    experiment: Optional[str] = None
    arch: Optional[str] = None
    text_source: Optional[str] = None
    heatmap_loss: bool = False
    folds: int = Field(default_factory=_setting("folds"), ge=2)
    epochs: int = Field(default_factory=_setting("epochs"), ge=0)
    batch_size: int = Field(default_factory=_setting("batch_size"), ge=1)
    lr: float = Field(default_factory=_setting("lr"), gt=0)
    channels: Tuple[int, ...] = Field(default_factory=lambda: get_settings().channel_widths)
    lstm_hidden: int = Field(default_factory=_setting("lstm_hidden"), ge=1)
    heatmap_peak_weight: float = Field(default_factory=_setting("heatmap_peak_weight"), ge=0)
    composites: int = Field(default=0, ge=0)
    strict: bool = False

    @field_validator("channels", mode="before")
    @classmethod
    def parse_channels(cls, v):
        if isinstance(v, str):
            return parse_widths(v)
        return v

    @property
    def data_root(self) -> Path:
        """Dataset directory; defaults to ``<out>/data``."""
        if self.data is None:
            return self.out / "data"
        return self.data.parent if self.data.suffix == ".csv" else self.data

    @property
    def manifest(self) -> Path:
        if self.data is not None and self.data.suffix == ".csv":
            return self.data
        return self.data_root / "manifest.csv"

    def model_overrides(self) -> Dict[str, object]:
        """Model settings this run fixes explicitly."""
        return {
            "image_size": self.image_size,
            "channels": self.channels,
            "lstm_hidden": self.lstm_hidden,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lr": self.lr,
            "heatmap_peak_weight": self.heatmap_peak_weight,
        }

    def echo_lines(self) -> List[str]:
        """Sorted ``key = value`` lines that read back into an equal config."""
        lines = []
        for key, value in sorted(self.model_dump(mode="json").items()):
            if value is None:
                continue
            if isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, (list, tuple)):
                value = ",".join(str(v) for v in value)
            lines.append(f"{key} = {value}")
        return lines


ECHO_FILE = "config.echo"


def read_config_file(path: Union[str, Path]) -> Dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment and blank lines are skipped."""
    path = Path(path)
    values: Dict[str, str] = {}
    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{number}: expected 'key = value', got {raw!r}")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def build_run_config(config_file: Optional[Union[str, Path]] = None, **options: object) -> RunConfig:
    """Merge settings defaults, an optional config file and non-``None`` options."""
    values: Dict[str, object] = dict(read_config_file(config_file)) if config_file else {}
    values.update({key: value for key, value in options.items() if value is not None})
    try:
        return RunConfig(**values)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in exc.errors()
        )
        raise ConfigError(f"invalid configuration: {problems}") from exc


def write_config_echo(config: RunConfig, out_dir: Union[str, Path]) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / ECHO_FILE
    path.write_text("".join(f"{line}\n" for line in config.echo_lines()), encoding="utf-8")
    return path
