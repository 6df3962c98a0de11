"""Configuration management for qfacerec."""

import copy
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from ..imaging.ghost import GhostConfig
from .errors import ConfigError

BACKENDS = ("classical", "quantum", "both")
ROTATIONS = ("idealized", "literal")


class Config:
    """Configuration manager for qfacerec.

    The file format is one `key = value` per line with dot-notation keys;
    values are parsed as YAML scalars or flow lists.
    """

    DEFAULT_CONFIG_NAME = "pipeline.conf"
    DEFAULT_CONFIG_DIR = ".qfacerec"

    def __init__(self, config_path: Optional[Path] = None):
        """Initialize configuration.

        Args:
            config_path: Path to config file. If None, uses default locations.
        """
        self.config_path = self._resolve_config_path(config_path)
        self.config: Dict[str, Any] = {}
        self.load()

    def _resolve_config_path(self, config_path: Optional[Path]) -> Optional[Path]:
        """Resolve configuration file path.

        Priority:
        1. Provided config_path
        2. QFACEREC_CONFIG environment variable
        3. ~/.qfacerec/pipeline.conf
        4. ./pipeline.conf
        """
        if config_path:
            return Path(config_path)

        env_config = os.getenv("QFACEREC_CONFIG")
        if env_config:
            return Path(env_config)

        home_config = self.state_dir / self.DEFAULT_CONFIG_NAME
        if home_config.exists():
            return home_config

        local_config = Path(self.DEFAULT_CONFIG_NAME)
        if local_config.exists():
            return local_config

        return None

    def load(self) -> None:
        """Load configuration from file over the built-in defaults."""
        self.config = self._get_default_config()
        if self.config_path is None:
            return
        if not self.config_path.exists():
            raise ConfigError(f"Config file not found: {self.config_path}")

        with open(self.config_path, "r") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{self.config_path}:{lineno}: expected 'key = value'")
                key, raw = (part.strip() for part in line.split("=", 1))
                if not key:
                    raise ConfigError(f"{self.config_path}:{lineno}: empty key")
                try:
                    value = yaml.safe_load(raw) if raw else None
                except yaml.YAMLError as e:
                    raise ConfigError(f"{self.config_path}:{lineno}: cannot parse value {raw!r}: {e}") from e
                self._assign(key, value)

    def save(self, path: Optional[Path] = None) -> Path:
        """Save configuration in the flat key = value format, sorted by key."""
        target = Path(path) if path else self.config_path
        if target is None:
            raise ConfigError("No config path to save to")
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w") as f:
            for key, value in sorted(self.flatten().items()):
                rendered = yaml.safe_dump(value, default_flow_style=True).strip()
                # Scalars come back with a YAML document-end marker.
                if rendered.endswith("..."):
                    rendered = rendered[:-3].strip()
                f.write(f"{key} = {rendered}\n")
        return target

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value by dot-notation key.

        Args:
            key: Configuration key (e.g., 'ghost.frames')
            default: Default value if key not found

        Returns:
            Configuration value or default
        """
        keys = key.split(".")
        value = self.config

        for k in keys:
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default

        return value

    def set(self, key: str, value: Any) -> None:
        """Set configuration value by dot-notation key.

        Args:
            key: Configuration key (e.g., 'ghost.frames')
            value: Value to set
        """
        self._assign(key, value)

    def _assign(self, key: str, value: Any) -> None:
        keys = key.split(".")
        config = self.config

        for k in keys[:-1]:
            if not isinstance(config.get(k), dict):
                config[k] = {}
            config = config[k]

        config[keys[-1]] = value

    def flatten(self) -> Dict[str, Any]:
        """All values keyed by their dot-notation path."""
        flat: Dict[str, Any] = {}

        def walk(prefix: str, node: Dict[str, Any]) -> None:
            for k, v in node.items():
                path = f"{prefix}.{k}" if prefix else k
                if isinstance(v, dict):
                    walk(path, v)
                else:
                    flat[path] = v

        walk("", self.config)
        return flat

    def _get_default_config(self) -> Dict[str, Any]:
        """Get default configuration."""
        return {
            "version": "1.0.0",
            "image_dir": None,
            "query_dir": None,
            "side": 16,
            "r": 4,
            "tau": 0.1,
            "epsilon": None,
            "backend": "classical",
            "precision": 4,
            "qpca_precision": 6,
            "fraction_bits": 8,
            "kappa_cap": 32.0,
            "max_qubits": 20,
            "quantum_dim_cap": 4,
            "rotation": "idealized",
            "feature_space": False,
            "use_ghost": True,
            "dump_images": False,
            "output": "qfacerec-out",
            "seed": 0,
            "workers": 1,
            "ghost": {
                "frames": 300,
                "pairs_per_frame": 128,
                "jitter_sigma": 0.5,
                "dark_count_rate": 0.01,
                "detection_efficiency": 0.9,
            },
        }

    @property
    def state_dir(self) -> Path:
        """Get ~/.qfacerec directory path."""
        return Path.home() / self.DEFAULT_CONFIG_DIR


@dataclass
class PipelineConfig:
    """Validated settings for one recognition run."""

    image_dir: Optional[Path] = None
    query_dir: Optional[Path] = None
    side: int = 16
    r: int = 4
    tau: float = 0.1
    epsilon: Optional[float] = None
    backend: str = "classical"
    precision: int = 4
    qpca_precision: int = 6
    fraction_bits: int = 8
    kappa_cap: float = 32.0
    max_qubits: int = 20
    quantum_dim_cap: int = 4
    rotation: str = "idealized"
    feature_space: bool = False
    use_ghost: bool = True
    dump_images: bool = False
    output: Path = Path("qfacerec-out")
    seed: int = 0
    workers: int = 1
    ghost: GhostConfig = field(default_factory=GhostConfig)

    @classmethod
    def from_config(cls, config: Config, seed: Optional[int] = None) -> "PipelineConfig":
        """Build from a Config; seed priority is argument, QFACEREC_SEED, file."""
        env_seed = os.getenv("QFACEREC_SEED")
        if seed is None and env_seed:
            try:
                seed = int(env_seed)
            except ValueError:
                raise ConfigError(f"QFACEREC_SEED must be an integer, got {env_seed!r}") from None
        if seed is None:
            seed = config.get("seed", 0)

        def path_or_none(key):
            value = config.get(key)
            return Path(value) if value else None

        try:
            cfg = cls(
                image_dir=path_or_none("image_dir"),
                query_dir=path_or_none("query_dir"),
                side=int(config.get("side")),
                r=int(config.get("r")),
                tau=float(config.get("tau")),
                epsilon=None if config.get("epsilon") is None else float(config.get("epsilon")),
                backend=str(config.get("backend")),
                precision=int(config.get("precision")),
                qpca_precision=int(config.get("qpca_precision")),
                fraction_bits=int(config.get("fraction_bits")),
                kappa_cap=float(config.get("kappa_cap")),
                max_qubits=int(config.get("max_qubits")),
                quantum_dim_cap=int(config.get("quantum_dim_cap")),
                rotation=str(config.get("rotation")),
                feature_space=bool(config.get("feature_space")),
                use_ghost=bool(config.get("use_ghost")),
                dump_images=bool(config.get("dump_images")),
                output=Path(config.get("output")),
                seed=int(seed),
                workers=int(config.get("workers")),
                ghost=GhostConfig(
                    frames=int(config.get("ghost.frames")),
                    pairs_per_frame=int(config.get("ghost.pairs_per_frame")),
                    jitter_sigma=float(config.get("ghost.jitter_sigma")),
                    seed=int(seed),
                    dark_count_rate=float(config.get("ghost.dark_count_rate")),
                    detection_efficiency=float(config.get("ghost.detection_efficiency")),
                    workers=int(config.get("workers")),
                ),
            )
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid configuration value: {e}") from e
        return cfg.validate()

    def validate(self) -> "PipelineConfig":
        """Check invariants; raises ConfigError on the first violation."""
        if self.side < 2 or self.side & (self.side - 1):
            raise ConfigError(f"side must be a power of two >= 2, got {self.side}")
        if self.side * self.side > 4096:
            raise ConfigError(f"side² = {self.side * self.side} exceeds 4096")
        if not 1 <= self.precision <= 8:
            raise ConfigError(f"precision must lie in 1..8, got {self.precision}")
        if not 1 <= self.qpca_precision <= 8:
            raise ConfigError(f"qpca_precision must lie in 1..8, got {self.qpca_precision}")
        if self.r < 1:
            raise ConfigError(f"r must be >= 1, got {self.r}")
        if not 0 <= self.tau <= 1:
            raise ConfigError(f"tau must lie in [0, 1], got {self.tau}")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {', '.join(BACKENDS)}, got {self.backend}")
        if self.rotation not in ROTATIONS:
            raise ConfigError(f"rotation must be one of {', '.join(ROTATIONS)}, got {self.rotation}")
        if self.kappa_cap < 1:
            raise ConfigError(f"kappa_cap must be >= 1, got {self.kappa_cap}")
        if not 1 <= self.max_qubits <= 20:
            raise ConfigError(f"max_qubits must lie in 1..20, got {self.max_qubits}")
        if self.quantum_dim_cap < 1:
            raise ConfigError(f"quantum_dim_cap must be >= 1, got {self.quantum_dim_cap}")
        if self.fraction_bits < 0:
            raise ConfigError(f"fraction_bits must be >= 0, got {self.fraction_bits}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        self.ghost.validate()
        return self

    def to_dict(self) -> Dict[str, Any]:
        """JSON-safe view used for hashing and reports."""
        data = asdict(self)
        ghost = data.pop("ghost")
        ghost.pop("mask", None)
        ghost.pop("workers", None)
        data.pop("workers", None)
        data["ghost"] = ghost
        for key in ("image_dir", "query_dir", "output"):
            data[key] = None if data[key] is None else str(data[key])
        return data

    def config_hash(self) -> str:
        """sha256 of the settings that affect the report."""
        data = copy.deepcopy(self.to_dict())
        data.pop("output", None)
        data.pop("dump_images", None)
        payload = json.dumps(data, sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()
