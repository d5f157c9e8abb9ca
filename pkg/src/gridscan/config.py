"""Experiment configuration: strict JSON documents validated into frozen pydantic models."""

import json
import math
from pathlib import Path
from typing import Annotated, Any, Literal, Optional, Union

from pydantic import (
    BeforeValidator,
    Field,
    PlainSerializer,
    PlainValidator,
    StrictBool,
    StrictFloat,
    StrictInt,
    StrictStr,
    TypeAdapter,
    ValidationError,
    ValidationInfo,
    field_validator,
    model_serializer,
    model_validator,
)

from .document import ConfigModel, config_error, validate_document
from .errors import ConfigError, GridConstructionError, InvalidSpecError, MissingInputError
from .grid import (
    InjectionFilter,
    LadderNetworkConfig,
    NoiseSpec,
    build_ladder_grid,
    default_ladder_config,
    load_ladder_config,
)
from .lpm import LpmConfig
from .metrics import BandSelection
from .signals import ExcitationSpec

__all__ = [
    "LpmMethod",
    "ArxMethod",
    "SeqPertMethod",
    "EtfeMethod",
    "MethodSpec",
    "ExcitationSettings",
    "ExperimentConfig",
    "parse_method",
    "parse_method_spec",
    "parse_band",
    "default_experiment_config",
    "load_experiment_config",
]


class _Method(ConfigModel):
    """Serializes as ``{kind: {fields}}``, the form methods take in a config."""

    @model_serializer(mode="wrap")
    def _tagged(self, handler) -> dict[str, Any]:
        return {self.kind: handler(self)}


class LpmMethod(_Method):
    kind: Literal["lpm"] = Field(default="lpm", exclude=True)
    order: StrictInt = Field(alias="R")
    half_window: Optional[StrictInt] = Field(default=None, alias="l")
    assume_symmetric: StrictBool = Field(default=False, alias="symmetric")
    assume_periodic: StrictBool = Field(default=False, alias="periodic")
    rank_rel_tol: StrictFloat = 1e-10

    @model_validator(mode="after")
    def _window_fits(self) -> "LpmMethod":
        self.lpm_config()
        return self

    def lpm_config(self) -> LpmConfig:
        return LpmConfig.for_order(
            self.order,
            self.half_window,
            assume_symmetric=self.assume_symmetric,
            assume_periodic=self.assume_periodic,
            rank_rel_tol=self.rank_rel_tol,
        )

    @property
    def label(self) -> str:
        return self.lpm_config().label

    @property
    def model_order(self) -> Optional[int]:
        return self.order


class ArxMethod(_Method):
    kind: Literal["arx"] = Field(default="arx", exclude=True)
    order: StrictInt = Field(ge=1)

    @property
    def label(self) -> str:
        return f"arx_order{self.order}"

    @property
    def model_order(self) -> Optional[int]:
        return self.order


class SeqPertMethod(_Method):
    kind: Literal["seqpert"] = Field(default="seqpert", exclude=True)
    window: Literal["rectangular", "hamming"] = "hamming"

    @property
    def label(self) -> str:
        return f"seqpert_{self.window}"

    @property
    def model_order(self) -> Optional[int]:
        return None


class EtfeMethod(_Method):
    kind: Literal["etfe"] = Field(default="etfe", exclude=True)

    @property
    def label(self) -> str:
        return "etfe"

    @property
    def model_order(self) -> Optional[int]:
        return None


_METHOD_KINDS = ("lpm", "arx", "seqpert", "etfe")


def _tag_method(data: Any) -> Any:
    """``"etfe"`` and ``{"lpm": {...}}`` become the flat ``{"kind": "lpm", ...}`` the union dispatches on."""
    if isinstance(data, _Method):
        return data
    if isinstance(data, str):
        data = {data: {}}
    if not isinstance(data, dict):
        raise ValueError(f"expected a method name or object, got {type(data).__name__}")
    if len(data) != 1:
        raise ValueError(f"a method object needs exactly one of {', '.join(_METHOD_KINDS)}")
    ((kind, fields),) = data.items()
    if kind not in _METHOD_KINDS:
        raise ValueError(f"unknown method {kind!r}")
    if fields is None:
        fields = {}
    if not isinstance(fields, dict):
        raise ValueError(f"{kind} options must be an object")
    return {**fields, "kind": kind}


MethodSpec = Annotated[
    Union[LpmMethod, ArxMethod, SeqPertMethod, EtfeMethod],
    Field(discriminator="kind"),
    BeforeValidator(_tag_method),
]
_METHOD_ADAPTER = TypeAdapter(MethodSpec)

DEFAULT_BANDS = ((0.0, 4000.0), (0.0, 2000.0))


def _band_from_pair(data: Any) -> BandSelection:
    if isinstance(data, BandSelection):
        return data
    real = lambda x: isinstance(x, (int, float)) and not isinstance(x, bool)  # noqa: E731
    if not isinstance(data, (list, tuple)) or len(data) != 2 or not all(real(x) for x in data):
        raise ValueError("expected [f_min, f_max] in Hz")
    try:
        return BandSelection(float(data[0]), float(data[1]))
    except InvalidSpecError as e:
        raise ValueError(str(e)) from e


Band = Annotated[BandSelection, PlainValidator(_band_from_pair), PlainSerializer(BandSelection.to_list)]


def parse_method(data: Any, path: str = "methods[0]") -> MethodSpec:
    """Validate ``{"lpm": {...}}``-style method objects (or the bare string ``"etfe"``)."""
    try:
        return _METHOD_ADAPTER.validate_python(data)
    except ValidationError as e:
        raise config_error(e, path) from e


def _coerce_option(raw: str) -> Any:
    if raw.lower() in ("true", "false"):
        return raw.lower() == "true"
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def parse_method_spec(spec: str) -> MethodSpec:
    """Parse command-line specs such as ``lpm:R=4,l=18,symmetric`` or ``arx:order=2``."""
    kind, _, options = spec.strip().partition(":")
    fields: dict[str, Any] = {}
    for item in filter(None, (part.strip() for part in options.split(","))):
        key, sep, value = item.partition("=")
        fields[key.strip()] = _coerce_option(value.strip()) if sep else True
    return parse_method({kind.strip(): fields}, path=f"--method {spec}")


def parse_band(text: str) -> BandSelection:
    """Parse ``FMIN:FMAX`` in Hz."""
    lo, sep, hi = text.partition(":")
    try:
        if not sep:
            raise ValueError(text)
        return BandSelection(float(lo), float(hi))
    except (ValueError, InvalidSpecError) as e:
        raise ConfigError(f"expected FMIN:FMAX in Hz, got {text!r}", "--band") from e


class ExcitationSettings(ConfigModel):
    """The ``excitation`` section; the record length comes from the experiment."""

    amplitude: StrictFloat = 0.05
    seed: StrictInt = Field(default=1, ge=0)
    channel_seeds: Optional[tuple[StrictInt, StrictInt]] = None
    amplitude_limit: StrictFloat = 0.05

    def to_spec(self, duration_samples: int) -> ExcitationSpec:
        return ExcitationSpec(
            amplitude=self.amplitude,
            duration_samples=duration_samples,
            seed=self.seed,
            channel_seeds=self.channel_seeds,
            amplitude_limit=self.amplitude_limit,
        )


class ExperimentConfig(ConfigModel):
    """Everything that determines a simulate / identify / evaluate run."""

    grid: LadderNetworkConfig = Field(default_factory=default_ladder_config)
    excitation: ExcitationSettings = Field(default_factory=ExcitationSettings)
    duration_s: StrictFloat = Field(default=1.0, gt=0)
    sample_period: StrictFloat = Field(default=1e-4, gt=0, alias="Ts")
    noise: NoiseSpec = Field(default_factory=NoiseSpec)
    transient_magnitude: StrictFloat = Field(default=0.1, ge=0)
    transient_seed: StrictInt = Field(default=3, ge=0)
    injection: Optional[InjectionFilter] = Field(default_factory=InjectionFilter)
    methods: tuple[MethodSpec, ...] = Field(default=(LpmMethod(order=4),), min_length=1)
    bands: tuple[Band, ...] = tuple(BandSelection(lo, hi) for lo, hi in DEFAULT_BANDS)
    output_dir: StrictStr = "gridscan_out"
    lpm_workers: StrictInt = Field(default=1, ge=1)

    @field_validator("grid", mode="before")
    @classmethod
    def _grid_from_path(cls, value: Any, info: ValidationInfo) -> Any:
        """``grid`` may be inline, a path relative to the config file, or absent."""
        if value is None:
            return default_ladder_config()
        if isinstance(value, str):
            base_dir = (info.context or {}).get("base_dir")
            return load_ladder_config(Path(value) if base_dir is None else Path(base_dir) / value)
        return value

    @model_validator(mode="after")
    def _consistent(self) -> "ExperimentConfig":
        n = round(self.duration_s / self.sample_period)
        if n < 2 or n % 2 or not math.isclose(n * self.sample_period, self.duration_s, rel_tol=1e-9):
            raise ConfigError(
                f"duration_s / Ts must be an even integer, got {self.duration_s / self.sample_period}", "duration_s"
            )
        try:
            build_ladder_grid(self.grid)
        except GridConstructionError as e:
            raise ConfigError(str(e), "grid") from e
        try:
            self.excitation.to_spec(n)
        except InvalidSpecError as e:
            raise ConfigError(str(e), "excitation") from e
        nyquist = 0.5 / self.sample_period
        for idx, band in enumerate(self.bands):
            if band.f_max > nyquist:
                raise ConfigError(f"band exceeds the Nyquist frequency {nyquist} Hz", f"bands[{idx}]")
        return self

    @property
    def n_samples(self) -> int:
        return round(self.duration_s / self.sample_period)

    @property
    def omega_g(self) -> float:
        return self.grid.omega_b

    @property
    def excitation_spec(self) -> ExcitationSpec:
        return self.excitation.to_spec(self.n_samples)

    @classmethod
    def from_dict(cls, data: Any, base_dir: Optional[Path] = None) -> "ExperimentConfig":
        """Strict parse; ``grid`` may be inline or a path relative to ``base_dir``."""
        return validate_document(cls, data, context={"base_dir": base_dir})

    def to_dict(self) -> dict[str, Any]:
        """JSON echo that parses back to an equal config (grid always inline)."""
        return self.model_dump(mode="json", by_alias=True)

    def seeds(self) -> dict[str, Any]:
        return {
            "excitation": self.excitation.seed,
            "excitation_channels": list(self.excitation_spec.resolved_channel_seeds),
            "noise": self.noise.seed,
            "transient": self.transient_seed,
        }


def default_experiment_config() -> ExperimentConfig:
    """The shipped comparison: asymmetric default ladder, 1 s at 10 kHz, all methods.

    The initial state gives a 1 p.u. PCC transient so that a leakage-blind
    estimator visibly fails on the record.
    """
    methods: list[MethodSpec] = [LpmMethod(order=r) for r in (2, 4, 6, 8, 10)]
    methods += [ArxMethod(order=order) for order in (2, 4, 6, 8, 10, 20)]
    methods.append(SeqPertMethod(window="hamming"))
    return ExperimentConfig.from_dict(
        {
            "excitation": {"amplitude": 0.05, "seed": 1},
            "noise": {"accuracy_class": 0.005, "seed": 7},
            "transient_magnitude": 1.0,
            "methods": [m.model_dump(by_alias=True) for m in methods],
        }
    )


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"Config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON ({e})", str(path)) from e
    return ExperimentConfig.from_dict(data, base_dir=path.parent)
