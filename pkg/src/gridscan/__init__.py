from .baselines import (
    arx_fit,
    arx_frf,
    arx_impedance,
    etfe,
    etfe_impedance,
    sequential_perturbation_estimate,
    split_record,
)
from .config import ExperimentConfig, default_experiment_config, load_experiment_config
from .errors import (
    ConfigError,
    EmptyBandError,
    GridConstructionError,
    GridscanError,
    IncompatibleDataError,
    InvalidSpecError,
    MissingInputError,
    RankDeficiencyError,
    ShapeError,
    UnderdeterminedError,
)
from .grid import (
    LadderBranch,
    LadderNetworkConfig,
    StateSpaceGrid,
    build_ladder_grid,
    default_ladder_config,
    leakage_oracle,
    simulate,
    true_frf,
)
from .impedance import ImpedanceFrfEstimate, complex_pair_to_impedance, impedance_to_complex_pair
from .lpm import ComplexTfEstimate, LpmConfig, estimate_complex_tf, estimate_frf
from .metrics import BandSelection, fit_percent, relative_hinf_error
from .signals import DqTimeSeries, ExcitationSpec, RealTimeSeries, abc_to_dq, dq_to_abc, generate_rbs
from .spectra import Spectrum, conj_reversed, dft, idft


def main() -> None:
    """Main entry point for the gridscan CLI."""
    from .cli import app

    app()
