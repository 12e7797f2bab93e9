import importlib.metadata as metadata

from .bases.json_parser import JSONParser
from .bases.middleware import SweepMiddleware
from .bases.symbol import DispersionSymbol, FourierSymbol
from .birman_schwinger import (
    BirmanSchwingerOperator,
    EigenPair,
    apply_K,
    isospectrality_check,
    knapp_lower_bound,
    knapp_table,
    matched_unit_grid,
    power_iteration,
    rescaled_tube_operator,
    strong_convergence_check,
    top_eigenpair,
)
from .bounds import (
    BoundReport,
    FractionalVariant,
    WeightMode,
    davies_nath_F,
    default_y_set,
    dist_to_positive_axis,
    dn_quotient,
    expected_norm_exponent,
    fractional_check,
    frank_quotient,
    lq_norm,
    ls_quotient,
    q_s,
)
from .exceptions import (
    BoundError,
    BSQuickError,
    CertificateError,
    ConfigError,
    ConvergenceError,
    GridError,
    GridMismatchError,
    PreconditionError,
    RegionError,
    ResolutionError,
    RoundoffError,
    StorageError,
    SymbolError,
)
from .forge import (
    Certificate,
    CertificateReport,
    embedded_perturbation,
    forge_potential,
    quasimode_defect,
    rescale_certificate,
    verify_bs_correspondence,
    verify_certificate,
)
from .grid import Field, FourierGrid, build_grid, field_inner
from .json_parsers import (
    BuiltinJsonParser,
    OrjsonParser,
    UjsonParser,
    json_parser_policy,
)
from .kernel import (
    DecayProfile,
    ShellBump,
    kernel_decay_profile,
    resolvent_decay_rate,
)
from .knapp import (
    KnappSpec,
    knapp_fourier_mass,
    knapp_mass_fraction,
    knapp_wavepacket,
)
from .multipliers import (
    Multiplier,
    apply_multiplier,
    delta_multiplier,
    resolvent_multiplier,
    symbol_multiplier,
)
from .pretty_view import pretty_view
from .region import RegionShape, RegionSpec, region_indicator
from .symbols import (
    FractionalSymbol,
    LaplacianSymbol,
    RescaledTubeSymbol,
    TabulatedSymbol,
    eval_symbol,
)

try:
    __version__ = metadata.version(__name__)
except metadata.PackageNotFoundError:  # pragma: no cover
    __version__ = "0+unknown"
