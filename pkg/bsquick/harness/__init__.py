"""
Конфигурация, свипы, подгонка, хранение и консольная утилита
"""
from .config import GridPolicy, SweepConfig, load_config
from .fitting import PowerLawFit, fit_power_law
from .middlewares import LoggingMiddleware, WallClockMiddleware
from .statuses import (
    CertificationFailed,
    Certified,
    RowStatus,
    StatusPayload,
    UnexpectedErrorOccurred,
)
from .storage import (
    load_certificate,
    load_report,
    save_certificate,
    save_report,
    write_csv,
)
from .sweep import (
    RowProcessingContext,
    SweepRow,
    SweepRunner,
    run_sweep,
    sweep_columns,
)
