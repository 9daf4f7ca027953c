from .core import (
    Diagnostics,
    DiagnosticCheck,
    SamplePath,
    SimConfig,
    SimResult,
    age_at,
    build_path,
    diagnostics_check,
    expected_moments,
    integrate_age,
    sample_path,
    simulate_single,
)
from .events import run_events
from .framelog import (
    FRAME_LOG_COLUMNS,
    FrameRecord,
    direct_area,
    read_frame_log,
    records_to_path,
    segment_area,
    write_frame_log,
)
from .slot import simulate_slot
from .validation import ValidationRow, validation_grid

__all__ = [
    "Diagnostics", "DiagnosticCheck", "SamplePath", "SimConfig", "SimResult", "age_at",
    "build_path", "diagnostics_check", "expected_moments", "integrate_age", "sample_path",
    "simulate_single", "run_events", "FRAME_LOG_COLUMNS", "FrameRecord", "direct_area",
    "read_frame_log", "records_to_path", "segment_area", "write_frame_log", "simulate_slot",
    "ValidationRow", "validation_grid",
]
