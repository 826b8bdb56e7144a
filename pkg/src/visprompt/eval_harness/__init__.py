"""Dataset registry, synthetic generators, motivation study, and the eval loop."""

from .motivation import (
    MotivationRow,
    build_mean_prompt,
    build_wave_prompt,
    plot_motivation,
    run_motivation_study,
)
from .registry import DatasetConfig, get_dataset, registry
from .runner import (
    EvalConfig,
    EvalReport,
    PerSample,
    report_to_json,
    report_to_markdown,
    run_eval,
    sample_eval_set,
    write_report,
)
from .synthetic import (
    WaveTask,
    fixture_window,
    gen_wave,
    oracle_mean,
    oracle_wave_kind,
    synth_ecg,
    synth_eda,
    synth_emg_burst,
    synth_eog,
    synth_ppg,
    synth_window_series,
    synthetic_pool,
)

__all__ = [
    "DatasetConfig",
    "EvalConfig",
    "EvalReport",
    "MotivationRow",
    "PerSample",
    "WaveTask",
    "build_mean_prompt",
    "build_wave_prompt",
    "fixture_window",
    "gen_wave",
    "get_dataset",
    "oracle_mean",
    "oracle_wave_kind",
    "plot_motivation",
    "registry",
    "report_to_json",
    "report_to_markdown",
    "run_eval",
    "run_motivation_study",
    "sample_eval_set",
    "synth_ecg",
    "synth_eda",
    "synth_emg_burst",
    "synth_eog",
    "synth_ppg",
    "synth_window_series",
    "synthetic_pool",
    "write_report",
]
