"""Benchmark dataset registry: per-task rates, windows, channels, labels."""

from __future__ import annotations

from dataclasses import dataclass

from ..prompt_builder import TaskSpec
from ..signal_core import Modality


@dataclass(frozen=True)
class DatasetConfig:
    id: str
    modality: Modality
    sampling_rate_hz: float
    window_s: float
    channels: int
    channel_names: tuple[str, ...]
    label_set: tuple[str, ...]
    test_per_class: int
    task_description: str
    data_description: str

    def __post_init__(self):
        object.__setattr__(self, "label_set", tuple(self.label_set))
        object.__setattr__(self, "channel_names", tuple(self.channel_names))
        if self.window_s * self.sampling_rate_hz < 1:
            raise ValueError("window must contain at least one sample")
        if self.test_per_class < 1:
            raise ValueError("test_per_class must be >= 1")
        if len(self.channel_names) != self.channels:
            raise ValueError("channel_names must match channel count")

    @property
    def window_samples(self) -> int:
        return int(round(self.window_s * self.sampling_rate_hz))

    def task_spec(self) -> TaskSpec:
        return TaskSpec(
            task_description=self.task_description,
            data_description=self.data_description,
            label_set=self.label_set,
        )


_XYZ = ("x", "y", "z")

_PTBXL_CONDITIONS = {
    "cd": "conduction disturbance",
    "mi": "myocardial infarction",
    "hyp": "hypertrophy",
    "sttc": "st/t change",
}


def _ptbxl(kind: str) -> DatasetConfig:
    condition = _PTBXL_CONDITIONS[kind]
    return DatasetConfig(
        id=f"ptbxl_{kind}",
        modality=Modality.ECG,
        sampling_rate_hz=100.0,
        window_s=10.0,
        channels=1,
        channel_names=("lead_ii",),
        label_set=("normal", condition),
        test_per_class=30,
        task_description=f"Decide whether the ECG recording shows {condition} or is normal.",
        data_description=(
            "Single-lead (lead II) clinical ECG sampled at 100 Hz in 10-second records."
        ),
    )


def registry() -> list[DatasetConfig]:
    """The nine benchmark task configurations."""
    return [
        DatasetConfig(
            id="hhar",
            modality=Modality.ACCELEROMETER,
            sampling_rate_hz=100.0,
            window_s=5.0,
            channels=3,
            channel_names=_XYZ,
            label_set=("sit", "stand", "walk", "bike", "upstairs", "downstairs"),
            test_per_class=30,
            task_description="Classify which basic activity the person is performing.",
            data_description=(
                "Three-axis smartwatch accelerometer sampled at 100 Hz in 5-second windows."
            ),
        ),
        DatasetConfig(
            id="utd_mhad",
            modality=Modality.ACCELEROMETER,
            sampling_rate_hz=50.0,
            window_s=3.0,
            channels=3,
            channel_names=_XYZ,
            label_set=(
                "swipe left", "swipe right", "wave", "clap", "throw", "arms cross",
                "basketball shoot", "draw x", "draw a circle (clockwise)",
                "draw a circle (counter-clockwise)", "draw a triangle", "bowling",
                "boxing", "baseball swing", "tennis swing", "arm curl", "tennis serve",
                "push", "knock", "catch", "pickup and throw",
            ),
            test_per_class=10,
            task_description="Classify which arm gesture or activity the person performed.",
            data_description=(
                "Three-axis accelerometer on the right wrist sampled at 50 Hz in "
                "3-second windows."
            ),
        ),
        DatasetConfig(
            id="swim",
            modality=Modality.ACCELEROMETER,
            sampling_rate_hz=30.0,
            window_s=3.0,
            channels=3,
            channel_names=_XYZ,
            label_set=("backstroke", "breaststroke", "butterfly", "freestyle", "stationary"),
            test_per_class=30,
            task_description="Classify which swimming style the swimmer is performing.",
            data_description=(
                "Three-axis wrist-worn accelerometer sampled at 30 Hz in 3-second windows."
            ),
        ),
        _ptbxl("cd"),
        _ptbxl("mi"),
        _ptbxl("hyp"),
        _ptbxl("sttc"),
        DatasetConfig(
            id="emg_gesture",
            modality=Modality.EMG,
            sampling_rate_hz=2000.0,
            window_s=0.2,
            channels=4,
            channel_names=("ch1", "ch2", "ch3", "ch4"),
            label_set=(
                "rest", "extension", "flexion", "ulnar deviation", "radial deviation",
                "grip", "abduction of fingers", "adduction of fingers", "supination",
                "pronation",
            ),
            test_per_class=30,
            task_description="Classify which hand gesture the person is making.",
            data_description=(
                "Four forearm surface EMG channels sampled at 2000 Hz in 0.2-second windows."
            ),
        ),
        DatasetConfig(
            id="wesad",
            modality=Modality.RESPIRATION,
            sampling_rate_hz=700.0,
            window_s=10.0,
            channels=1,
            channel_names=("respiration",),
            label_set=("baseline", "stress", "amusement"),
            test_per_class=30,
            task_description="Classify the person's affective state from their breathing.",
            data_description=(
                "Chest-worn respiration sensor sampled at 700 Hz in 10-second windows."
            ),
        ),
    ]


def get_dataset(dataset_id: str) -> DatasetConfig:
    for cfg in registry():
        if cfg.id == dataset_id:
            return cfg
    valid = ", ".join(c.id for c in registry())
    raise KeyError(f"unknown dataset {dataset_id!r}; valid ids: {valid}")
