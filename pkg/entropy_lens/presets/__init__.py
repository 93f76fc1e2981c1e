"""
Presets package for entropy_lens.
"""

from entropy_lens.presets.dataset_presets import DATASET_PRESETS, PRESET_DESCRIPTIONS

__all__ = [
    'DATASET_PRESETS',
    'PRESET_DESCRIPTIONS'
]
