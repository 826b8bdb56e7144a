"""visprompt: sensor time-series to visual prompts for multimodal LLMs.

Pipeline pieces: the canonical signal model (:mod:`visprompt.signal_core`),
DSP backends (:mod:`visprompt.dsp`), deterministic plot rendering
(:mod:`visprompt.render`), prompt assembly and token accounting
(:mod:`visprompt.prompt_builder`), the two-stage visualization generator
(:mod:`visprompt.visgen`), a record/replay chat client
(:mod:`visprompt.mllm_client`), and the evaluation harness
(:mod:`visprompt.eval_harness`).
"""

__version__ = "0.1.0"
