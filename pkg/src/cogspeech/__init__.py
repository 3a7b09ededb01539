"""Speech-based cognitive impairment detection pipeline.

Parses CHAT transcripts, constituency trees and audio into a canonical
509-feature representation, and runs the companion classical-ML,
cross-validation and statistical-analysis stack on top of it.
"""

__version__ = "0.1.0"
