"""Transformer fine-tuning harness for transcript-level AD classification.

Consumes participant-only transcript text (exported by the feature
pipeline's extract sidecar) as an ``id,text,label`` CSV and emits report
and prediction CSVs in the same schema as the feature pipeline's
evaluation outputs.
"""

__version__ = "0.1.0"
