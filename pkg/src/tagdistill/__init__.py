"""tagdistill: distill LLM-teacher annotations into compact text classifiers.

Subpackages cover the whole workflow: scenario configs, corpus and split
management, teacher prompting/parsing, the native student classifier, the
evaluation harness, the expert review service, and the CLI orchestration.
"""

__version__ = "0.1.0"
