"""Complexity assessment for multiword expressions.

Dataset tooling for MWE-annotated complex-phrase data, inter-annotator
agreement, an MLP regressor trained with L-BFGS, and the evaluation
harness around it.
"""

__version__ = "0.1.0"
