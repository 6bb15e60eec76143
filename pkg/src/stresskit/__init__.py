"""stresskit: stress-classification pipeline toolkit.

Dataset handling, physiological signal features, SMOTE balancing, the hybrid
correlation-filter + recursive-elimination feature selector, from-scratch
classifiers, grid-search evaluation, and an orchestrating CLI.
"""

__version__ = "0.1.0"
