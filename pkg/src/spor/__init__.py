"""Compositional-generalization evaluation suites for data-to-text corpora.

Four aspects are covered: systematicity (unseen unit combinations),
productivity (more units per input than seen in training), order invariance
(permutation-stable fidelity and ordering), and rule learnability (copy-rule
application on hidden entities and values).
"""

__version__ = "0.1.0"
