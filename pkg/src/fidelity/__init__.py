"""Toolkit for diagnosing and repairing gender erasure in English-to-Hindi
translation: benchmark synthesis, a rule-based preservation classifier,
inference-time rerankers, evaluation metrics, and a blinded human-eval
protocol with its annotation service.
"""

__version__ = "0.1.0"
