"""Programming-language identification for Stack Overflow style questions.

The package turns a posts dump into a labelled corpus, builds TF-IDF
features from the question prose and its code snippet, trains Naive Bayes,
random-forest and gradient-boosted tree classifiers, evaluates them, and
studies term embeddings of each language.
"""

__version__ = "0.1.0"
