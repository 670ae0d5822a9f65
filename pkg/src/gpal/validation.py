"""Input checks shared by the estimator wrappers."""

from __future__ import annotations

from collections.abc import Sequence

from sklearn.exceptions import NotFittedError


def check_texts(X, name: str = "X") -> list[str]:
    """A non-empty sequence of non-empty, whitespace-tokenized strings."""
    if isinstance(X, str) or not isinstance(X, Sequence) and not hasattr(X, "__iter__"):
        raise TypeError(f"{name} must be a sequence of strings, got {type(X).__name__}")
    out = list(X)
    if not out:
        raise ValueError(f"{name} is empty")
    for i, s in enumerate(out):
        if not isinstance(s, str):
            raise TypeError(f"{name}[{i}] is {type(s).__name__}, expected str")
        if not s.split():
            raise ValueError(f"{name}[{i}] is blank")
    return out


def check_parallel(X, y) -> tuple[list[str], list[str]]:
    X = check_texts(X, "X")
    y = check_texts(y, "y")
    if len(X) != len(y):
        raise ValueError(f"X and y differ in length: {len(X)} != {len(y)}")
    return X, y


def check_fitted(estimator, attributes: Sequence[str]) -> None:
    missing = [a for a in attributes if not hasattr(estimator, a)]
    if missing:
        raise NotFittedError(f"{type(estimator).__name__} is not fitted yet; call fit first")


def check_in_vocabulary(texts: list[str], vocab, name: str = "X") -> None:
    for i, s in enumerate(texts):
        unknown = [t for t in s.split() if t not in vocab.stoi]
        if unknown:
            raise ValueError(f"{name}[{i}] has out-of-vocabulary tokens {unknown[:3]}")
