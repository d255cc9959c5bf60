"""Deterministic, splittable random streams.

A stream is identified by a 64-bit seed plus a path of labels. Deriving a
child stream appends a label to the path; the underlying bit generator is a
pure function of (seed, path), so two streams with the same identity always
produce the same draws, and streams with different paths are statistically
independent. Derivation is keyed, not call-order dependent, which keeps
parallel schedules reproducible.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

Label = int | str

_INT_TAG = 0
_STR_TAG = 1


def _label_words(label: Label) -> tuple[int, ...]:
    """Encode a label as a prefix-free sequence of uint32 words."""
    if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
        value = int(label)
        if 0 <= value < 2**32:
            return (_INT_TAG, value)
        # wide or negative integers go through the hash path
        label = str(value)
    if not isinstance(label, str):
        raise TypeError(f"stream labels must be int or str, got {type(label)!r}")
    digest = hashlib.blake2s(label.encode("utf-8"), digest_size=8).digest()
    return (
        _STR_TAG,
        int.from_bytes(digest[:4], "little"),
        int.from_bytes(digest[4:], "little"),
    )


@dataclass(frozen=True, eq=True)
class RandomStream:
    """Immutable handle for a reproducible random substream.

    The numpy Generator behind a stream is created lazily and advances as
    samples are drawn, but the starting state depends only on (seed, path).
    """

    seed: int
    path: tuple[Label, ...] = ()
    _gen: np.random.Generator | None = field(
        default=None, compare=False, repr=False
    )

    def derive(self, *labels: Label) -> "RandomStream":
        """Child stream keyed by the given labels."""
        if not labels:
            raise ValueError("derive requires at least one label")
        return RandomStream(self.seed, self.path + tuple(labels))

    @property
    def generator(self) -> np.random.Generator:
        """The (stateful) numpy Generator for this stream."""
        if self._gen is None:
            words: list[int] = []
            for label in self.path:
                words.extend(_label_words(label))
            seq = np.random.SeedSequence(self.seed, spawn_key=tuple(words))
            object.__setattr__(self, "_gen", np.random.Generator(np.random.PCG64(seq)))
        return self._gen


def derive_stream(parent: RandomStream, label: Label) -> RandomStream:
    """Functional alias for RandomStream.derive."""
    return parent.derive(label)


def as_generator(rng: RandomStream | np.random.Generator) -> np.random.Generator:
    """Accept either a stream or a raw Generator; return the Generator."""
    if isinstance(rng, RandomStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RandomStream or numpy Generator, got {type(rng)!r}")
