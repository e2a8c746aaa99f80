"""Deterministic text/visual feature space.

Stands in for a learned joint embedding: every tag maps to a reproducible
unit vector, synonym tags share a base vector separated by a bounded
rotation, and visual observations are the text vector rotated by a random
angle drawn once per observation.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

DEFAULT_DIM = 64

# Fixed decoy pool for tag-swap corruption; disjoint from every reference
# scenario tag by construction (checked in tests).
DEFAULT_DECOY_TAGS = (
    "windmill", "lighthouse", "pyramid", "obelisk", "gazebo", "silo",
    "water tower", "drawbridge", "turnstile", "escalator", "carousel",
    "ferris wheel", "totem pole", "sundial", "weather vane", "anvil",
    "telescope", "cannon", "anchor", "buoy", "barrel", "haystack",
    "scarecrow", "beehive", "birdbath", "trellis", "wheelbarrow",
    "sawhorse", "kiln", "loom", "grindstone", "bellows",
)


def canonical_tag(tag):
    """Lowercase, trim, collapse internal whitespace."""
    return re.sub(r"\s+", " ", tag.strip().lower())


def _stable_seed(*parts):
    h = hashlib.sha256("\x1f".join(parts).encode("utf-8")).digest()
    return int.from_bytes(h[:8], "big")


def _hash_unit_vector(key, dim):
    rng = np.random.default_rng(_stable_seed("feature", key))
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _rotate_toward(base, target, angle):
    """Rotate unit vector `base` by `angle` in the plane spanned with `target`."""
    t = target - (target @ base) * base
    n = np.linalg.norm(t)
    if n < 1e-12:
        return base
    return math.cos(angle) * base + math.sin(angle) * (t / n)


@dataclass
class SynonymGroup:
    tags: tuple
    angle: float  # max rotation of any member away from the group base, radians


@dataclass
class Vocabulary:
    """Synonym structure plus the decoy pool used for tag-swap corruption."""

    dim: int = DEFAULT_DIM
    groups: tuple = ()
    decoys: tuple = DEFAULT_DECOY_TAGS

    _group_of: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._group_of = {}
        for g in self.groups:
            for t in g.tags:
                ct = canonical_tag(t)
                if ct in self._group_of:
                    raise ValueError(f"tag {ct!r} appears in more than one synonym group")
                self._group_of[ct] = g

    def group_for(self, tag):
        return self._group_of.get(canonical_tag(tag))

    @classmethod
    def from_dict(cls, doc):
        groups = tuple(
            SynonymGroup(tags=tuple(canonical_tag(t) for t in g["tags"]),
                         angle=float(g["angle"]))
            for g in doc.get("groups", ())
        )
        decoys = tuple(canonical_tag(t) for t in doc.get("decoys", DEFAULT_DECOY_TAGS))
        return cls(dim=int(doc.get("dim", DEFAULT_DIM)), groups=groups, decoys=decoys)


def load_vocabulary(path):
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    return Vocabulary.from_dict(doc)


def embed_text(tag, vocab=None):
    """Deterministic unit feature vector for a text tag.

    Tags in the same synonym group share a base vector; each member is the
    base rotated by its own fixed angle no larger than the group's angle.
    """
    vocab = vocab if vocab is not None else Vocabulary()
    ct = canonical_tag(tag)
    if not ct:
        raise ValueError("cannot embed an empty tag")
    group = vocab.group_for(ct)
    if group is None:
        return _hash_unit_vector(ct, vocab.dim)
    base_key = "|".join(sorted(group.tags))
    base = _hash_unit_vector("group:" + base_key, vocab.dim)
    # direction and fraction of the max angle are both fixed per tag
    axis = _hash_unit_vector("axis:" + ct, vocab.dim)
    frac = _stable_seed("angle", ct) % 2**32 / 2**32
    return _rotate_toward(base, axis, group.angle * frac)


def embed_visual(true_tag, angular_noise_std, vocab, rng):
    """Noisy observation of a tag: the text vector rotated by |N(0, std)|."""
    e = embed_text(true_tag, vocab)
    if angular_noise_std <= 0.0:
        return e.copy()
    angle = abs(rng.normal(0.0, angular_noise_std))
    axis = rng.standard_normal(e.shape[0])
    return _rotate_toward(e, axis, angle)


def cosine_sim(a, b):
    """Cosine similarity clamped to [0, 1]. Inputs must be unit vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    for v in (a, b):
        n = np.linalg.norm(v)
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"feature vector norm {n:.6f} is not 1")
    return float(np.clip(a @ b, 0.0, 1.0))
