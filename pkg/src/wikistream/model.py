"""
Domain types shared across the library.

Defines the raw edit event, its per-day aggregation, target label
derivation and the canonical feature catalogue (feature ids, column
order and probability groupings) every other module relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date

PROB_TOL = 1e-6

# Canonical feature columns. Multi-probability features are flattened
# into named sub-components; the order below is the canonical order used
# by every feature matrix in the library.
FEATURE_IDS = (
    "3",    # number of reviews
    "4",    # average review length
    "5",    # number of pages
    "6",    # average revisions per page
    "7",    # revisions per week
    "8",    # pages revised per week
    "9",    # number of reverts
    "10",   # revert frequency
    "11",   # links ratio
    "12",   # repeated links ratio
    "13",   # characters inserted
    "14",   # characters deleted
    "15.damaging_true",
    "15.damaging_false",
    "15.goodfaith_true",
    "15.goodfaith_false",
    "16.A",
    "16.B",
    "16.C",
    "16.D",
    "16.E",
    "17.ok",
    "17.attack",
    "17.spam",
    "17.vandalism",
    "18.B",
    "18.C",
    "18.FA",
    "18.GA",
    "18.start",
    "18.stub",
)

FEATURE_INDEX = {fid: i for i, fid in enumerate(FEATURE_IDS)}

N_FEATURES = len(FEATURE_IDS)

# Probability sub-components that must each sum to one.
PROBABILITY_GROUPS = (
    ("15.damaging_true", "15.damaging_false"),
    ("15.goodfaith_true", "15.goodfaith_false"),
    ("16.A", "16.B", "16.C", "16.D", "16.E"),
    ("17.ok", "17.attack", "17.spam", "17.vandalism"),
    ("18.B", "18.C", "18.FA", "18.GA", "18.start", "18.stub"),
)

JOINT_CLASS_NAMES = {
    (0, 0): "human-benign",
    (0, 1): "human-malign",
    (1, 0): "bot-benign",
    (1, 1): "bot-malign",
}


class ValidationError(ValueError):
    """Raised when a record or argument violates a documented invariant."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if field is not None:
            prefix += f"field '{field}': "
        super().__init__(prefix + message)


def _check_probability_group(values, name, line=None):
    for v in values:
        if not math.isfinite(v) or v < 0.0 or v > 1.0:
            raise ValidationError(
                f"probability {v!r} outside [0, 1]", field=name, line=line
            )
    total = sum(values)
    if abs(total - 1.0) > PROB_TOL:
        raise ValidationError(
            f"probability group sum {total:.8f} != 1", field=name, line=line
        )


def _check_count(value, name, line=None):
    if not math.isfinite(value) or value < 0:
        raise ValidationError(
            f"count {value!r} must be finite and >= 0", field=name, line=line
        )


@dataclass(frozen=True)
class EditEvent:
    """One raw contribution record."""

    contributor_id: str
    is_bot: bool
    page_id: str
    timestamp: date
    review_length: float
    links: float
    repeated_links: float
    chars_inserted: float
    chars_deleted: float
    was_reverted: bool
    damaging_true: float
    damaging_false: float
    goodfaith_true: float
    goodfaith_false: float
    item_a: float
    item_b: float
    item_c: float
    item_d: float
    item_e: float
    art_ok: float
    art_attack: float
    art_spam: float
    art_vandalism: float
    wp10_b: float
    wp10_c: float
    wp10_fa: float
    wp10_ga: float
    wp10_start: float
    wp10_stub: float

    def validate(self, line=None):
        """Check all invariants; raises ValidationError on the first breach."""
        for name in ("review_length", "links", "repeated_links",
                     "chars_inserted", "chars_deleted"):
            _check_count(getattr(self, name), name, line=line)
        _check_probability_group(
            (self.damaging_true, self.damaging_false), "damaging", line=line)
        _check_probability_group(
            (self.goodfaith_true, self.goodfaith_false), "goodfaith", line=line)
        _check_probability_group(
            (self.item_a, self.item_b, self.item_c, self.item_d, self.item_e),
            "item_quality", line=line)
        _check_probability_group(
            (self.art_ok, self.art_attack, self.art_spam, self.art_vandalism),
            "article_quality", line=line)
        _check_probability_group(
            (self.wp10_b, self.wp10_c, self.wp10_fa, self.wp10_ga,
             self.wp10_start, self.wp10_stub), "wp10", line=line)
        return self

    @property
    def day(self):
        return self.timestamp


def derive_contribution_type(ok_probability):
    """Map an OK probability to a contribution label.

    Returns 0 (positive) iff the probability is strictly above 0.5,
    else 1 (negative). The boundary 0.5 maps to negative.
    """
    if not math.isfinite(ok_probability) or not 0.0 <= ok_probability <= 1.0:
        raise ValidationError(
            f"value {ok_probability!r} outside [0, 1]", field="ok_probability")
    return 0 if ok_probability > 0.5 else 1


def derive_user_type(is_bot):
    """Map the bot flag to a user label: 0 for human, 1 for bot."""
    return 1 if is_bot else 0


def joint_class(user_type, contribution_type):
    """Cross product of the two binary labels, as a readable name."""
    return JOINT_CLASS_NAMES[(user_type, contribution_type)]


@dataclass(frozen=True)
class TargetLabels:
    """Both binary targets plus their joint class name."""

    user_type: int
    contribution_type: int

    @property
    def joint_class(self):
        return joint_class(self.user_type, self.contribution_type)


@dataclass(frozen=True)
class DailyAggregate:
    """Per-contributor-per-day aggregation of the feature catalogue.

    ``values`` holds all canonical feature columns in FEATURE_IDS order.
    """

    contributor_id: str
    day: date
    is_bot: bool
    values: tuple
    synthetic: bool = False

    def __post_init__(self):
        if len(self.values) != N_FEATURES:
            raise ValidationError(
                f"expected {N_FEATURES} feature values, got {len(self.values)}")
        if self.value("3") < 1:
            raise ValidationError(
                "aggregate must cover at least one review", field="3")

    def value(self, feature_id):
        return self.values[FEATURE_INDEX[feature_id]]

    @property
    def user_type(self):
        return derive_user_type(self.is_bot)

    @property
    def contribution_type(self):
        return derive_contribution_type(self.value("17.ok"))

    @property
    def labels(self):
        return TargetLabels(self.user_type, self.contribution_type)


@dataclass(frozen=True)
class FeatureVector:
    """Ordered feature values with their parallel feature identifiers."""

    feature_ids: tuple
    values: tuple

    def __post_init__(self):
        if len(self.feature_ids) != len(self.values):
            raise ValidationError("feature id / value length mismatch")
        if len(set(self.feature_ids)) != len(self.feature_ids):
            raise ValidationError("duplicate feature identifiers")
        for fid, v in zip(self.feature_ids, self.values):
            if fid not in FEATURE_INDEX:
                raise ValidationError(f"unknown feature id {fid!r}")
            if not math.isfinite(v):
                raise ValidationError(f"non-finite value for {fid}")

    def __len__(self):
        return len(self.values)

    def value(self, feature_id):
        return self.values[self.feature_ids.index(feature_id)]

    def subset(self, feature_ids):
        """Project onto the given ids, keeping their given order."""
        return FeatureVector(
            tuple(feature_ids),
            tuple(self.value(fid) for fid in feature_ids),
        )
