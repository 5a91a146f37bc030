"""Rule learning: generalize explained demonstrations into a reusable program.

The explanation stage leaves us with per-object action assignments. Here
those observations become a program of rules, one per operation kind. Each
rule carries a condition predictor (does this operation apply to a given
object?) and one parameter predictor per slot (with what arguments?). Both
kinds of predictor consume the holographic object vectors, so a single
weight vector or matrix is enough; no deep architecture is involved.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Union

import numpy as np
from numpy.typing import NDArray

from . import dsl, ssp, vsa
from .abduction import AbductionResult, TAU_SAME
from .dsl import Amount, Centre, Colour, Direction, OperationKind, ParamValue, Shape
from .perception import ObjectRepr
from .ssp import SspEncoder
from .vsa import HyperVector, Vocabulary, VsaConfig

PROPERTY_ORDER = ("colour", "centre", "shape")

# Full-batch gradient descent budget, shared by both predictor families.
LEARNING_RATE = 0.05
MAX_EPOCHS = 500
LOSS_FLOOR = 1e-4
INITIAL_STEEPNESS = 5.0
DECODE_FLOOR = 0.3

PROGRAM_FORMAT = "hologrid-program"
PROGRAM_VERSION = 1

PropertySubset = tuple[str, ...]


class InductionError(ValueError):
    """Raised when rule learning is invoked on unusable inputs."""


# --------------------------------------------------------------------------
# property subsets


def canonical_subset(names) -> PropertySubset:
    subset = tuple(p for p in PROPERTY_ORDER if p in set(names))
    if not subset or len(subset) != len(set(names)):
        raise InductionError(f"not a property subset: {names!r}")
    return subset


def property_vector(obj: ObjectRepr, name: str) -> HyperVector:
    if name == "colour":
        return obj.colour_vec
    if name == "centre":
        return obj.centre_vec
    if name == "shape":
        return obj.shape_vec
    raise KeyError(name)


def subset_vector(obj: ObjectRepr, subset: PropertySubset) -> HyperVector:
    """Normalized bundle of the selected property vectors."""
    total = property_vector(obj, subset[0]).copy()
    for name in subset[1:]:
        total += property_vector(obj, name)
    return vsa.normalize(total)


def subset_matrix(objects, subset: PropertySubset) -> NDArray[np.float64]:
    return np.stack([subset_vector(o, subset) for o in objects])


def property_scores(objects, labels) -> NDArray[np.float64]:
    """Relevance of each property for separating the given grouping.

    For property p: mean pairwise similarity among objects treated alike,
    minus-squared against the mean among objects treated differently.
    Missing pair classes contribute zero.
    """
    n = len(objects)
    idx_a, idx_b = np.triu_indices(n, k=1)
    same = np.array([labels[i] == labels[j] for i, j in zip(idx_a, idx_b)], dtype=bool)
    scores = np.zeros(len(PROPERTY_ORDER))
    for k, name in enumerate(PROPERTY_ORDER):
        mat = np.stack([property_vector(o, name) for o in objects]) if n else np.zeros((0, 1))
        sims = (mat @ mat.T)[idx_a, idx_b]
        s_same = float(sims[same].mean()) if same.any() else 0.0
        s_diff = float(sims[~same].mean()) if (~same).any() else 0.0
        scores[k] = s_same**2 - s_diff**2
    return scores


def property_likelihoods(objects, labels) -> NDArray[np.float64]:
    scores = property_scores(objects, labels)
    shifted = np.exp(scores - scores.max())
    return shifted / shifted.sum()


def rank_properties(objects, labels) -> list[PropertySubset]:
    """Candidate property subsets, most promising first.

    Singletons in descending score order, then pairs by score sum, then the
    full triple; ties keep the canonical colour/centre/shape order.
    """
    scores = {name: s for name, s in zip(PROPERTY_ORDER, property_scores(objects, labels))}
    singles = sorted(PROPERTY_ORDER, key=lambda p: (-scores[p], PROPERTY_ORDER.index(p)))
    ranked: list[PropertySubset] = [(p,) for p in singles]
    pairs = sorted(
        combinations(PROPERTY_ORDER, 2),
        key=lambda pr: (-(scores[pr[0]] + scores[pr[1]]), pr),
    )
    ranked.extend(canonical_subset(pr) for pr in pairs)
    ranked.append(PROPERTY_ORDER)
    return ranked


# --------------------------------------------------------------------------
# operation predictor


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def operation_loss(weights, steepness, threshold, inputs, targets) -> float:
    """Binary cross-entropy of sigmoid(steepness * (inputs @ weights - threshold))."""
    z = steepness * (inputs @ weights - threshold)
    # log(1 + e^-|z|) form stays finite for any z.
    per_sample = np.maximum(z, 0.0) - z * targets + np.log1p(np.exp(-np.abs(z)))
    return float(per_sample.mean())


def operation_loss_grad(weights, steepness, threshold, inputs, targets):
    """Loss plus exact gradients w.r.t. weights, steepness, and threshold."""
    margins = inputs @ weights - threshold
    z = steepness * margins
    probs = _sigmoid(z)
    resid = (probs - targets) / len(targets)
    loss = operation_loss(weights, steepness, threshold, inputs, targets)
    grad_w = steepness * (inputs.T @ resid)
    grad_steepness = float(resid @ margins)
    grad_threshold = float(-steepness * resid.sum())
    return loss, grad_w, grad_steepness, grad_threshold


@dataclass
class OperationPredictor:
    """Condition side of a rule.

    ``weights is None`` marks the vacuous predictor: the operation applied
    to every observed object, so the condition always holds. Otherwise the
    weight vector is a unit-length prototype and the output is
    sigmoid(steepness * (similarity - threshold)).
    """

    subset: PropertySubset
    weights: Optional[HyperVector] = None
    steepness: float = INITIAL_STEEPNESS
    threshold: float = 0.0

    @property
    def vacuous(self) -> bool:
        return self.weights is None

    def probability(self, obj: ObjectRepr) -> float:
        if self.weights is None:
            return 1.0
        sim = float(self.weights @ subset_vector(obj, self.subset))
        return float(_sigmoid(self.steepness * (sim - self.threshold)))


def train_operation_predictor(positives, negatives, subset: PropertySubset) -> OperationPredictor:
    """Fit the condition predictor; no negatives means a vacuous condition."""
    if not positives:
        raise InductionError("operation predictor needs at least one positive example")
    subset = canonical_subset(subset)
    if not negatives:
        return OperationPredictor(subset=subset)
    pos = subset_matrix(positives, subset)
    neg = subset_matrix(negatives, subset)
    diff = pos.sum(axis=0) - neg.sum(axis=0)
    if np.linalg.norm(diff) < 1e-12:
        # Both classes bundle to the same point under this subset; start from
        # the positive prototype and let the threshold carry the fit.
        diff = pos.sum(axis=0)
    weights = vsa.normalize(diff)
    threshold = float((pos @ weights).mean() + (neg @ weights).mean()) / 2.0
    steepness = INITIAL_STEEPNESS
    inputs = np.vstack([pos, neg])
    targets = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
    for _ in range(MAX_EPOCHS):
        loss, grad_w, grad_k, grad_b = operation_loss_grad(
            weights, steepness, threshold, inputs, targets
        )
        if loss < LOSS_FLOOR:
            break
        weights = vsa.normalize(weights - LEARNING_RATE * grad_w)
        steepness = max(steepness - LEARNING_RATE * grad_k, 1e-3)
        threshold = threshold - LEARNING_RATE * grad_b
    return OperationPredictor(subset, weights, float(steepness), float(threshold))


# --------------------------------------------------------------------------
# parameter encoding / decoding


@dataclass
class ParamCodec:
    """Translates slot values to and from hypervectors."""

    encoder: SspEncoder
    palette: Vocabulary
    directions: Vocabulary
    colours: Vocabulary

    def encode(self, slot: str, value: ParamValue) -> HyperVector:
        if slot == "colour":
            return self.palette[f"colour:{value.value}"]
        if slot == "centre":
            return self.encoder.encode((value.x, value.y))
        if slot == "amount":
            return self.encoder.encode((value.dx, value.dy))
        if slot == "direction":
            return self.directions[value.value]
        if slot == "shape":
            return shape_bundle(value.offsets, self.encoder)
        raise KeyError(slot)

    def decode(self, slot: str, vector: HyperVector, dims, shape_values=None):
        """Nearest valid slot value, or None when the signal is too weak.

        ``dims`` bounds the lattice for the continuous slots. Discrete slots
        go through vocabulary cleanup with a confidence floor.
        """
        if slot in ("centre", "amount"):
            rows, cols = dims
            if slot == "centre":
                region = ((-(cols - 1) / 2, (cols - 1) / 2), (-(rows - 1) / 2, (rows - 1) / 2))
            else:
                region = ((-(cols - 1), cols - 1), (-(rows - 1), rows - 1))
            (x, y), _ = ssp.decode(self.encoder, vector, region, step=0.5)
            return Centre(x, y) if slot == "centre" else Amount(x, y)
        try:
            unit = vsa.normalize(vector)
        except ValueError:
            return None
        if slot == "colour":
            name, sim = self.colours.cleanup(unit)
            return Colour(int(name.split(":")[1])) if sim >= DECODE_FLOOR else None
        if slot == "direction":
            name, sim = self.directions.cleanup(unit)
            return Direction(name) if sim >= DECODE_FLOOR else None
        if slot == "shape":
            if not shape_values:
                return None
            vocab = Vocabulary(self.encoder.config)
            for i, shape in enumerate(shape_values):
                vocab.add_vector(f"shape:{i}", shape_bundle(shape.offsets, self.encoder))
            name, sim = vocab.cleanup(unit)
            return shape_values[int(name.split(":")[1])] if sim >= DECODE_FLOOR else None
        raise KeyError(slot)


def shape_bundle(offsets, encoder: SspEncoder) -> HyperVector:
    """Same construction as an object's shape vector, from bare offsets."""
    pts = np.array([(dc, -dr) for dr, dc in sorted(offsets)])
    return vsa.normalize(encoder.encode_many(pts).sum(axis=0))


def direction_vocabulary(config: VsaConfig) -> Vocabulary:
    vocab = Vocabulary(config)
    for d in Direction:
        vocab.add_vector(d.value, vsa.random_symbol(config, f"direction:{d.value}"))
    return vocab


def make_codec(encoder: SspEncoder, palette: Vocabulary) -> ParamCodec:
    colours = Vocabulary(encoder.config)
    for c in range(1, 10):
        colours.add_vector(f"colour:{c}", palette[f"colour:{c}"])
    return ParamCodec(encoder, palette, direction_vocabulary(encoder.config), colours)


# --------------------------------------------------------------------------
# parameter predictors


@dataclass
class ConstantParameter:
    """Every observation used the same value; always predict it."""

    value: ParamValue

    def predict(self, obj: ObjectRepr, dims, codec: ParamCodec) -> Optional[ParamValue]:
        return self.value


@dataclass
class CopyParameter:
    """The value always matched one of the object's own properties."""

    prop: str

    def predict(self, obj: ObjectRepr, dims, codec: ParamCodec) -> Optional[ParamValue]:
        if self.prop == "colour":
            return Colour(obj.mask.colour)
        if self.prop == "centre":
            return Centre(*obj.mask.centre_point())
        return Shape(obj.mask.offsets())


@dataclass
class LinearParameter:
    """Learned linear map from a property bundle to the slot-value vector.

    The matrix is held in factored form: a circulant core (binding with
    ``base``) plus a rank-limited correction spanned by the training inputs.
    That keeps memory at O(m * N) instead of N * N and makes training a
    small m-dimensional iteration, with identical results to the dense map.
    """

    slot: str
    subset: PropertySubset
    base: HyperVector
    inputs: NDArray[np.float64]  # (m, N), training bundles as rows
    correction: NDArray[np.float64]  # (m, N); W = circulant(base) + correction.T @ inputs
    shape_values: Optional[tuple[Shape, ...]] = None

    def apply(self, x: HyperVector) -> HyperVector:
        return vsa.bind(self.base, x) + self.correction.T @ (self.inputs @ x)

    def predict(self, obj: ObjectRepr, dims, codec: ParamCodec) -> Optional[ParamValue]:
        raw = self.apply(subset_vector(obj, self.subset))
        return codec.decode(self.slot, raw, dims, self.shape_values)


ParameterPredictor = Union[ConstantParameter, CopyParameter, LinearParameter]


def parameter_loss(weights, inputs, targets) -> float:
    """Mean squared reconstruction error of a dense map; inputs/targets as rows."""
    resid = inputs @ weights.T - targets
    return float(np.mean(np.sum(resid * resid, axis=1)))


def parameter_loss_grad(weights, inputs, targets):
    resid = inputs @ weights.T - targets
    loss = float(np.mean(np.sum(resid * resid, axis=1)))
    grad = (2.0 / len(inputs)) * resid.T @ inputs
    return loss, grad


def circulant_matrix(vec: HyperVector) -> NDArray[np.float64]:
    """Dense matrix whose product equals binding with ``vec``; test bridge."""
    n = vec.shape[0]
    i, j = np.indices((n, n))
    return vec[(i - j) % n]


def _train_linear_factors(inputs, targets):
    """Gradient descent on the factored map; returns (base, correction).

    With W = W0 + C^T X the residual is R = X W^T... kept concretely: row i of
    the residual is bind(base, x_i) + (G C)_i - y_i with G = X X^T, so the
    whole loop runs in (m, N) arrays.
    """
    m = len(inputs)
    base = np.mean([vsa.unbind(y, x) for x, y in zip(inputs, targets)], axis=0)
    bound = np.stack([vsa.bind(base, x) for x in inputs])
    gram = inputs @ inputs.T
    correction = np.zeros_like(inputs)
    for _ in range(MAX_EPOCHS):
        resid = bound + gram @ correction - targets
        loss = float(np.mean(np.sum(resid * resid, axis=1)))
        if loss < LOSS_FLOOR:
            break
        correction = correction - (2.0 * LEARNING_RATE / m) * resid
    return base, correction


def _copy_source_property(slot: str) -> Optional[str]:
    return slot if slot in PROPERTY_ORDER else None


def _shortcut_predictor(pairs, slot: str, codec: ParamCodec) -> Optional[ParameterPredictor]:
    """Constant when every value matches, copy when values track a property."""
    values = [v for _, v in pairs]
    if all(v == values[0] for v in values):
        return ConstantParameter(values[0])
    prop = _copy_source_property(slot)
    if prop is not None:
        sims = [
            float(codec.encode(slot, v) @ property_vector(obj, prop)) for obj, v in pairs
        ]
        if all(s >= TAU_SAME for s in sims):
            return CopyParameter(prop)
    return None


def train_parameter_predictor(pairs, slot: str, subset: PropertySubset, codec: ParamCodec) -> ParameterPredictor:
    """Shortcuts first (constant value, copied property), then a linear map."""
    if not pairs:
        raise InductionError("parameter predictor needs at least one example")
    values = [v for _, v in pairs]
    shortcut = _shortcut_predictor(pairs, slot, codec)
    if shortcut is not None:
        return shortcut
    subset = canonical_subset(subset)
    inputs = subset_matrix([obj for obj, _ in pairs], subset)
    targets = np.stack([codec.encode(slot, v) for _, v in pairs])
    base, correction = _train_linear_factors(inputs, targets)
    shape_values = None
    if slot == "shape":
        seen: list[Shape] = []
        for v in values:
            if v not in seen:
                seen.append(v)
        shape_values = tuple(seen)
    return LinearParameter(slot, subset, base, inputs, correction, shape_values)


# --------------------------------------------------------------------------
# programs


@dataclass
class Rule:
    kind: OperationKind
    condition: OperationPredictor
    parameters: dict[str, ParameterPredictor]


@dataclass
class Program:
    rules: tuple[Rule, ...]

    def __len__(self) -> int:
        return len(self.rules)


@dataclass
class _RuleObservations:
    """Everything rule learning needs about one operation kind."""

    kind: OperationKind
    objects: list[ObjectRepr]  # all demo input objects, flattened
    demo_of: list[int]
    labels: NDArray[np.bool_]  # was this object subject to the operation?
    pairs_by_slot: dict[str, list[tuple[int, ParamValue]]]  # object index -> value
    out_dims: dict[int, tuple[int, int]]

    def split(self, held_out: int):
        train_idx = [i for i, d in enumerate(self.demo_of) if d != held_out]
        test_idx = [i for i, d in enumerate(self.demo_of) if d == held_out]
        return train_idx, test_idx


def _train_condition(obs: _RuleObservations, indices, subset: PropertySubset) -> OperationPredictor:
    positives = [obs.objects[i] for i in indices if obs.labels[i]]
    negatives = [obs.objects[i] for i in indices if not obs.labels[i]]
    return train_operation_predictor(positives, negatives, subset)


def _condition_accuracy(pred: OperationPredictor, obs: _RuleObservations, indices) -> float:
    hits = [
        (pred.probability(obs.objects[i]) >= 0.5) == bool(obs.labels[i]) for i in indices
    ]
    return float(np.mean(hits))


def _fold_score(obs: _RuleObservations, subset, held_out, codec: ParamCodec) -> Optional[float]:
    train_idx, test_idx = obs.split(held_out)
    if not test_idx or not any(obs.labels[i] for i in train_idx):
        return None
    components = []
    condition = _train_condition(obs, train_idx, subset)
    components.append(_condition_accuracy(condition, obs, test_idx))
    dims = obs.out_dims[held_out]
    slot_scores = []
    for slot, pairs in obs.pairs_by_slot.items():
        train_pairs = [(obs.objects[i], v) for i, v in pairs if obs.demo_of[i] != held_out]
        test_pairs = [(obs.objects[i], v) for i, v in pairs if obs.demo_of[i] == held_out]
        if not train_pairs or not test_pairs:
            continue
        predictor = train_parameter_predictor(train_pairs, slot, subset, codec)
        slot_scores.append(
            float(np.mean([predictor.predict(o, dims, codec) == v for o, v in test_pairs]))
        )
    if slot_scores:
        components.append(float(np.mean(slot_scores)))
    # Equal-weight average of condition accuracy and parameter accuracy.
    return float(np.mean(components))


def cross_validate(obs: _RuleObservations, subsets, codec: ParamCodec) -> PropertySubset:
    """Leave-one-demonstration-out selection among candidate subsets.

    Single-demonstration tasks fall back to the top-ranked candidate; ties
    keep the heuristic ranking order.
    """
    demos = sorted(set(obs.demo_of))
    if len(demos) < 2:
        return subsets[0]
    best_subset, best_score = subsets[0], -1.0
    for subset in subsets:
        fold_scores = [
            s for d in demos if (s := _fold_score(obs, subset, d, codec)) is not None
        ]
        score = float(np.mean(fold_scores)) if fold_scores else -1.0
        if score > best_score:
            best_subset, best_score = subset, score
    return best_subset


def _needs_subset_search(obs: _RuleObservations, codec: ParamCodec) -> bool:
    """True when some predictor will actually train on property bundles."""
    if not obs.labels.all():
        return True
    for slot, pairs in obs.pairs_by_slot.items():
        sample = [(obs.objects[i], v) for i, v in pairs]
        if _shortcut_predictor(sample, slot, codec) is None:
            return True
    return False


def induce(result: AbductionResult, encoder: SspEncoder, palette: Vocabulary) -> Program:
    """Turn a successful explanation into a program of per-operation rules."""
    if not result.ok:
        raise InductionError("cannot induce rules from a failed explanation")
    codec = make_codec(encoder, palette)
    objects: list[ObjectRepr] = []
    demo_of: list[int] = []
    index_of: dict[tuple[int, int], int] = {}
    for d, scene in enumerate(result.input_scenes):
        for i, obj in enumerate(scene.objects):
            index_of[(d, i)] = len(objects)
            objects.append(obj)
            demo_of.append(d)
    out_dims = {d: tuple(scene.grid.shape) for d, scene in enumerate(result.output_scenes)}

    kinds: list[OperationKind] = []
    for action in result.action_set:
        if action.kind not in kinds:
            kinds.append(action.kind)

    rules = []
    for kind in kinds:
        assigned = [a for a in result.assignments if a.action.kind is kind]
        if not assigned:
            continue
        labels = np.zeros(len(objects), dtype=bool)
        for a in assigned:
            labels[index_of[(a.demo_index, a.input_index)]] = True
        pairs_by_slot = {
            slot: [
                (index_of[(a.demo_index, a.input_index)], a.action.param(slot))
                for a in assigned
            ]
            for slot in dsl.PARAM_SLOTS[kind]
        }
        obs = _RuleObservations(kind, objects, demo_of, labels, pairs_by_slot, out_dims)
        subsets = rank_properties(objects, [bool(x) for x in labels])
        subset = (
            cross_validate(obs, subsets, codec)
            if _needs_subset_search(obs, codec)
            else subsets[0]
        )
        all_idx = list(range(len(objects)))
        try:
            condition = _train_condition(obs, all_idx, subset)
        except ValueError:
            condition = OperationPredictor(subset=canonical_subset(subset))
        parameters: dict[str, ParameterPredictor] = {}
        for slot, pairs in pairs_by_slot.items():
            full = [(objects[i], v) for i, v in pairs]
            try:
                parameters[slot] = train_parameter_predictor(full, slot, subset, codec)
            except ValueError:
                parameters[slot] = ConstantParameter(full[0][1])
        rules.append(Rule(kind, condition, parameters))
    return Program(tuple(rules))


def training_fit(result: AbductionResult, program: Program, encoder: SspEncoder, palette: Vocabulary) -> bool:
    """Whether the learned rules reproduce every training observation.

    Checks each trained condition against every object's label and each
    parameter prediction against its assigned value. A true fit says the
    rules agree with the explanation, not that rendering a demo input
    reproduces the demo output; replay is the end-to-end check.
    """
    if not result.ok:
        return False
    codec = make_codec(encoder, palette)
    objects: list[ObjectRepr] = []
    demo_of: list[int] = []
    index_of: dict[tuple[int, int], int] = {}
    for d, scene in enumerate(result.input_scenes):
        for i, obj in enumerate(scene.objects):
            index_of[(d, i)] = len(objects)
            objects.append(obj)
            demo_of.append(d)
    out_dims = {d: tuple(scene.grid.shape) for d, scene in enumerate(result.output_scenes)}
    by_kind: dict[OperationKind, list] = {}
    for a in result.assignments:
        by_kind.setdefault(a.action.kind, []).append(a)
    for rule in program.rules:
        assigned = by_kind.get(rule.kind, [])
        labels = np.zeros(len(objects), dtype=bool)
        for a in assigned:
            labels[index_of[(a.demo_index, a.input_index)]] = True
        for i, obj in enumerate(objects):
            if (rule.condition.probability(obj) >= 0.5) != bool(labels[i]):
                return False
        for slot in dsl.PARAM_SLOTS[rule.kind]:
            predictor = rule.parameters.get(slot)
            if predictor is None:
                return False
            for a in assigned:
                i = index_of[(a.demo_index, a.input_index)]
                expected = a.action.param(slot)
                if predictor.predict(objects[i], out_dims[demo_of[i]], codec) != expected:
                    return False
    return True


# --------------------------------------------------------------------------
# serialization


def _predictor_to_json(pred: ParameterPredictor):
    if isinstance(pred, ConstantParameter):
        return {"variant": "constant", "value": dsl.param_value_to_json(pred.value)}
    if isinstance(pred, CopyParameter):
        return {"variant": "copy", "property": pred.prop}
    doc = {
        "variant": "linear",
        "slot": pred.slot,
        "subset": list(pred.subset),
        "base": pred.base.tolist(),
        "inputs": pred.inputs.tolist(),
        "correction": pred.correction.tolist(),
    }
    if pred.shape_values is not None:
        doc["shape_values"] = [dsl.param_value_to_json(s) for s in pred.shape_values]
    return doc


def _predictor_from_json(doc) -> ParameterPredictor:
    variant = doc["variant"]
    if variant == "constant":
        return ConstantParameter(dsl.param_value_from_json(doc["value"]))
    if variant == "copy":
        return CopyParameter(doc["property"])
    if variant == "linear":
        shapes = doc.get("shape_values")
        return LinearParameter(
            slot=doc["slot"],
            subset=canonical_subset(doc["subset"]),
            base=np.array(doc["base"], dtype=np.float64),
            inputs=np.array(doc["inputs"], dtype=np.float64),
            correction=np.array(doc["correction"], dtype=np.float64),
            shape_values=tuple(dsl.param_value_from_json(s) for s in shapes) if shapes else None,
        )
    raise ValueError(f"unknown parameter predictor variant {variant!r}")


def program_to_json(program: Program, config: VsaConfig) -> dict:
    rules = []
    for rule in program.rules:
        cond = {
            "subset": list(rule.condition.subset),
            "weights": None if rule.condition.weights is None else rule.condition.weights.tolist(),
            "steepness": rule.condition.steepness,
            "threshold": rule.condition.threshold,
        }
        rules.append(
            {
                "kind": rule.kind.value,
                "condition": cond,
                "parameters": {s: _predictor_to_json(p) for s, p in rule.parameters.items()},
            }
        )
    return {
        "format": PROGRAM_FORMAT,
        "version": PROGRAM_VERSION,
        "dimension": config.dimension,
        "seed": config.seed,
        "rules": rules,
    }


def program_from_json(doc, config: VsaConfig) -> Program:
    if doc.get("format") != PROGRAM_FORMAT or doc.get("version") != PROGRAM_VERSION:
        raise ValueError("not a recognized program document")
    if doc.get("dimension") != config.dimension or doc.get("seed") != config.seed:
        raise ValueError("program was built under a different vector configuration")
    rules = []
    for rd in doc["rules"]:
        cond = rd["condition"]
        weights = cond["weights"]
        condition = OperationPredictor(
            subset=canonical_subset(cond["subset"]),
            weights=None if weights is None else np.array(weights, dtype=np.float64),
            steepness=float(cond["steepness"]),
            threshold=float(cond["threshold"]),
        )
        parameters = {s: _predictor_from_json(p) for s, p in rd["parameters"].items()}
        rules.append(Rule(OperationKind(rd["kind"]), condition, parameters))
    return Program(tuple(rules))
