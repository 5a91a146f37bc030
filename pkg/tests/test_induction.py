"""Tests for rule learning: predictors, subset selection, program assembly."""
from __future__ import annotations

import numpy as np
import pytest

from hologrid import abduction as ab
from hologrid import dsl, induction as ind, perception as pc
from hologrid import ssp, vsa
from hologrid.dsl import Action, Amount, Centre, Colour, OperationKind as Op, Shape

from oracles import conv_direct, linear_loss_direct, logistic_loss_direct, softmax_direct

CFG = vsa.VsaConfig(dimension=512, seed=33)
ENC = ssp.SspEncoder(CFG)
PALETTE = pc.build_palette(CFG)
CODEC = ind.make_codec(ENC, PALETTE)


def obj(rows):
    objects = pc.perceive(
        pc.as_grid(rows), pc.ObjectHypothesis.EIGHT_CONNECTED, ENC, PALETTE
    ).objects
    assert len(objects) == 1
    return objects[0]


def pixel(colour, r, c, rows=7, cols=7):
    grid = [[0] * cols for _ in range(rows)]
    grid[r][c] = colour
    return obj(grid)


def square(colour, r, c, rows=7, cols=7):
    grid = [[0] * cols for _ in range(rows)]
    for dr in (0, 1):
        for dc in (0, 1):
            grid[r + dr][c + dc] = colour
    return obj(grid)


# ---------------------------------------------------------------- properties


def test_property_scores_colour_separation():
    objects = [pixel(3, 1, 1), square(3, 4, 4), pixel(5, 1, 4), square(5, 4, 1)]
    labels = ["a", "a", "b", "b"]
    scores = ind.property_scores(objects, labels)
    # Same-group colour similarity 1, cross-group ~0: score(colour) ~ 1.
    assert scores[0] == pytest.approx(1.0, abs=0.05)
    assert ind.rank_properties(objects, labels)[0] == ("colour",)


def test_property_scores_uninformative_property_is_zero():
    objects = [pixel(4, 1, 1), pixel(4, 1, 5), pixel(4, 5, 1), pixel(4, 5, 5)]
    scores = ind.property_scores(objects, ["a", "a", "b", "b"])
    # Identical colour everywhere gives s_same = s_diff, so no separation.
    assert scores[0] == pytest.approx(0.0, abs=1e-9)


def test_property_likelihoods_match_softmax_oracle():
    objects = [pixel(3, 1, 1), pixel(3, 2, 2), pixel(6, 4, 4), pixel(6, 5, 5)]
    labels = [0, 0, 1, 1]
    like = ind.property_likelihoods(objects, labels)
    direct = softmax_direct(ind.property_scores(objects, labels))
    assert np.allclose(like, direct, atol=1e-12)
    assert like.sum() == pytest.approx(1.0, abs=1e-12)


def test_rank_properties_layout():
    objects = [pixel(2, 0, 0), pixel(9, 6, 6)]
    ranked = ind.rank_properties(objects, [0, 1])
    assert len(ranked) == 7
    assert all(len(s) == 1 for s in ranked[:3])
    assert all(len(s) == 2 for s in ranked[3:6])
    assert ranked[6] == ("colour", "centre", "shape")
    assert {s[0] for s in ranked[:3]} == set(ind.PROPERTY_ORDER)


def test_subset_vector_is_normalized_bundle():
    o = square(4, 2, 2)
    v = ind.subset_vector(o, ("colour", "shape"))
    expected = vsa.normalize(o.colour_vec + o.shape_vec)
    assert np.allclose(v, expected)
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-9)


def test_canonical_subset_rejects_junk():
    assert ind.canonical_subset(("shape", "colour")) == ("colour", "shape")
    with pytest.raises(ValueError):
        ind.canonical_subset(("colour", "sparkle"))
    with pytest.raises(ValueError):
        ind.canonical_subset(())


# ---------------------------------------------------------------- operation predictor


def test_vacuous_predictor_when_no_negatives():
    pred = ind.train_operation_predictor([pixel(2, 1, 1)], [], ("colour",))
    assert pred.vacuous
    assert pred.probability(pixel(8, 5, 5)) == 1.0


def test_learned_predictor_separates_colours():
    positives = [pixel(2, r, c) for r, c in [(0, 0), (2, 3), (5, 1)]]
    negatives = [pixel(7, r, c) for r, c in [(1, 5), (4, 4), (6, 0)]]
    pred = ind.train_operation_predictor(positives, negatives, ("colour",))
    assert not pred.vacuous
    assert np.linalg.norm(pred.weights) == pytest.approx(1.0, abs=1e-6)
    assert pred.steepness > 0
    for o in positives + [pixel(2, 3, 3)]:
        assert pred.probability(o) >= 0.5
    for o in negatives + [pixel(7, 2, 2)]:
        assert pred.probability(o) < 0.5


def test_predictor_probability_monotone_in_similarity():
    positives = [square(1, 0, 0), square(1, 3, 3)]
    negatives = [pixel(6, 6, 6), pixel(6, 0, 6)]
    pred = ind.train_operation_predictor(positives, negatives, ("colour", "shape"))
    rng = np.random.default_rng(5)
    sims, probs = [], []
    for _ in range(20):
        x = vsa.normalize(rng.normal(size=CFG.dimension))
        sims.append(float(pred.weights @ x))
        probs.append(float(1 / (1 + np.exp(-pred.steepness * (sims[-1] - pred.threshold)))))
    order = np.argsort(sims)
    assert all(np.diff(np.array(probs)[order]) >= 0)


def test_operation_loss_matches_naive_oracle():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(6, 32))
    y = rng.integers(0, 2, size=6).astype(float)
    w = vsa.normalize(rng.normal(size=32))
    ours = ind.operation_loss(w, 3.0, 0.2, X, y)
    theirs = logistic_loss_direct(w, 3.0, 0.2, X, y)
    assert ours == pytest.approx(theirs, rel=1e-9)


def test_operation_gradients_match_finite_differences():
    rng = np.random.default_rng(17)
    X = rng.normal(size=(5, 24))
    y = rng.integers(0, 2, size=5).astype(float)
    w = vsa.normalize(rng.normal(size=24))
    kappa, b = 2.5, 0.1
    loss, gw, gk, gb = ind.operation_loss_grad(w, kappa, b, X, y)
    assert loss == pytest.approx(ind.operation_loss(w, kappa, b, X, y), rel=1e-12)
    eps = 1e-6

    def central(f, x0):
        return (f(x0 + eps) - f(x0 - eps)) / (2 * eps)

    for i in [0, 7, 23]:
        def f_wi(v, i=i):
            w2 = w.copy()
            w2[i] = v
            return ind.operation_loss(w2, kappa, b, X, y)

        assert gw[i] == pytest.approx(central(f_wi, w[i]), rel=1e-4, abs=1e-10)
    assert gk == pytest.approx(
        central(lambda v: ind.operation_loss(w, v, b, X, y), kappa), rel=1e-4
    )
    assert gb == pytest.approx(
        central(lambda v: ind.operation_loss(w, kappa, v, X, y), b), rel=1e-4, abs=1e-8
    )


# ---------------------------------------------------------------- parameter predictors


def test_constant_parameter_shortcut():
    pairs = [(pixel(2, 1, 1), Colour(3)), (pixel(7, 4, 4), Colour(3))]
    pred = ind.train_parameter_predictor(pairs, "colour", ("colour",), CODEC)
    assert isinstance(pred, ind.ConstantParameter)
    assert pred.predict(pixel(9, 0, 0), (7, 7), CODEC) == Colour(3)


def test_copy_parameter_shortcut_colour():
    pairs = [(pixel(2, 1, 1), Colour(2)), (pixel(7, 4, 4), Colour(7)), (pixel(4, 2, 5), Colour(4))]
    pred = ind.train_parameter_predictor(pairs, "colour", ("colour",), CODEC)
    assert isinstance(pred, ind.CopyParameter) and pred.prop == "colour"
    assert pred.predict(pixel(9, 3, 3), (7, 7), CODEC) == Colour(9)


def test_copy_parameter_shortcut_centre():
    objs = [square(3, 0, 0), square(5, 4, 4), square(6, 2, 3)]
    pairs = [(o, Centre(*o.mask.centre_point())) for o in objs]
    pred = ind.train_parameter_predictor(pairs, "centre", ("shape",), CODEC)
    assert isinstance(pred, ind.CopyParameter) and pred.prop == "centre"
    probe = square(1, 1, 1)
    assert pred.predict(probe, (7, 7), CODEC) == Centre(*probe.mask.centre_point())


def test_copy_parameter_shortcut_shape():
    objs = [square(3, 0, 0), pixel(5, 4, 4), obj([[2, 2, 2]])]
    pairs = [(o, Shape(o.mask.offsets())) for o in objs]
    pred = ind.train_parameter_predictor(pairs, "shape", ("colour",), CODEC)
    assert isinstance(pred, ind.CopyParameter) and pred.prop == "shape"


def test_shortcut_precedence_over_linear():
    # A linear map could fit these, but the constant shortcut must win.
    pairs = [(pixel(c, c - 1, 0), Amount(2.0, 0.0)) for c in (1, 2, 3)]
    pred = ind.train_parameter_predictor(pairs, "amount", ("colour",), CODEC)
    assert isinstance(pred, ind.ConstantParameter)


def test_linear_parameter_four_way_colour_map():
    src_dst = [(1, 5), (2, 6), (3, 7), (4, 8)]
    pairs = [(pixel(s, i, i), Colour(d)) for i, (s, d) in enumerate(src_dst)]
    pred = ind.train_parameter_predictor(pairs, "colour", ("colour",), CODEC)
    assert isinstance(pred, ind.LinearParameter)
    for i, (s, d) in enumerate(src_dst):
        assert pred.predict(pixel(s, 6 - i, i), (7, 7), CODEC) == Colour(d)


def test_linear_parameter_centre_shift_decodes_on_lattice():
    objs = [pixel(4, 3, c) for c in (0, 2, 3, 5)]
    pairs = [(o, Centre(o.mask.centre_point()[0] + 1.0, o.mask.centre_point()[1])) for o in objs]
    pred = ind.train_parameter_predictor(pairs, "centre", ("centre",), CODEC)
    assert isinstance(pred, ind.LinearParameter)
    for o, want in pairs:
        assert pred.predict(o, (7, 7), CODEC) == want


def test_linear_parameter_shape_vocabulary_decode():
    shapes = [Shape(square(1, 0, 0).mask.offsets()), Shape(pixel(1, 0, 0).mask.offsets())]
    objs = [pixel(2, 1, 1), pixel(7, 5, 5), pixel(2, 3, 1), pixel(7, 1, 5)]
    pairs = [(o, shapes[i % 2]) for i, o in enumerate(objs)]
    pred = ind.train_parameter_predictor(pairs, "shape", ("colour",), CODEC)
    assert isinstance(pred, ind.LinearParameter)
    assert pred.shape_values == (shapes[0], shapes[1])
    assert pred.predict(pixel(2, 6, 6), (7, 7), CODEC) == shapes[0]
    assert pred.predict(pixel(7, 0, 0), (7, 7), CODEC) == shapes[1]


def test_parameter_loss_matches_naive_oracle():
    rng = np.random.default_rng(23)
    W = rng.normal(size=(16, 16))
    X = rng.normal(size=(4, 16))
    Y = rng.normal(size=(4, 16))
    loss, grad = ind.parameter_loss_grad(W, X, Y)
    assert loss == pytest.approx(linear_loss_direct(W, X, Y), rel=1e-9)
    eps = 1e-6
    for i, j in [(0, 0), (3, 11), (15, 15)]:
        up, down = W.copy(), W.copy()
        up[i, j] += eps
        down[i, j] -= eps
        fd = (ind.parameter_loss(up, X, Y) - ind.parameter_loss(down, X, Y)) / (2 * eps)
        assert grad[i, j] == pytest.approx(fd, rel=1e-4, abs=1e-8)


def test_circulant_matrix_product_is_binding():
    rng = np.random.default_rng(29)
    v = rng.normal(size=16)
    x = rng.normal(size=16)
    assert np.allclose(ind.circulant_matrix(v) @ x, conv_direct(v, x), atol=1e-9)


def test_factored_training_matches_dense_training():
    rng = np.random.default_rng(31)
    n, m = 32, 3
    X = np.stack([vsa.normalize(rng.normal(size=n)) for _ in range(m)])
    Y = np.stack([vsa.normalize(rng.normal(size=n)) for _ in range(m)])
    base, correction = ind._train_linear_factors(X, Y)
    # Dense reference: same initialization, same schedule, explicit matrix.
    W = ind.circulant_matrix(np.mean([vsa.unbind(y, x) for x, y in zip(X, Y)], axis=0))
    for _ in range(ind.MAX_EPOCHS):
        loss, grad = ind.parameter_loss_grad(W, X, Y)
        if loss < ind.LOSS_FLOOR:
            break
        W = W - ind.LEARNING_RATE * grad
    factored = ind.circulant_matrix(base) + correction.T @ X
    assert np.allclose(factored, W, atol=1e-8)
    probe = vsa.normalize(rng.normal(size=n))
    lp = ind.LinearParameter("colour", ("colour",), base, X, correction)
    assert np.allclose(lp.apply(probe), W @ probe, atol=1e-8)


# ---------------------------------------------------------------- cross validation


def make_observations(groups, labels_by_demo):
    objects, demo_of, labels = [], [], []
    for d, demo_objects in enumerate(groups):
        for o, lab in zip(demo_objects, labels_by_demo[d]):
            objects.append(o)
            demo_of.append(d)
            labels.append(lab)
    return ind._RuleObservations(
        kind=Op.MOVE,
        objects=objects,
        demo_of=demo_of,
        labels=np.array(labels, dtype=bool),
        pairs_by_slot={},
        out_dims={d: (7, 7) for d in range(len(groups))},
    )


def test_cross_validation_picks_generalizing_subset():
    # Colour separates the classes in every demo; centre only in the first two.
    groups = [
        [pixel(2, 1, 1), pixel(7, 1, 5)],
        [pixel(2, 2, 0), pixel(7, 2, 6)],
        [pixel(2, 3, 6), pixel(7, 3, 0)],
    ]
    labels = [[True, False]] * 3
    obs = make_observations(groups, labels)
    chosen = ind.cross_validate(obs, [("centre",), ("colour",)], CODEC)
    assert chosen == ("colour",)


def test_cross_validation_tie_keeps_rank_order():
    groups = [
        [pixel(2, 1, 1), pixel(7, 5, 5)],
        [pixel(2, 0, 3), pixel(7, 6, 3)],
    ]
    obs = make_observations(groups, [[True, False]] * 2)
    chosen = ind.cross_validate(obs, [("colour",), ("colour", "shape")], CODEC)
    assert chosen == ("colour",)


def test_cross_validation_single_demo_falls_back_to_top_rank():
    obs = make_observations([[pixel(2, 1, 1), pixel(7, 5, 5)]], [[True, False]])
    assert ind.cross_validate(obs, [("shape",), ("colour",)], CODEC) == ("shape",)


# ---------------------------------------------------------------- induce


def demo(inp, out):
    return (pc.as_grid(inp), pc.as_grid(out))


def test_induce_recolour_task_builds_vacuous_constant_rule():
    demos = [
        demo([[0, 3, 0], [3, 3, 0], [0, 0, 0]], [[0, 5, 0], [5, 5, 0], [0, 0, 0]]),
        demo([[0, 0, 0], [0, 3, 3], [0, 0, 3]], [[0, 0, 0], [0, 5, 5], [0, 0, 5]]),
    ]
    result = ab.abduce(demos, ENC, PALETTE)
    program = ind.induce(result, ENC, PALETTE)
    assert len(program) == 1
    rule = program.rules[0]
    assert rule.kind is Op.RECOLOUR
    assert rule.condition.vacuous
    assert rule.parameters["colour"] == ind.ConstantParameter(Colour(5))


def test_induce_conditional_move_task():
    demos = [
        demo(
            [[2, 0, 0, 0], [0, 0, 0, 0], [0, 0, 7, 0], [0, 0, 0, 0]],
            [[0, 2, 0, 0], [0, 0, 0, 0], [0, 0, 7, 0], [0, 0, 0, 0]],
        ),
        demo(
            [[0, 0, 0, 0], [7, 0, 0, 0], [0, 0, 2, 0], [0, 0, 0, 0]],
            [[0, 0, 0, 0], [7, 0, 0, 0], [0, 0, 0, 2], [0, 0, 0, 0]],
        ),
    ]
    result = ab.abduce(demos, ENC, PALETTE)
    assert result.ok
    program = ind.induce(result, ENC, PALETTE)
    kinds = [r.kind for r in program.rules]
    assert set(kinds) == {Op.IDENTITY, Op.MOVE}
    move = program.rules[kinds.index(Op.MOVE)]
    ident = program.rules[kinds.index(Op.IDENTITY)]
    assert not move.condition.vacuous
    assert "colour" in move.condition.subset
    for scene in result.input_scenes:
        for o in scene.objects:
            fired = move.condition.probability(o) >= 0.5
            assert fired == (o.mask.colour == 2)
            held = ident.condition.probability(o) >= 0.5
            assert held == (o.mask.colour == 7)


def test_induce_is_deterministic():
    demos = [
        demo([[0, 3], [3, 3]], [[0, 5], [5, 5]]),
        demo([[3, 0], [3, 3]], [[5, 0], [5, 5]]),
    ]
    result = ab.abduce(demos, ENC, PALETTE)
    doc_a = ind.program_to_json(ind.induce(result, ENC, PALETTE), CFG)
    doc_b = ind.program_to_json(ind.induce(result, ENC, PALETTE), CFG)
    assert doc_a == doc_b


def test_induce_rejects_failed_explanation():
    result = ab.abduce([demo([[7, 7]], [[5, 5]]), demo([[7, 7]], [[6, 6]])], ENC, PALETTE)
    assert not result.ok
    with pytest.raises(ValueError):
        ind.induce(result, ENC, PALETTE)


def test_program_json_round_trip():
    demos = [
        demo(
            [[2, 0, 0, 0], [0, 0, 0, 0], [0, 0, 7, 0], [0, 0, 0, 0]],
            [[0, 2, 0, 0], [0, 0, 0, 0], [0, 0, 7, 0], [0, 0, 0, 0]],
        ),
        demo(
            [[0, 0, 0, 0], [7, 0, 0, 0], [0, 0, 2, 0], [0, 0, 0, 0]],
            [[0, 0, 0, 0], [7, 0, 0, 0], [0, 0, 0, 2], [0, 0, 0, 0]],
        ),
    ]
    result = ab.abduce(demos, ENC, PALETTE)
    program = ind.induce(result, ENC, PALETTE)
    doc = ind.program_to_json(program, CFG)
    import json

    restored = ind.program_from_json(json.loads(json.dumps(doc)), CFG)
    assert [r.kind for r in restored.rules] == [r.kind for r in program.rules]
    for orig, back in zip(program.rules, restored.rules):
        for o in result.input_scenes[0].objects:
            assert back.condition.probability(o) == pytest.approx(
                orig.condition.probability(o), abs=1e-12
            )
            for slot, p in orig.parameters.items():
                assert back.parameters[slot].predict(o, (4, 4), CODEC) == p.predict(
                    o, (4, 4), CODEC
                )


def test_program_json_rejects_config_mismatch():
    demos = [demo([[3]], [[5]]), demo([[3, 3]], [[5, 5]])]
    program = ind.induce(ab.abduce(demos, ENC, PALETTE), ENC, PALETTE)
    doc = ind.program_to_json(program, CFG)
    with pytest.raises(ValueError):
        ind.program_from_json(doc, vsa.VsaConfig(dimension=256, seed=33))
    bad = dict(doc)
    bad["format"] = "something-else"
    with pytest.raises(ValueError):
        ind.program_from_json(bad, CFG)
