from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairaudit.dataset import OutcomeTable
from fairaudit.errors import ConfigError, DomainError
from fairaudit.fairness import (
    FairnessConfig,
    FourFifths,
    Verdict,
    audit,
    audit_all_pairs,
    audit_confusions,
    evaluate_criterion,
    four_fifths_test,
    incompatibility_advisories,
    independence_gap,
    ratio_disparity,
    render_table,
    separation_gaps,
    sufficiency_gaps,
)
from fairaudit.metrics import ConfusionMatrix

from .conftest import TABLE_5B, confusion

TOL = 5e-4
BLACK, WHITE = TABLE_5B["black"], TABLE_5B["white"]
GAP_FUNCS = [
    lambda a, b: (independence_gap(a, b),),
    separation_gaps,
    sufficiency_gaps,
]


def test_compas_independence():
    assert BLACK.selection_rate() == pytest.approx(0.5882, abs=TOL)
    assert WHITE.selection_rate() == pytest.approx(0.3480, abs=TOL)
    assert independence_gap(BLACK, WHITE) == pytest.approx(0.2402, abs=TOL)


def test_compas_separation():
    tpr, fpr = separation_gaps(BLACK, WHITE)
    assert tpr == pytest.approx(0.1974, abs=TOL)
    assert fpr == pytest.approx(0.2139, abs=TOL)


def test_compas_sufficiency():
    ppv, fomr = sufficiency_gaps(BLACK, WHITE)
    assert ppv == pytest.approx(0.0384, abs=TOL)
    assert fomr == pytest.approx(0.0614, abs=TOL)


def test_compas_verdicts():
    cfg = FairnessConfig(epsilon=0.1)
    assert evaluate_criterion(independence_gap(BLACK, WHITE), cfg) is Verdict.VIOLATED
    assert evaluate_criterion(separation_gaps(BLACK, WHITE), cfg) is Verdict.VIOLATED
    assert evaluate_criterion(sufficiency_gaps(BLACK, WHITE), cfg) is Verdict.SATISFIED


def test_scaled_copy_has_zero_gap():
    assert independence_gap(BLACK, BLACK.scaled(2)) == pytest.approx(0.0, abs=1e-15)


@given(confusion)
def test_zero_law(cm):
    for f in GAP_FUNCS:
        assert all(g is None or g == 0.0 for g in f(cm, cm))


@given(confusion, confusion)
def test_antisymmetry_and_bound(a, b):
    for f in GAP_FUNCS:
        ab, ba = f(a, b), f(b, a)
        for x, y in zip(ab, ba):
            assert (x is None) == (y is None)
            if x is not None:
                assert x == -y
                assert -1.0 <= x <= 1.0


def _records(cm):
    out = []
    for truth, pred, n in ((1, 1, cm.tp), (0, 1, cm.fp), (1, 0, cm.fn), (0, 0, cm.tn)):
        out += [(truth, pred)] * int(n)
    return out


def _cond(records, event, given_):
    sel = [r for r in records if given_(r)]
    return None if not sel else sum(event(r) for r in sel) / len(sel)


small = st.integers(0, 10)


@given(st.tuples(small, small, small, small), st.tuples(small, small, small, small))
def test_sufficiency_matches_recount(ca, cb):
    a = ConfusionMatrix(tp=ca[0], fp=ca[1], fn=ca[2], tn=ca[3])
    b = ConfusionMatrix(tp=cb[0], fp=cb[1], fn=cb[2], tn=cb[3])
    ra, rb = _records(a), _records(b)
    want = []
    for pred in (1, 0):
        pa = _cond(ra, lambda r: r[0] == 1, lambda r, p=pred: r[1] == p)
        pb = _cond(rb, lambda r: r[0] == 1, lambda r, p=pred: r[1] == p)
        want.append(None if pa is None or pb is None else pa - pb)
    got = sufficiency_gaps(a, b)
    for g, w in zip(got, want):
        assert (g is None) == (w is None)
        if w is not None:
            assert g == pytest.approx(w, abs=1e-12)


def test_separation_undefined_component():
    a = ConfusionMatrix(tp=0, fp=3, fn=0, tn=2)
    tpr, fpr = separation_gaps(a, BLACK)
    assert tpr is None and fpr is not None
    assert evaluate_criterion((tpr, fpr), FairnessConfig(epsilon=1.0)) is Verdict.NOT_EVALUABLE
    assert evaluate_criterion((tpr, 0.5), FairnessConfig(epsilon=0.1)) is Verdict.VIOLATED


def test_tie_rule_and_zero_epsilon():
    assert evaluate_criterion((0.0, 0.0), FairnessConfig(epsilon=0.0)) is Verdict.SATISFIED
    assert evaluate_criterion(0.25, FairnessConfig(epsilon=0.25)) is Verdict.SATISFIED
    assert evaluate_criterion(-0.25, FairnessConfig(epsilon=0.25)) is Verdict.SATISFIED
    assert evaluate_criterion(None) is Verdict.NOT_EVALUABLE


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=2), st.floats(0, 1), st.floats(0, 1))
def test_verdict_monotone_in_epsilon(gaps, e1, e2):
    lo, hi = sorted((e1, e2))
    if evaluate_criterion(gaps, FairnessConfig(epsilon=lo)) is Verdict.SATISFIED:
        assert evaluate_criterion(gaps, FairnessConfig(epsilon=hi)) is Verdict.SATISFIED


def test_config_validation():
    with pytest.raises(ConfigError):
        FairnessConfig(epsilon=1.5)
    with pytest.raises(ConfigError):
        FairnessConfig(four_fifths_threshold=0)
    with pytest.raises(ConfigError):
        FairnessConfig(comparison_mode="odds")


@pytest.mark.parametrize(
    "rates,expected",
    [
        ({"a": 0.50, "b": 0.39}, FourFifths.ADVERSE_IMPACT),
        ({"a": 0.50, "b": 0.50}, FourFifths.NO_EVIDENCE),
        ({"black": 0.5882, "white": 0.3480}, FourFifths.ADVERSE_IMPACT),
        ({"a": 0.50, "b": 0.40}, FourFifths.NO_EVIDENCE),  # exactly 4/5 is not below
        ({"a": 0.5}, FourFifths.NOT_EVALUABLE),
        ({"a": 0.5, "b": None}, FourFifths.NOT_EVALUABLE),
    ],
)
def test_four_fifths(rates, expected):
    assert four_fifths_test(rates) is expected


def test_four_fifths_domain():
    with pytest.raises(DomainError):
        four_fifths_test({"a": 1.2, "b": 0.3})


@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=5), st.floats(0.01, 1.0))
def test_four_fifths_scale(rates, alpha):
    base = {str(i): r for i, r in enumerate(rates)}
    scaled = {k: v * alpha for k, v in base.items()}
    # compare with a relative margin so rounding at the exact threshold cannot flip the result
    ratio = min(rates) / max(rates)
    if abs(ratio - 0.8) > 1e-9:
        assert four_fifths_test(base) is four_fifths_test(scaled)


def test_ratio_mode():
    assert ratio_disparity(0.5, 0.4) == pytest.approx(0.2)
    assert ratio_disparity(0.0, 0.0) == 0.0
    report = audit_confusions({"black": BLACK, "white": WHITE}, ("black", "white"),
                              FairnessConfig(epsilon=0.1, comparison_mode="ratio"))
    # precision ratio 0.5913/0.6297 is about 0.94 -> within 0.1
    assert report.verdicts["independence"] is Verdict.VIOLATED
    # signed differences are still reported
    assert report.independence_gap == pytest.approx(0.2402, abs=TOL)


# --------------------------------------------------------------------------
# incompatibility advisories
# --------------------------------------------------------------------------

def _criteria(advs):
    return {a.criteria for a in advs if not a.suppressed}


def test_compas_advisory():
    advs = incompatibility_advisories({"black": BLACK, "white": WHITE})
    assert ("independence", "sufficiency") in _criteria(advs)


def test_identical_joint_distribution_no_advisories():
    cm = ConfusionMatrix(tp=3, fp=1, fn=2, tn=4)
    assert incompatibility_advisories({"a": cm, "b": cm.scaled(2)}) == []
    table = OutcomeTable([True, True, False, False] * 2, [True, False, True, False] * 2, ["a"] * 4 + ["b"] * 4)
    assert incompatibility_advisories(table) == []


def test_degenerate_suppressed():
    one_group = incompatibility_advisories({"a": BLACK})
    assert len(one_group) == 1 and one_group[0].suppressed and "two groups" in one_group[0].message
    one_class = OutcomeTable([True] * 4, [True, False, True, False], ["a", "a", "b", "b"])
    out = incompatibility_advisories(one_class)
    assert len(out) == 1 and out[0].suppressed and "one true-label class" in out[0].message


def _exhaustive_pairs(truth, groups):
    """For every prediction vector, exact (integer) checks of the three criteria."""
    n = len(truth)
    preds = ((np.arange(2 ** n)[:, None] >> np.arange(n)) & 1).astype(np.int64)
    y = np.asarray(truth, dtype=np.int64)
    out = {}
    cells = {}
    for g in ("a", "b"):
        m = np.array([x == g for x in groups], dtype=np.int64)
        tp = preds @ (m * y)
        fp = preds @ (m * (1 - y))
        fn = (1 - preds) @ (m * y)
        tn = (1 - preds) @ (m * (1 - y))
        cells[g] = (tp, fp, fn, tn)
    (tpa, fpa, fna, tna), (tpb, fpb, fnb, tnb) = cells["a"], cells["b"]
    na, nb = tpa + fpa + fna + tna, tpb + fpb + fnb + tnb

    def eq(num_a, den_a, num_b, den_b):
        # equal and defined on both sides
        return (den_a > 0) & (den_b > 0) & (num_a * den_b == num_b * den_a)

    out["independence"] = eq(tpa + fpa, na, tpb + fpb, nb)
    out["separation"] = eq(tpa, tpa + fna, tpb, tpb + fnb) & eq(fpa, fpa + tna, fpb, fpb + tnb)
    out["sufficiency"] = eq(tpa, tpa + fpa, tpb, tpb + fpb) & eq(fna, fna + tna, fnb, fnb + tnb)
    tp, fp, fn, tn = tpa + tpb, fpa + fpb, fna + fnb, tna + tnb
    out["pred_indep_truth"] = tp * (fp + tn) == fp * (tp + fn)
    out["all_cells_positive"] = np.all(np.stack([tpa, fpa, fna, tna, tpb, fpb, fnb, tnb]) > 0, axis=0)
    return out


def test_advisories_match_exhaustive_check():
    # base rates 0.6 vs 0.3 over 20 rows
    truth = [1] * 6 + [0] * 4 + [1] * 3 + [0] * 7
    groups = ["a"] * 10 + ["b"] * 10
    table = OutcomeTable(np.array(truth, bool), np.zeros(20, bool), groups)
    advised = _criteria(incompatibility_advisories(table))

    ex = _exhaustive_pairs(truth, groups)
    # (i) no prediction makes independence and sufficiency hold together
    assert not np.any(ex["independence"] & ex["sufficiency"])
    # (ii) where independence and separation both hold, the prediction is independent of the label
    both = ex["independence"] & ex["separation"]
    assert np.all(ex["pred_indep_truth"][both])
    # (iii) with every joint cell positive, separation and sufficiency never coexist
    assert not np.any(ex["separation"] & ex["sufficiency"] & ex["all_cells_positive"])

    # advisory (i) is emitted; the constant predictor is independent of the label and
    # leaves joint cells empty, so (ii) and (iii) preconditions do not hold for it
    assert advised == {("independence", "sufficiency")}


def test_advisory_preconditions_follow_predictions():
    rng = np.random.default_rng(3)
    truth = np.r_[rng.random(50) < 0.7, rng.random(50) < 0.3]
    pred = truth ^ (rng.random(100) < 0.2)
    table = OutcomeTable(truth, pred, ["a"] * 50 + ["b"] * 50)
    assert _criteria(incompatibility_advisories(table)) == {
        ("independence", "sufficiency"),
        ("independence", "separation"),
        ("separation", "sufficiency"),
    }


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------

def _compas_like_table():
    rows = []
    for g in ("black", "white"):
        cm = TABLE_5B[g]
        rows += [(True, True, g)] * int(cm.tp) + [(False, True, g)] * int(cm.fp)
        rows += [(True, False, g)] * int(cm.fn) + [(False, False, g)] * int(cm.tn)
    rows += [(True, False, "other")] * 5
    t, p, g = zip(*rows)
    return OutcomeTable(t, p, g)


def test_audit_table_report():
    table = _compas_like_table()
    report = audit(table, ("black", "white"))
    assert [report.verdicts[k] for k in ("independence", "separation", "sufficiency")] == [
        Verdict.VIOLATED, Verdict.VIOLATED, Verdict.SATISFIED]
    assert report.four_fifths is FourFifths.ADVERSE_IMPACT
    assert report.panels["all"].total == len(table)  # other groups stay in the "all" panel
    d = report.to_dict()
    assert d["gaps"]["independence"]["abs"] == abs(d["gaps"]["independence"]["signed"])
    assert d["dataset_fingerprint"] == table.fingerprint()
    assert d["config"]["epsilon"] == 0.1
    assert report.to_json() == audit(table, ("black", "white")).to_json()


def test_audit_all_pairs_enumerates_unordered_pairs():
    reports = audit_all_pairs(_compas_like_table())
    assert [r.group_pair for r in reports] == list(itertools.combinations(["black", "other", "white"], 2))


def test_unknown_group():
    with pytest.raises(DomainError):
        audit(_compas_like_table(), ("black", "asian"))


def test_render_table_layout():
    text = render_table(audit(_compas_like_table(), ("black", "white")))
    assert "(i) Independence: No if eps = 0.1" in text
    assert "(iii) Sufficiency: Yes if eps = 0.1" in text
    assert "0.7201" in text and "Recidivated" in text
