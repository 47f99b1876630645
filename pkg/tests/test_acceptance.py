"""Acceptance criteria, each checked at its stated tolerance.

Every test prints one PASS/FAIL line; the lines are repeated in the terminal
summary under "acceptance criteria".
"""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from fuzzysel.cli import main
from fuzzysel.dataset import Dataset, generate_synthetic1
from fuzzysel.experiments import run_experiment
from fuzzysel.loss import redundancy_regularizer, selection_regularizer, total_loss
from fuzzysel.modulators import Granularity, ModulatorBank, bank_from_mask, constant_bank
from fuzzysel.rulebase import RuleBase, build_rulebase
from fuzzysel.stats import CorrelationSet, correlation_matrix
from fuzzysel.trainer import gradient_check

pytestmark = pytest.mark.slow

RUNS = 5
NEED = 4
TIME_LIMIT = 60.0


def record(name: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def check(name: str, ok: bool, detail: str) -> None:
    record(name, ok, detail)
    assert ok, detail


def timed(name):
    t0 = time.perf_counter()
    res = run_experiment(name, runs=RUNS, base_seed=0)
    return res, time.perf_counter() - t0


def subsets(res, label):
    return [r.report.subsets for r in res.for_mode(label)]


@pytest.fixture(scope="module")
def exp1():
    return timed("exp1")


@pytest.fixture(scope="module")
def exp2():
    return timed("exp2")


@pytest.fixture(scope="module")
def exp3():
    return timed("exp3")


# 1. analytic vs frozen-routing finite-difference gradients

def test_ac1_gradients():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst, cases = 0.0, []
    grans = ["global", "class", "rule"]
    for i in range(20):
        g = grans[i % 3]
        c2 = 0.0 if g == "rule" else float(rng.integers(0, 2))
        res = gradient_check(int(rng.integers(0, 2**31)), g, c1=1.0, c2=c2, h=1e-5, tolerance=1e-4)
        worst = max(worst, res.max_rel_error)
        cases.append((g, c2))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-4 and elapsed < 10.0
    covered = {g for g, _ in cases} == set(grans) and {c for g, c in cases if g != "rule"} == {0.0, 1.0}
    check("AC1 gradient check", ok and covered,
          f"20 instances, max rel err {worst:.2e} (< 1e-4), {elapsed:.2f}s (< 10s)")


# 2. regulariser bounds and identities over random banks

def _random_corr(rng, C, P):
    def mat():
        n = int(rng.integers(P + 1, 30))
        X = rng.normal(size=(n, P)) @ rng.normal(size=(P, P))
        return correlation_matrix(X)[0]
    return CorrelationSet(mat(), np.array([mat() for _ in range(C)]), np.zeros(P, bool), np.zeros((C, P), bool))


def test_ac2_regularizer_bounds_and_identities():
    rng = np.random.default_rng(7)
    tol = 1e-12
    worst = {"sel": 0.0, "red": 0.0, "sign": 0.0, "rule=class": 0.0, "class=global": 0.0}
    lo_ok = True
    n_banks = 1200
    for _ in range(n_banks):
        C = int(rng.integers(2, 4))
        P = int(rng.integers(2, 7))
        rpc = tuple(int(v) for v in rng.integers(1, 4, C))
        scale = rng.choice([0.3, 1.5, 4.0])
        g = Granularity(rng.choice(["global", "class", "rule"]))
        shape = {"global": (P,), "class": (C, P), "rule": (sum(rpc), P)}[g.value]
        bank = ModulatorBank(g, rng.normal(scale=scale, size=shape), rpc)
        corr = _random_corr(rng, C, P)

        es = selection_regularizer(bank)
        lo_ok &= es >= -tol
        worst["sel"] = max(worst["sel"], es - 0.25)
        neg = bank.with_lambdas(-bank.lambdas)
        worst["sign"] = max(worst["sign"], abs(selection_regularizer(neg) - es))
        if g is not Granularity.RULE:
            er = redundancy_regularizer(bank, corr)
            lo_ok &= er >= -tol
            worst["red"] = max(worst["red"], er - 1.0)
            worst["sign"] = max(worst["sign"], abs(redundancy_regularizer(neg, corr) - er))

    # maximum: every M = 0.5 gives exactly 0.25 at each granularity
    lam_half = np.sqrt(np.log(2.0))
    peak_err = 0.0
    for g, shape in (("global", (4,)), ("class", (3, 4)), ("rule", (5, 4))):
        b = ModulatorBank(Granularity(g), np.full(shape, lam_half), (2, 2, 1))
        peak_err = max(peak_err, abs(selection_regularizer(b) - 0.25))
    # red reaches 1 with everything selected and |rho| = 1
    full = CorrelationSet(np.ones((3, 3)), np.ones((2, 3, 3)), np.zeros(3, bool), np.zeros((2, 3), bool))
    red_peak = abs(redundancy_regularizer(ModulatorBank(Granularity.CLASS, np.zeros((2, 3)), (1, 1)), full) - 1.0)

    # granularity collapse, including E_cl through the forward pass
    for seed in range(200):
        r = np.random.default_rng(10_000 + seed)
        C, P = int(r.integers(2, 4)), int(r.integers(2, 6))
        n = 3 * C
        labels = np.concatenate([np.arange(1, C + 1)] * 3)
        d = Dataset(r.normal(size=(n, P)), labels, tuple(f"x{j + 1}" for j in range(P)), C)
        ones = (1,) * C
        rb = RuleBase(r.normal(size=(C, P)), r.uniform(0.3, 2, (C, P)), ones)
        L = r.normal(scale=1.5, size=(C, P))
        lr = total_loss(rb, ModulatorBank(Granularity.RULE, L, ones), d, c1=1.0)
        lc = total_loss(rb, ModulatorBank(Granularity.CLASS, L, ones), d, c1=1.0)
        worst["rule=class"] = max(worst["rule=class"], abs(lr.e_cl - lc.e_cl), abs(lr.e_select - lc.e_select))

        rpc = tuple(int(v) for v in r.integers(1, 3, C))
        rb2 = RuleBase(r.normal(size=(sum(rpc), P)), r.uniform(0.3, 2, (sum(rpc), P)), rpc)
        v = r.normal(scale=1.5, size=P)
        gl = total_loss(rb2, ModulatorBank(Granularity.GLOBAL, v, rpc), d, c1=1.0)
        cl = total_loss(rb2, ModulatorBank(Granularity.CLASS, np.tile(v, (C, 1)), rpc), d, c1=1.0)
        worst["class=global"] = max(worst["class=global"], abs(gl.e_cl - cl.e_cl), abs(gl.e_select - cl.e_select))
        rho = correlation_matrix(d.features)[0]
        same = CorrelationSet(rho, np.tile(rho, (C, 1, 1)), np.zeros(P, bool), np.zeros((C, P), bool))
        worst["class=global"] = max(worst["class=global"], abs(
            redundancy_regularizer(ModulatorBank(Granularity.GLOBAL, v, rpc), same)
            - redundancy_regularizer(ModulatorBank(Granularity.CLASS, np.tile(v, (C, 1)), rpc), same)
        ))

    items = [
        ("AC2a E_select in [0, 0.25], max at M = 0.5", lo_ok and worst["sel"] <= tol and peak_err <= tol,
         f"{n_banks} banks, max excess {worst['sel']:.1e}, peak error {peak_err:.1e}"),
        ("AC2b E_red in [0, 1]", lo_ok and worst["red"] <= tol and red_peak <= tol,
         f"max excess {worst['red']:.1e}, all-correlated value error {red_peak:.1e}"),
        ("AC2c invariance under lambda -> -lambda", worst["sign"] <= tol, f"max diff {worst['sign']:.1e}"),
        ("AC2d granularity collapse", worst["rule=class"] <= tol and worst["class=global"] <= tol,
         f"rule(n_k=1) vs class {worst['rule=class']:.1e}, class(equal rows) vs global {worst['class=global']:.1e}"),
    ]
    for name, ok, detail in items:
        record(name, ok, detail)
    assert all(ok for _, ok, _ in items)


# 3. Synthetic1

S1_TRUE = {"s1": ["x1", "x2"], "s2": ["x3", "x4"], "s3": ["x5", "x6"]}


def test_ac3a_class_specific_subsets(exp1):
    res, _ = exp1
    hits = sum(s == S1_TRUE for s in subsets(res, "class-specific"))
    check("AC3a exp1 class-specific recovers s1/s2/s3", hits >= NEED, f"{hits}/{RUNS} runs exact (need {NEED})")


def test_ac3b_class_specific_accuracy(exp1):
    res, _ = exp1
    acc = res.mean_accuracy("class-specific")
    check("AC3b exp1 class-specific mean accuracy", acc >= 0.95, f"{100 * acc:.2f}% (need >= 95%)")


def test_ac3c_ordering_and_global_size(exp1):
    res, elapsed = exp1
    cs, af, gl = (res.mean_accuracy(m) for m in ("class-specific", "all features", "global"))
    sizes = [len(s["global"]) for s in subsets(res, "global")]
    ok = cs > af > gl and all(k == 2 for k in sizes) and not res.failures and elapsed < TIME_LIMIT
    check("AC3c exp1 ordering class > all > global, global picks 2", ok,
          f"{100 * cs:.2f} > {100 * af:.2f} > {100 * gl:.2f}, global sizes {sizes}, {elapsed:.1f}s")


# 4. Synthetic2

def _one_of(sel, a, b):
    return (a in sel) != (b in sel)


def test_ac4a_with_redundancy_control(exp2):
    res, elapsed = exp2
    label = "With class-specific redundancy control"
    hits = 0
    for s in subsets(res, label):
        s1 = set(s["s1"])
        hits += (
            _one_of(s1, "x1", "x7") and _one_of(s1, "x2", "x8") and len(s1) == 2
            and s["s2"] == ["x3", "x4"] and s["s3"] == ["x5", "x6"]
        )
    acc = res.mean_accuracy(label)
    ok = hits >= NEED and acc >= 0.95 and elapsed < TIME_LIMIT
    check("AC4a exp2 c2 > 0 keeps one of each redundant pair", ok,
          f"{hits}/{RUNS} runs, mean accuracy {100 * acc:.2f}%, {elapsed:.1f}s")


def test_ac4b_without_redundancy_control(exp2):
    res, _ = exp2
    counts = [len(set(s["s1"]) & {"x1", "x2", "x7", "x8"}) for s in subsets(res, "Without redundancy control")]
    hits = sum(c >= 3 for c in counts)
    check("AC4b exp2 c2 = 0 keeps redundant copies", hits >= NEED,
          f"s1 overlap with x1,x2,x7,x8 per run {counts}, {hits}/{RUNS} with >= 3")


# 5. Synthetic3

S3_TRUE = {
    "s1": {frozenset({"x1", "x2"}), frozenset({"x3", "x4"})},
    "s2": {frozenset({"x2", "x3"}), frozenset({"x1", "x4"})},
}


def test_ac5a_rule_specific(exp3):
    res, elapsed = exp3
    hits = 0
    for s in subsets(res, "rule-specific"):
        got = {k: {frozenset(s[f"{k}.r1"]), frozenset(s[f"{k}.r2"])} for k in ("s1", "s2")}
        hits += got == S3_TRUE
    acc = res.mean_accuracy("rule-specific")
    ok = hits >= NEED and acc >= 0.98 and elapsed < TIME_LIMIT
    check("AC5a exp3 rule-specific recovers per-rule subspaces", ok,
          f"{hits}/{RUNS} runs, mean accuracy {100 * acc:.2f}%, {elapsed:.1f}s")


def test_ac5b_class_specific_lower(exp3):
    res, _ = exp3
    rs, cs = res.mean_accuracy("rule-specific"), res.mean_accuracy("class-specific")
    check("AC5b exp3 class-specific strictly below rule-specific", cs < rs, f"{100 * cs:.2f}% < {100 * rs:.2f}%")


# 6. determinism

def test_ac6_determinism(tmp_path):
    outs = []
    for i in range(2):
        p = tmp_path / f"r{i}.json"
        code = main(["train", "--synthetic", "synthetic2", "--seed", "3", "--c1", "1", "--c2", "15",
                     "--spread-floor", "0.25", "--out-report", str(p)])
        assert code == 0
        outs.append(p.read_bytes())
    check("AC6 same seed gives identical report", outs[0] == outs[1], f"{len(outs[0])} bytes, identical={outs[0] == outs[1]}")


# 7. oracle bank beats all features on E_cl

def test_ac7_oracle_lower_ecl():
    d = generate_synthetic1(0)
    rb = build_rulebase(d, 1, 0)
    oracle = bank_from_mask("class", rb.rules_per_class, [[1, 1, 0, 0, 0, 0], [0, 0, 1, 1, 0, 0], [0, 0, 0, 0, 1, 1]])
    allf = constant_bank("class", rb.rules_per_class, 6, 0.0)
    e_or = total_loss(rb, oracle, d, c1=0.0).e_cl
    e_all = total_loss(rb, allf, d, c1=0.0).e_cl
    check("AC7 oracle class-specific E_cl below all-features", e_or < e_all, f"{e_or:.4f} < {e_all:.4f}")
