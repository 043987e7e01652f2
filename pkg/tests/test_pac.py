import math

import numpy as np
import pytest

from abclearn.core import BivariateScoring, DomainError, UnivariateScoring
from abclearn.pac import CSV_HEADER, LearnerFailure, PacConfig, pac_experiment, sample_profile


def config(**kw):
    base = dict(m=5, k=2, n=6, sample_count=10, test_count=30, target=UnivariateScoring.cc(2))
    base.update(kw)
    return PacConfig(**base)


def test_constant_size_law_gives_singletons():
    cfg = config(m=3, size_law=[1, 0])
    P = sample_profile(cfg, 0)
    assert all(v.size == 1 for v in P.votes)
    assert P.n == cfg.n


def test_fixed_seed_is_deterministic():
    cfg = config()
    a = sample_profile(cfg, 42)
    b = sample_profile(cfg, 42)
    assert [(v.alternatives, v.multiplicity) for v in a.votes] == [(v.alternatives, v.multiplicity) for v in b.votes]


def test_size_frequencies_within_five_sigma():
    law = [1, 2, 3, 4]
    cfg = config(n=10_000, size_law=law)
    P = sample_profile(cfg, 7)
    sizes = np.array([len(v) for v in P.expanded()])
    total = sum(law)
    for y, w in enumerate(law, start=1):
        p = w / total
        sigma = math.sqrt(cfg.n * p * (1 - p))
        assert abs(int((sizes == y).sum()) - cfg.n * p) <= 5 * sigma


def test_prefix_subsets_when_not_uniform():
    cfg = config(uniform_subset=False)
    P = sample_profile(cfg, 1)
    assert all(v.alternatives == frozenset(range(v.size)) for v in P.votes)


@pytest.mark.parametrize(
    "kw",
    [
        dict(sample_count=0),
        dict(test_count=0),
        dict(k=5),
        dict(size_law=[1, 1]),
        dict(budgets=[11]),
        dict(target=UnivariateScoring.cc(3)),
        dict(target=BivariateScoring.cc(6, 2)),
        dict(target=BivariateScoring.cc(5, 2), sequential=True),
    ],
)
def test_config_validation(kw):
    with pytest.raises(DomainError):
        config(**kw)


def test_budget_zero_row():
    rep = pac_experiment(config(budgets=[0]))
    (row,) = rep.rows
    assert row.budget == 0 and row.train_consistent
    assert 0 <= row.empirical_error <= 1


def test_rows_and_csv():
    rep = pac_experiment(config(budgets=[5, 10]), seeds=[0, 1])
    assert [(r.budget, r.seed) for r in rep.rows] == [(5, 0), (10, 0), (5, 1), (10, 1)]
    lines = rep.to_csv().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 5
    assert rep.all_consistent
    assert rep.to_csv() == pac_experiment(config(budgets=[5, 10]), seeds=[0, 1]).to_csv()


def test_sequential_target_on_grid():
    rep = pac_experiment(config(sequential=True, budgets=[0, 10]))
    assert rep.all_consistent
    assert rep.mean_error(10) <= rep.mean_error(0)


def test_bivariate_target():
    rep = pac_experiment(config(target=BivariateScoring.av(5, 2), budgets=[10]))
    assert rep.all_consistent


def test_learner_failure_is_raised(monkeypatch):
    import abclearn.pac as pac

    monkeypatch.setattr(pac, "erm_abcs", lambda *a, **k: None)
    with pytest.raises(LearnerFailure):
        pac_experiment(config(budgets=[1]))
