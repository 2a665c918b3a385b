import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phcclab.bayes import (
    BayesEstimator, Likelihoods, LikelihoodTable, ProbState, RoundObservation, Transition,
    delay_hardness, estimate_delay_prob, estimate_loss_prob, raw_loss_prob, summarize_round,
    update_likelihoods,
)
from phcclab.errors import EstimatorError


# -- hardness signal -------------------------------------------------------------

def test_hardness_endpoints():
    assert delay_hardness(0.04, 0.04, 0.24) == 0.0
    assert delay_hardness(0.24, 0.04, 0.24) == 1.0
    assert delay_hardness(0.50, 0.04, 0.24) == 1.0


def test_hardness_midpoint():
    assert delay_hardness(0.09, 0.04, 0.24) == pytest.approx(0.25)


def test_hardness_needs_rto_above_base():
    with pytest.raises(EstimatorError):
        delay_hardness(0.1, 0.2, 0.2)


@given(st.floats(0, 10), st.floats(1e-3, 1), st.floats(1e-3, 5))
def test_hardness_in_unit_interval(rtt, d_min, extra):
    assert 0.0 <= delay_hardness(rtt, d_min, d_min + extra) <= 1.0


# -- round summaries -------------------------------------------------------------

def test_quiet_round():
    assert summarize_round([0.0, 0.0], 10, 0) == RoundObservation(0.0, 0.0, False, False)


def test_delay_event_threshold():
    obs = summarize_round([0.4, 0.8], 10, 0)
    assert obs.mean_hardness == pytest.approx(0.6) and obs.d_event


def test_loss_fraction():
    obs = summarize_round([], 100, 2)
    assert obs.loss_fraction == pytest.approx(0.02) and obs.l_event


def test_empty_round_rejected():
    with pytest.raises(EstimatorError):
        summarize_round([], 0, 0)


# -- likelihood table ------------------------------------------------------------

def test_empty_table_is_uninformative():
    assert set(LikelihoodTable().as_dict().values()) == {0.5}


def test_laplace_counts():
    table = LikelihoodTable()
    for _ in range(3):
        table.add(Transition(True, False, True, False))
    table.add(Transition(True, False, False, False))
    assert table.p_d_given_dold == pytest.approx(4 / 6)


def test_window_evicts_oldest():
    table = LikelihoodTable(32)
    table.add(Transition(True, True, True, True))
    for _ in range(32):
        table.add(Transition(False, False, False, False))
    assert len(table) == 32
    assert table.p_d_given_dold == 0.5  # the lone prev_d transition is gone


def test_update_from_observations():
    table = LikelihoodTable()
    prev = RoundObservation(0.7, 0.0, True, False)
    cur = RoundObservation(0.2, 0.1, False, True)
    update_likelihoods(table, prev, cur)
    assert table.log[-1] == Transition(True, False, False, True)


def _recount(transitions):
    def ratio(hits, total):
        return (hits + 1) / (total + 2)

    def cond(event, given):
        sel = [t for t in transitions if given(t)]
        return ratio(sum(1 for t in sel if event(t)), len(sel))

    return {
        "p_d_given_dold": cond(lambda t: t.cur_d, lambda t: t.prev_d),
        "p_d_given_not_dold": cond(lambda t: t.cur_d, lambda t: not t.prev_d),
        "p_l_given_lold": cond(lambda t: t.cur_l, lambda t: t.prev_l),
        "p_l_given_not_lold": cond(lambda t: t.cur_l, lambda t: not t.prev_l),
        "p_l_given_dold": cond(lambda t: t.cur_l, lambda t: t.prev_d),
        "p_l_given_not_dold": cond(lambda t: t.cur_l, lambda t: not t.prev_d),
    }


transitions = st.builds(Transition, st.booleans(), st.booleans(), st.booleans(), st.booleans())


@settings(max_examples=200)
@given(st.lists(transitions, max_size=100), st.integers(1, 40))
def test_table_matches_brute_force_recount(seq, window):
    table = LikelihoodTable(window)
    for t in seq:
        table.add(t)
    expected = _recount(seq[-window:] if seq else [])
    for name, value in table.as_dict().items():
        assert value == pytest.approx(expected[name], abs=1e-12)


# -- delay and loss probability --------------------------------------------------

def test_delay_prob_endpoints():
    lk = Likelihoods(p_d_given_dold=0.8, p_d_given_not_dold=0.2)
    assert estimate_delay_prob(ProbState(p_d_old=1.0, table=lk)) == 0.8
    assert estimate_delay_prob(ProbState(p_d_old=0.0, table=lk)) == 0.2


def test_delay_prob_mixture():
    lk = Likelihoods(p_d_given_dold=0.8, p_d_given_not_dold=0.2)
    assert estimate_delay_prob(ProbState(p_d_old=0.4, table=lk)) == pytest.approx(0.44)


def test_loss_prob_four_term_sum():
    lk = Likelihoods(p_l_given_lold=0.5, p_l_given_not_lold=0.05,
                     p_l_given_dold=0.3, p_l_given_not_dold=0.02)
    st_ = ProbState(p_d_old=0.2, p_l_old=0.1, table=lk)
    assert raw_loss_prob(st_) == pytest.approx(0.171)
    assert estimate_loss_prob(st_) == pytest.approx(0.171)


def test_loss_prob_clamps_at_one():
    lk = Likelihoods(1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
    st_ = ProbState(p_d_old=0.5, p_l_old=0.5, table=lk)
    assert raw_loss_prob(st_) == pytest.approx(2.0)
    assert estimate_loss_prob(st_) == 1.0
    assert estimate_loss_prob(st_, "average") == 1.0


def test_loss_prob_all_zero():
    lk = Likelihoods(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    assert estimate_loss_prob(ProbState(p_d_old=0.3, p_l_old=0.3, table=lk)) == 0.0


def test_unknown_combine_mode():
    with pytest.raises(ValueError):
        estimate_loss_prob(ProbState(table=Likelihoods()), "median")


probs = st.floats(0, 1)


@given(probs, probs, st.tuples(*[probs] * 6))
def test_estimates_stay_in_unit_interval(pd, pl, lk):
    state = ProbState(p_d_old=pd, p_l_old=pl, table=Likelihoods(*lk))
    assert 0 <= estimate_delay_prob(state) <= 1
    assert 0 <= estimate_loss_prob(state) <= 1


# -- streaming estimator -----------------------------------------------------------

def test_estimator_waits_for_two_rounds():
    est = BayesEstimator()
    assert est.observe([0.9], 10, 5) == (0.0, 0.0)
    pd, pl = est.observe([0.9], 10, 5)
    assert pd > 0 and pl > 0


def test_persistent_congestion_drives_delay_prob_up():
    est = BayesEstimator()
    for _ in range(40):
        est.observe([0.9, 0.95], 20, 0)
    assert est.p_d_est > 0.8
    assert est.p_l_est < 0.1
