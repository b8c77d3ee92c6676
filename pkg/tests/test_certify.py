import itertools
import json
import math

import numpy as np
import pytest

from pingpong import certify, channels, designs, qlin
from pingpong.certify import BoundConstants, DeviceEstimates
from pingpong.channels import PauliChannel


def closed_form_h(mu, k):
    return 1.0 if mu == 1 else mu * (mu**k - 1) / (k * (mu - 1))


def bisect_closed_form(t, k):
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if closed_form_h(mid, k) < t else (lo, mid)
    return (lo + hi) / 2


# -- h_k --------------------------------------------------------------------


def test_h_examples():
    for k in (1, 2, 6, 64):
        assert certify.h_k(1.0, k) == 1.0
    assert certify.h_k(0.9, 2) == pytest.approx(0.855, abs=1e-15)
    assert certify.h_k(0.97, 6) == pytest.approx(5.400571840629 / 6, abs=1e-12)


def test_h_matches_closed_fraction():
    for k in (1, 2, 3, 6, 10, 64):
        for mu in np.linspace(0, 0.999, 37):
            assert certify.h_k(mu, k) == pytest.approx(closed_form_h(mu, k), abs=1e-12)


def test_h_monotone_and_below_mu():
    grid = np.linspace(0, 1, 401)
    for k in range(1, 65):
        vals = np.array([certify.h_k(m, k) for m in grid])
        assert np.all(np.diff(vals) > 0)
        if k > 1:
            inner = grid[1:-1]
            assert np.all(vals[1:-1] < inner)
        assert vals[-1] == 1.0 and vals[0] == 0.0


def test_h_domain():
    with pytest.raises(ValueError):
        certify.h_k(1.1, 2)
    with pytest.raises(ValueError):
        certify.h_k(0.5, 0)


def test_h_inverse_examples():
    assert certify.h_inverse(1, 6) == 1.0
    assert certify.h_inverse(certify.h_k(0.97, 6), 6) == pytest.approx(0.97, abs=1e-10)
    assert certify.h_inverse(0.84, 1) == pytest.approx(0.84, abs=1e-12)
    for bad in (0.8, 5 / 6, 1.01):
        with pytest.raises(ValueError):
            certify.h_inverse(bad, 6)


def test_h_inverse_against_independent_bisection():
    # the whole inverse curve for k = 6 between the cloning floor and 1
    for t in np.linspace(5 / 6 + 1e-6, 1, 50):
        assert certify.h_inverse(t, 6) == pytest.approx(bisect_closed_form(t, 6), abs=1e-10)


def test_completeness_verdict():
    rep = certify.completeness_verdict(1.0, 0.99, 4, 1000, 0.001)
    assert rep.verdict and rep.kind == "completeness"
    threshold = bisect_closed_form(0.9, 6) + 0.01
    assert certify.completeness_verdict(threshold + 1e-9, 0.9, 6, 10**4, 0.01).verdict
    assert not certify.completeness_verdict(threshold - 1e-9, 0.9, 6, 10**4, 0.01).verdict
    rep = certify.completeness_verdict(0.99, 0.9, 6, 10**4, 0.01)
    assert rep.threshold == pytest.approx(threshold, abs=1e-10)
    assert rep.confidence == pytest.approx(1 - math.exp(-1))
    with pytest.raises(ValueError):
        certify.completeness_verdict(0.99, 0.8, 6, 100, 0.01)


# -- soundness --------------------------------------------------------------


def test_soundness_examples():
    assert certify.soundness_rate_bound(4, 4, 0.01) == pytest.approx(1.01)
    assert certify.soundness_rate_bound(0, 1, 0.0) == pytest.approx(5 / 6)
    for k in (1, 6, 20):
        for eta in (0.001, 0.01, 0.1):
            assert certify.soundness_m_lower(1 - eta, k) == pytest.approx(k - 6 * k * eta)
    with pytest.raises(ValueError):
        certify.soundness_rate_bound(3, 2, 0.0)
    with pytest.raises(ValueError):
        certify.soundness_m_lower(0.8, 2)


def test_soundness_report():
    rep = certify.soundness_report(0.99, 0.98, 6, 10**5, 0.005)
    assert rep.verdict and rep.details["certified_sends"] == math.ceil(6 * (6 * 0.98 - 5) - 1e-12)
    assert not certify.soundness_report(0.97, 0.98, 6, 10**5, 0.005).verdict
    json.loads(rep.to_json())


# -- consistency ------------------------------------------------------------


def dev(rm, rg):
    return DeviceEstimates(tuple(rm), tuple(rg))


def test_consistency_examples():
    for kap in (1, 2, 3):
        assert certify.consistency_threshold(dev([1] * kap, [1] * kap), kap, 0.02) == pytest.approx(0.98)
    d = dev([5 / 6], [5 / 6])
    assert certify.consistency_angle(d, 1) == pytest.approx(math.pi / 3)
    assert certify.consistency_threshold(d, 1) == pytest.approx(0.5)


def test_consistency_errors():
    with pytest.raises(certify.BoundInapplicableError):
        certify.consistency_threshold(dev([0.6, 0.6], [0.6, 0.6]), 2)
    with pytest.raises(ValueError):
        certify.consistency_threshold(dev([0.3], [0.9]), 1)
    with pytest.raises(ValueError):
        DeviceEstimates((0.9,), (0.9, 0.9))
    with pytest.raises(ValueError):
        DeviceEstimates((1.2,), (0.9,))


@pytest.mark.parametrize("kappa", [1, 2, 3, 4])
@pytest.mark.parametrize("target", [0.9, 0.95, 0.99])
def test_minimum_fidelity_curve(kappa, target):
    # equal r on all 2 kappa devices: 2 kappa acos(sqrt((3r-1)/2)) = acos(sqrt((3R-1)/2))
    theta = math.acos(math.sqrt((3 * target - 1) / 2)) / (2 * kappa)
    r_min = (2 * math.cos(theta) ** 2 + 1) / 3
    d = dev([r_min] * kappa, [r_min] * kappa)
    assert certify.consistency_threshold(d, kappa) == pytest.approx(target, abs=1e-12)
    # the curve rises with depth
    if kappa > 1:
        theta_prev = math.acos(math.sqrt((3 * target - 1) / 2)) / (2 * (kappa - 1))
        assert r_min > (2 * math.cos(theta_prev) ** 2 + 1) / 3


def test_consistency_monotonicity():
    rs = [0.97, 0.98, 0.99, 0.995]
    d = dev(rs, rs)
    vals = [certify.consistency_threshold(d, kap) for kap in range(1, 5)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    for j in range(4):
        for which in ("mem", "gate"):
            bumped = list(rs)
            bumped[j] = min(1.0, bumped[j] + 0.004)
            d2 = dev(bumped, rs) if which == "mem" else dev(rs, bumped)
            assert certify.consistency_threshold(d2, 4) >= certify.consistency_threshold(d, 4)


def _string_fidelity(noise, string):
    """Average fidelity of (C_k N ... C_1 N) against (C_k ... C_1) for one Clifford string."""
    cliffs = designs.enumerate_cliffords().elements
    ch = channels.identity_channel()
    ideal = qlin.I2
    for g in string:
        ch = channels.compose_all([ch, noise, channels.unitary_channel(cliffs[g])])
        ideal = cliffs[g] @ ideal
    return channels.avg_fidelity_analytic(ch, channels.unitary_channel(ideal))


@pytest.mark.parametrize("kind", ["depolarizing", "dephasing"])
@pytest.mark.parametrize("r", [0.95, 0.99])
def test_every_fixed_string_meets_consistency_bound(kind, r):
    make = {"depolarizing": channels.depolarizing_from_fidelity, "dephasing": channels.dephasing_from_fidelity}[kind]
    # memory then gate noise, both at fidelity r, compose into one channel per round
    noise = channels.compose(make(r), make(r))
    for kappa in (1, 2):
        bound = certify.consistency_threshold(dev([r] * kappa, [r] * kappa), kappa)
        worst = min(_string_fidelity(noise, s) for s in itertools.product(range(24), repeat=kappa))
        assert worst >= bound - 1e-12


def test_consistency_confidence():
    d = DeviceEstimates((0.99,), (0.99,), (10**4,), (10**4,), (0.02,), (0.02,))
    assert certify.consistency_confidence(d, 1) == pytest.approx(1 - 4 * math.exp(-8), abs=1e-12)
    assert certify.consistency_confidence(d, 1) == pytest.approx(0.99866, abs=1e-5)
    d2 = DeviceEstimates((0.99,) * 2, (0.99,) * 2, (10**4,) * 2, (10**4,) * 2, (0.02,) * 2, (0.02,) * 2)
    assert 1 - certify.consistency_confidence(d2, 2) == pytest.approx(2 * (1 - certify.consistency_confidence(d, 1)))
    big = DeviceEstimates((0.99,), (0.99,), (10**9,), (10**9,), (0.02,), (0.02,))
    assert certify.consistency_confidence(big, 1) == 1.0
    tiny = DeviceEstimates((0.99,), (0.99,), (1,), (1,), (0.01,), (0.01,))
    assert certify.consistency_confidence(tiny, 1) == 0.0
    with pytest.raises(ValueError):
        certify.consistency_confidence(dev([0.9], [0.9]), 1)


def test_consistency_report():
    d = DeviceEstimates((0.99,), (0.99,), (10**4,), (10**4,), (0.02,), (0.02,))
    rep = certify.consistency_report(d, 1, 0.99, 0.01)
    assert rep.verdict == (rep.observed >= rep.threshold)
    assert rep.confidence == pytest.approx(1 - 4 * math.exp(-8))


# -- performance ------------------------------------------------------------


def test_bound_constants():
    assert BoundConstants().prefactor == pytest.approx(2 * math.sqrt(6))
    assert BoundConstants().prefactor == pytest.approx(4.898979, abs=1e-6)
    assert BoundConstants(d=4, cliff_size=11520).prefactor == pytest.approx(2 * math.sqrt(20))


def test_performance_examples():
    assert certify.performance_bound(1.0, 0.0, 3) == 0.0
    assert certify.performance_bound(1 - 4e-5, 0.0, 2) == pytest.approx(0.7436, abs=5e-4)
    assert certify.performance_bound(1 - 4e-5, 0.0, 2, include_cliff_factor=False) == pytest.approx(0.0310, abs=5e-4)
    with pytest.raises(ValueError):
        certify.performance_bound(1.0, -0.1, 2)


def test_composed_examples():
    single = certify.composed_performance_bound([(2, 0.999, 0.0)])
    assert single == certify.performance_bound(0.999, 0.0, 2)
    assert certify.composed_performance_bound([(1, 1.0, 0.0), (2, 1.0, 0.0)]) == 0.0
    got = certify.composed_performance_bound([(1, 1 - 1e-6, 0.0), (2, 1 - 1e-6, 0.0)])
    assert got == pytest.approx(2 * math.sqrt(6) * (math.sqrt(24e-6) + math.sqrt(576e-6)), rel=1e-9)


def test_vacuous_flag():
    rep = certify.performance_report([(6, 0.99, 0.0)])
    assert rep.details["vacuous"] and not rep.verdict and rep.threshold > 2
    rep = certify.performance_report([(1, 1 - 1e-6, 0.0)], observed=1e-6)
    assert not rep.details["vacuous"] and rep.verdict


def test_performance_bound_dominates_exact_distance():
    ident = PauliChannel((1.0, 0.0, 0.0, 0.0))
    for p in (0.5, 0.9, 0.99, 0.9999):
        mem = PauliChannel.depolarizing(p)
        total = ident
        for k in (1, 2, 3):
            total = total.compose(mem)
            exact = channels.diamond_distance_pauli(total, ident)
            r_k = (1 + p**k) / 2  # double-averaged test fidelity at depth k
            assert certify.performance_bound(r_k, 0.0, k) >= exact
            assert certify.performance_bound(r_k, 0.0, k, include_cliff_factor=False) >= exact


def test_qg_worked_example():
    qg = certify.qg_worked_example()
    assert qg["exact"] == pytest.approx(6e-5, abs=1e-9)
    assert qg["bound"] == pytest.approx(0.7436, abs=5e-4)
    assert qg["gate_free"] == pytest.approx(0.0310, abs=5e-4)
    assert qg["one_minus_R"] == certify.QG_INFIDELITY == 4e-5
    # back-solve: 2 sqrt 6 sqrt(576 x) = 0.7436 gives x close to 4e-5
    assert (0.7436 / (2 * math.sqrt(6))) ** 2 / 576 == pytest.approx(4e-5, rel=1e-3)


def test_report_serialises():
    rep = certify.completeness_verdict(0.99, 0.9, 6, 10**4, 0.01)
    back = json.loads(rep.to_json())
    assert back["kind"] == "completeness" and back["inputs"]["k"] == 6
