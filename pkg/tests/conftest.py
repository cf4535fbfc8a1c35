import pytest

from cdsopt.curves import CreditCurve, bp, calibrate_flat_rate, year_fraction
from cdsopt.index import IndexState
from cdsopt.recovery import RecoveryParams

VALUATION = "2009-11-09"
EXPIRY = "2010-03-20"
MATURITY = "2014-12-20"
T_E = year_fraction(VALUATION, EXPIRY)
T_M = year_fraction(VALUATION, MATURITY)

# criterion id -> (PASS/FAIL, detail line)
_criteria: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call":
        return
    cid = marker.args[0]
    status = "PASS" if rep.passed else "FAIL"
    detail = getattr(item.module, "DETAILS", {}).get(cid) or item.name
    prev = _criteria.get(cid)
    if prev is None or prev[0] == "PASS":
        _criteria[cid] = (status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_criteria, key=lambda c: int(c[1:])):
        status, detail = _criteria[cid]
        terminalreporter.write_line(f"{cid} {status}: {detail}")


@pytest.fixture(scope="session")
def fig_rate():
    """Flat rate reproducing a 3.723 forward annuity at 500bp on the quarterly leg."""
    return calibrate_flat_rate(3.723, bp(500), 0.2, T_E, T_M, premium_leg="quarterly")


@pytest.fixture(scope="session")
def fig2_curve(fig_rate):
    return CreditCurve(VALUATION, fig_rate, bp(500), 0.2, premium_leg="quarterly")


@pytest.fixture(scope="session")
def fig3_curve(fig_rate):
    return CreditCurve(VALUATION, fig_rate, bp(2000), 0.2, premium_leg="quarterly")


@pytest.fixture(scope="session")
def fig_recovery():
    return RecoveryParams(-0.842, 0.6)


@pytest.fixture(scope="session")
def ig13():
    return IndexState(original_names=125, names_at_strike=125, names_now=125,
                      accrued_loss=0.0, coupon=bp(100), quote=bp(100),
                      valuation_date=VALUATION, expiry=EXPIRY, maturity=MATURITY,
                      marking_recovery=0.4, riskfree_rate=0.03)


@pytest.fixture(scope="session")
def hy13():
    return IndexState(original_names=100, names_at_strike=99, names_now=99,
                      accrued_loss=0.0, coupon=bp(500), quote=93.25, quote_type="price",
                      valuation_date=VALUATION, expiry=EXPIRY, maturity=MATURITY,
                      marking_recovery=0.3, riskfree_rate=0.03, default_leg_names=100)
