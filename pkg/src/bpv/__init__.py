"""Behavioural present value: fuzzy present values, investor stances, fuzzy returns."""

from bpv.acceptance import (
    MembershipCurve,
    ReferenceDistribution,
    acceptance,
    alpha_cut,
    membership,
    membership_curve,
    membership_printed,
    rational_forecast,
    trapezoidal_reference,
    triangular_reference,
    validate_reference,
)
from bpv.market import (
    BalanceReport,
    CoexistenceBand,
    Stance,
    StanceResult,
    coexistence_interval,
    market_report,
    stance,
)
from bpv.numerics import (
    QuadratureSpec,
    RootSpec,
    ThresholdResult,
    average_ppv,
    bisect,
    integrate,
    solve_stance_threshold,
    stance_gap,
)
from bpv.profile import (
    InvestorProfile,
    MarketContext,
    Regime,
    ScopeInterval,
    classify_regime,
    destandardize,
    deviation,
    regime_bounds,
    scope,
    standardize,
)
from bpv.returns import (
    FutureValueModel,
    HirotoSet,
    ReturnKind,
    expected_membership,
    future_value_cdf,
    hiroto_membership,
    invert_present_value,
    return_rate,
    sample_hiroto,
)

__version__ = "0.1.0"
