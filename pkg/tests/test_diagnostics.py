import math

import numpy as np
import pytest

from convexflow import (
    AngularGrid,
    Circle,
    CurvatureProfile,
    DiagnosticsCollector,
    DiagnosticsSeries,
    Ellipse,
    FlowKind,
    FlowLaw,
    Margin,
    SampleRecord,
    TsoContext,
    entropy,
    generate,
    gradient_functional,
    inequality_audit,
    lambda_value,
    lower_bound_functional,
    random_convex,
    rate_formulas,
    to_csv,
    tso_quantity,
)
from convexflow import oracles
from convexflow.diagnostics import (
    AuditError,
    DEFAULT_BETAS,
    closure_violations,
    conservation_violations,
    entropy_direction,
    failed_margins,
    fit_decay_rate,
    margin_violations,
    monotonicity_violations,
    oscillation,
    psi_violations,
    rate_fd_pairs,
    rate_violations,
    tso_violations,
)
from convexflow.laws import power
from convexflow.spectral import FieldError, integrate_values

TWO_PI = 2.0 * math.pi

# frozen from the quadrature/closed-form oracles for the 2x1 ellipse
ELLIPSE21_PERIMETER = 9.688448220547676
ELLIPSE21_AREA = TWO_PI
ELLIPSE21_MEAN_K = 1.0561569375553084  # ellipse_curvature_integral(2,1,1)/2pi
# Tso constants of the 2x1 ellipse at alpha = 1
ELLIPSE21_SIGMA = 2.32524667917367
ELLIPSE21_BETA = 0.21503094896481545
ELLIPSE21_T1 = 0.09247661802541811
ELLIPSE21_Q0 = 86.50835390413087
# continuum max of k^2 + (k')^2, frozen from a 4e6-point closed-form scan;
# the maximizer sits at theta ~ 0.506, between any uniform grid's nodes
ELLIPSE21_PSI = 5.234684284149571

NONLOCAL = (FlowKind.LP, FlowKind.AP, FlowKind.G1, FlowKind.G2)


def series_of(kind=FlowKind.LP, alpha=1.0, tso=None, phi_enabled=False):
    return DiagnosticsSeries(FlowLaw(kind, alpha), tso, phi_enabled)


def record(t, **overrides):
    """SampleRecord with plausible circle-at-rest defaults."""
    base = dict(
        t=t, L=TWO_PI, A=math.pi, I=1.0, k_min=1.0, k_max=1.0, lam=1.0,
        closure_defect=0.0, r_in=1.0, r_out=1.0, dA_dt_formula=0.0,
        dL_dt_formula=0.0, Q_max=math.nan, Q_ok=False, Psi_max=math.nan,
        Phi_max=math.nan, entropy=math.nan, oscillation=0.0, margins={},
    )
    base.update(overrides)
    return SampleRecord(**base)


class TestTsoContext:
    def test_matches_quadrature_constants(self, ellipse21):
        ctx = TsoContext.from_initial(ellipse21, 1.0)
        L = oracles.ellipse_perimeter(2.0, 1.0)
        A = oracles.ellipse_area(2.0, 1.0)
        ref = oracles.tso_constants(A, L * L / (2.0 * TWO_PI * A), 1.0)
        assert ctx.alpha == 1.0
        assert ctx.sigma == pytest.approx(ref["sigma"], rel=1e-10)
        assert ctx.beta == pytest.approx(ref["beta"], rel=1e-10)
        assert ctx.T1 == pytest.approx(ref["T1"], rel=1e-10)
        assert ctx.Q0 == pytest.approx(ref["Q0"], rel=1e-10)

    def test_frozen_values(self, ellipse21):
        ctx = TsoContext.from_initial(ellipse21, 1.0)
        assert ctx.sigma == pytest.approx(ELLIPSE21_SIGMA, rel=1e-10)
        assert ctx.beta == pytest.approx(ELLIPSE21_BETA, rel=1e-10)
        assert ctx.T1 == pytest.approx(ELLIPSE21_T1, rel=1e-10)
        assert ctx.Q0 == pytest.approx(ELLIPSE21_Q0, rel=1e-10)

    def test_circle_closed_forms(self):
        # I = 1 collapses sigma to 1; beta, T1, Q0 reduce to powers of r
        kp = generate(Circle(r=2.0))
        ctx = TsoContext.from_initial(kp, 2.0)
        assert ctx.sigma == pytest.approx(1.0, rel=1e-6)
        assert ctx.beta == pytest.approx(2.0 ** (-1.0 / 3.0), rel=1e-6)
        assert ctx.T1 == pytest.approx(8.0 / 6.0, rel=1e-6)
        assert ctx.Q0 == pytest.approx(18.0, rel=1e-6)

    def test_bound_plateau_and_spike(self, ellipse21):
        ctx = TsoContext.from_initial(ellipse21, 1.0)
        assert ctx.bound_at(0.0) == math.inf
        assert ctx.bound_at(-1.0) == math.inf
        # late times sit on the plateau, early times on the 1/t spike
        assert ctx.bound_at(ctx.T1) == ctx.Q0
        t_knee = 1.0 / ((ctx.alpha + 1.0) * ctx.Q0)
        assert ctx.bound_at(0.1 * t_knee) == pytest.approx(10.0 * ctx.Q0)
        ts = np.linspace(1e-4, ctx.T1, 50)
        bounds = [ctx.bound_at(t) for t in ts]
        assert all(x >= y for x, y in zip(bounds, bounds[1:]))


class TestTsoQuantity:
    def test_circle_quotient(self):
        kp = generate(Circle(r=2.0))
        ctx = TsoContext(alpha=1.0, beta=0.5, sigma=1.0, T1=1.0, Q0=1.0)
        q, ok = tso_quantity(kp, ctx)
        assert q == pytest.approx(0.5 / 1.5, rel=1e-12)
        assert ok  # u = 2 >= 2*beta = 1

    def test_precondition_band(self):
        # beta < u_min < 2 beta: finite quotient, precondition not met
        kp = generate(Circle(r=1.0))
        ctx = TsoContext(alpha=1.0, beta=0.6, sigma=1.0, T1=1.0, Q0=1.0)
        q, ok = tso_quantity(kp, ctx)
        assert q == pytest.approx(2.5, rel=1e-12)
        assert not ok

    def test_support_at_offset_is_nan(self):
        kp = generate(Circle(r=1.0))
        for beta in (1.0, 1.5):
            ctx = TsoContext(alpha=1.0, beta=beta, sigma=1.0, T1=1.0, Q0=1.0)
            q, ok = tso_quantity(kp, ctx)
            assert math.isnan(q)
            assert not ok

    def test_ellipse_against_closed_forms(self, ellipse21, grid256):
        # centroid is the center, so support and curvature have closed forms
        ctx = TsoContext.from_initial(ellipse21, 1.0)
        q, ok = tso_quantity(ellipse21, ctx)
        assert ok
        k_ref = oracles.ellipse_curvature(2.0, 1.0, grid256.theta)
        u_ref = oracles.ellipse_support(2.0, 1.0, grid256.theta)
        assert q == pytest.approx((k_ref / (u_ref - ctx.beta)).max(), rel=1e-10)


class TestPointwiseFunctionals:
    def test_gradient_functional_circle(self):
        kp = generate(Circle(r=2.0))
        for alpha in (0.5, 1.0, 2.0):
            assert gradient_functional(kp, alpha) == pytest.approx(
                2.0 ** (-2.0 * alpha), rel=1e-13
            )

    def test_gradient_functional_perturbed(self, grid256):
        # k = 1 + eps*cos has exact spectral derivative; hand maximum
        eps = 0.05
        kp = CurvatureProfile(grid256, 1.0 + eps * np.cos(grid256.theta))
        assert gradient_functional(kp, 1.0) == pytest.approx(
            oracles.gradient_functional_perturbed(eps), rel=1e-12
        )

    def test_lower_bound_functional(self, unit_circle, ellipse21):
        assert abs(lower_bound_functional(0.0, unit_circle)) < 1e-14
        phi0 = lower_bound_functional(0.0, ellipse21)
        assert phi0 == pytest.approx(
            4.0 - oracles.ellipse_perimeter(2.0, 1.0) / TWO_PI, rel=1e-12
        )
        # the accumulated quadrature only shifts it down
        assert lower_bound_functional(0.7, ellipse21) == pytest.approx(
            phi0 - 0.7 / TWO_PI, rel=1e-12
        )
        assert math.isnan(lower_bound_functional(None, ellipse21))

    def test_oscillation(self, unit_circle, grid256):
        assert oscillation(unit_circle) == 0.0
        kp = CurvatureProfile(grid256, 2.0 + np.cos(grid256.theta))
        assert oscillation(kp) == pytest.approx(1.0, rel=1e-13)


class TestEntropy:
    @pytest.mark.parametrize(
        "kind,alpha,expect",
        [
            (FlowKind.LP, 1.0, 0),
            (FlowKind.LP, 0.5, 1),
            (FlowKind.LP, 3.0, -1),
            (FlowKind.AP, 0.5, 1),
            (FlowKind.AP, 1.0, -1),
            (FlowKind.AP, 3.0, -1),
            (FlowKind.G1, 2.0, None),
            (FlowKind.G2, 1.0, None),
            (FlowKind.CONTRACTION, 0.5, None),
        ],
    )
    def test_direction_table(self, kind, alpha, expect):
        assert entropy_direction(FlowLaw(kind, alpha)) == expect

    def test_lp_alpha_one_is_total_angle(self, ellipse21, unit_circle):
        for kp in (ellipse21, unit_circle):
            e = entropy(FlowLaw(FlowKind.LP, 1.0), kp)
            assert e.value == pytest.approx(TWO_PI, rel=1e-14)
            assert e.direction == 0

    def test_circle_closed_forms(self):
        kp = generate(Circle(r=2.0))
        e = entropy(FlowLaw(FlowKind.LP, 3.0), kp)
        assert e.value == pytest.approx(math.pi / 2.0, rel=1e-12)
        assert e.direction == -1
        e = entropy(FlowLaw(FlowKind.AP, 1.0), kp)
        assert e.value == pytest.approx(TWO_PI * math.log(TWO_PI), rel=1e-12)
        assert e.direction == -1
        e = entropy(FlowLaw(FlowKind.AP, 3.0), kp)
        assert e.value == pytest.approx(8.0 * math.pi**3, rel=1e-12)

    def test_other_laws_record_plain_integral(self, ellipse21):
        base = integrate_values(power(ellipse21.k, 2.0) * ellipse21.w)
        for kind in (FlowKind.G1, FlowKind.G2, FlowKind.CONTRACTION):
            e = entropy(FlowLaw(kind, 2.0), ellipse21)
            assert e.value == base
            assert e.direction is None


class TestRateFormulas:
    @pytest.mark.parametrize("kind", NONLOCAL)
    @pytest.mark.parametrize("alpha", [1.0, 2.5])
    def test_circle_is_stationary(self, kind, alpha):
        kp = generate(Circle(r=2.0))
        dA, dL = rate_formulas(FlowLaw(kind, alpha), kp)
        assert abs(dA) < 1e-12
        assert abs(dL) < 1e-12

    def test_contraction_circle_closed_form(self):
        kp = generate(Circle(r=2.0))
        dA, dL = rate_formulas(FlowLaw(FlowKind.CONTRACTION, 2.0), kp)
        assert dA == pytest.approx(-math.pi, rel=1e-13)
        assert dL == pytest.approx(-math.pi / 2.0, rel=1e-13)

    def test_conserved_rates_are_literal_zero(self, ellipse21):
        dA, dL = rate_formulas(FlowLaw(FlowKind.LP, 2.0), ellipse21)
        assert dL == 0.0
        assert dA > 0.0  # area grows while length holds
        dA, dL = rate_formulas(FlowLaw(FlowKind.AP, 2.0), ellipse21)
        assert dA == 0.0
        assert dL < 0.0  # length shrinks while area holds

    @pytest.mark.parametrize("kind", [*NONLOCAL, FlowKind.CONTRACTION])
    @pytest.mark.parametrize("seed", [3, 11])
    def test_matches_support_identities(self, kind, seed):
        # dA = integral (lam - v) w, dL = integral (lam - v); the conserving
        # laws hard-code their zero, which must agree with the identity
        alpha = 1.5
        kp = random_convex(seed)
        law = FlowLaw(kind, alpha)
        lam = lambda_value(law, kp).value
        v = power(kp.k, alpha)
        dA_id = integrate_values((lam - v) * kp.w)
        dL_id = TWO_PI * lam - integrate_values(v)
        dA, dL = rate_formulas(law, kp)
        scale = integrate_values(v * kp.w)
        assert dA == pytest.approx(dA_id, abs=1e-12 * scale)
        assert dL == pytest.approx(dL_id, abs=1e-12 * scale)


class TestInequalityAudit:
    @pytest.mark.parametrize("r", [1.0, 2.0])
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_circle_margins_vanish(self, r, alpha):
        margins = inequality_audit(generate(Circle(r=r)), alpha=alpha)
        assert failed_margins(margins) == []
        for name, m in margins.items():
            assert abs(m.value) <= 1e-12 * max(m.scale, 1e-300), name

    def test_holder_against_quadrature(self, ellipse21):
        margins = inequality_audit(ellipse21, alpha=1.0)
        expect = ELLIPSE21_MEAN_K - TWO_PI / ELLIPSE21_PERIMETER
        assert margins["holder"].value == pytest.approx(expect, rel=1e-9)
        assert margins["holder"].value == pytest.approx(
            oracles.ellipse_curvature_integral(2.0, 1.0, 1.0) / TWO_PI
            - TWO_PI / oracles.ellipse_perimeter(2.0, 1.0),
            rel=1e-9,
        )

    def test_exponent_families_against_quadrature(self, ellipse21):
        L = oracles.ellipse_perimeter(2.0, 1.0)
        A = oracles.ellipse_area(2.0, 1.0)
        Iq = lambda p: oracles.ellipse_curvature_integral(2.0, 1.0, p)
        margins = inequality_audit(ellipse21, alpha=1.0, betas=(2.0,))
        assert margins["ineq11_b2"].value == pytest.approx(
            (L / TWO_PI) * Iq(2.0) - Iq(1.0), rel=1e-9
        )
        assert margins["ineq22_b2"].value == pytest.approx(
            (2.0 * A / L) * Iq(3.0) - Iq(2.0), rel=1e-9
        )

    def test_gage_is_the_zeroth_exponent_case(self, ellipse21):
        margins = inequality_audit(ellipse21, alpha=1.0)
        assert margins["gage"].value == margins["ineq22_b0"].value
        assert margins["gage"].value > 0.0

    @pytest.mark.parametrize("seed", [0, 7, 19])
    @pytest.mark.parametrize("alpha", [1.0, 2.0])
    def test_sandwich_matches_lambda_differences(self, seed, alpha):
        kp = random_convex(seed)
        lam = {
            kind: lambda_value(FlowLaw(kind, alpha), kp).value for kind in NONLOCAL
        }
        margins = inequality_audit(kp, alpha=alpha)
        rel = 1e-12
        assert margins["holder"].value == pytest.approx(
            lam[FlowKind.LP] - lam[FlowKind.AP], rel=rel
        )
        assert margins["gage1_lower"].value == pytest.approx(
            lam[FlowKind.G1] - lam[FlowKind.AP], rel=rel
        )
        assert margins["gage1_upper"].value == pytest.approx(
            lam[FlowKind.LP] - lam[FlowKind.G1], rel=rel
        )
        assert margins["gage2_lower"].value == pytest.approx(
            lam[FlowKind.G2] - lam[FlowKind.AP], rel=rel
        )
        assert margins["gage2_upper"].value == pytest.approx(
            lam[FlowKind.LP] - lam[FlowKind.G2], rel=rel
        )

    def test_sandwich_absent_below_alpha_one(self, ellipse21):
        margins = inequality_audit(ellipse21, alpha=0.5)
        assert "gage1_lower" not in margins
        assert "gage2_upper" not in margins
        assert "holder" in margins

    @pytest.mark.parametrize("seed", [2, 13])
    @pytest.mark.parametrize("alpha", [0.7, 1.0, 2.0])
    def test_all_margins_nonnegative_on_fuzz(self, seed, alpha):
        kp = random_convex(seed, max_mode=8)
        assert failed_margins(inequality_audit(kp, alpha=alpha)) == []

    @pytest.mark.parametrize("alpha", [1.0, 2.0])
    def test_quadratic_margins_by_parseval(self, ellipse21, alpha):
        # coefficient-space route: no differentiation, Parseval core
        margins = inequality_audit(ellipse21, alpha=alpha)
        v = power(ellipse21.k, alpha)
        L = integrate_values(ellipse21.w)
        A = oracles.ellipse_area(2.0, 1.0)
        for name, lam in (
            ("lp", integrate_values(v) / TWO_PI),
            ("ap", integrate_values(v * ellipse21.w) / L),
        ):
            phi = v - lam
            core = oracles.fourier_quadratic_core(phi)
            dual1 = integrate_values(phi) ** 2 - TWO_PI * core
            dual2 = integrate_values(phi * ellipse21.w) ** 2 - 2.0 * A * core
            scale = margins[f"mink1_{name}"].scale
            assert margins[f"mink1_{name}"].value == pytest.approx(
                dual1, abs=1e-12 * scale
            )
            scale = margins[f"mink2_{name}"].scale
            assert margins[f"mink2_{name}"].value == pytest.approx(
                dual2, abs=1e-12 * scale
            )

    def test_user_phi_unit_function(self, ellipse21, grid256):
        # phi = 1: the first margin is an identity, the second is the
        # isoperimetric deficit L^2 - 4 pi A
        margins = inequality_audit(
            ellipse21, alpha=1.0, phis={"unit": np.ones(grid256.n)}
        )
        m1 = margins["mink1_unit"]
        assert abs(m1.value) <= 1e-12 * m1.scale
        L = oracles.ellipse_perimeter(2.0, 1.0)
        A = oracles.ellipse_area(2.0, 1.0)
        assert margins["mink2_unit"].value == pytest.approx(
            L * L - 2.0 * TWO_PI * A, rel=1e-9
        )

    def test_user_phi_wrong_length(self, ellipse21):
        with pytest.raises(FieldError):
            inequality_audit(ellipse21, phis={"bad": np.ones(100)})

    def test_negative_beta_rejected(self, ellipse21):
        with pytest.raises(AuditError, match="beta exponents"):
            inequality_audit(ellipse21, betas=(1.0, -0.5))

    def test_nonpositive_alpha_rejected(self, ellipse21):
        # every audited inequality presumes a positive exponent; margins
        # for alpha <= 0 would print as meaningless FAILs
        for alpha in (0.0, -1.0, math.nan):
            with pytest.raises(AuditError, match="positive"):
                inequality_audit(ellipse21, alpha=alpha)

    def test_margin_ok_threshold(self):
        assert Margin(-1e-10, 1.0).ok()
        assert not Margin(-1e-8, 1.0).ok()
        assert Margin(-1e-8, 1.0).ok(rtol=1e-7)


class TestCollector:
    def test_unknown_audit_named(self, ellipse21):
        with pytest.raises(AuditError, match="bogus"):
            DiagnosticsCollector(
                FlowLaw(FlowKind.LP, 1.0), ellipse21, audits=("rates", "bogus")
            )

    def test_full_collection(self, ellipse21):
        coll = DiagnosticsCollector(FlowLaw(FlowKind.LP, 1.0), ellipse21)
        rec = coll.collect(0.0, ellipse21, s_accum=0.0)
        assert rec.L == pytest.approx(ELLIPSE21_PERIMETER, rel=1e-10)
        assert rec.A == pytest.approx(ELLIPSE21_AREA, rel=1e-10)
        assert rec.lam == pytest.approx(ELLIPSE21_MEAN_K, rel=1e-9)
        assert rec.Q_ok
        assert rec.entropy == pytest.approx(TWO_PI, rel=1e-13)
        assert rec.Phi_max == pytest.approx(4.0 - rec.L / TWO_PI, rel=1e-12)
        # the gradient term peaks between the tips, off any uniform grid
        assert rec.Psi_max == pytest.approx(ELLIPSE21_PSI, rel=1e-8)
        assert set(coll.series.margin_names) >= {"holder", "gage", "andrews"}

    def test_disabled_audits_record_nan(self, ellipse21):
        coll = DiagnosticsCollector(
            FlowLaw(FlowKind.LP, 1.0), ellipse21, audits=("rates",)
        )
        rec = coll.collect(0.0, ellipse21, s_accum=0.0)
        for name in ("r_in", "r_out", "Q_max", "Psi_max", "Phi_max", "entropy"):
            assert math.isnan(getattr(rec, name)), name
        assert not rec.Q_ok
        assert rec.margins == {}
        assert not math.isnan(rec.dA_dt_formula)
        assert coll.series.tso is None
        assert coll.series.column_names()[-1] == "oscillation"

    def test_phi_needs_accumulator(self, ellipse21):
        coll = DiagnosticsCollector(FlowLaw(FlowKind.LP, 1.0), ellipse21)
        rec = coll.collect(0.0, ellipse21)  # no s_accum available
        assert math.isnan(rec.Phi_max)

    def test_time_must_increase(self, ellipse21):
        coll = DiagnosticsCollector(FlowLaw(FlowKind.LP, 1.0), ellipse21)
        coll.collect(0.1, ellipse21)
        with pytest.raises(AuditError, match="increase"):
            coll.collect(0.1, ellipse21)

    def test_column_access(self, ellipse21, unit_circle):
        coll = DiagnosticsCollector(FlowLaw(FlowKind.AP, 1.0), ellipse21)
        r0 = coll.collect(0.0, ellipse21)
        r1 = coll.collect(0.5, unit_circle)
        series = coll.series
        assert np.array_equal(series.column("t"), [0.0, 0.5])
        assert np.array_equal(series.column("lambda"), [r0.lam, r1.lam])
        got = series.column("margin_holder")
        assert got[0] == r0.margins["holder"].value
        assert got[1] == r1.margins["holder"].value
        with pytest.raises(AttributeError):
            series.column("no_such_column")


class TestCsv:
    def test_round_trip(self, ellipse21, unit_circle):
        coll = DiagnosticsCollector(FlowLaw(FlowKind.LP, 1.0), ellipse21)
        coll.collect(0.0, ellipse21, s_accum=0.0)
        coll.collect(0.25, unit_circle, s_accum=0.3)
        text = to_csv(coll.series)
        assert text.startswith("t,L,A,")
        names = coll.series.column_names()
        parsed = np.genfromtxt(
            text.splitlines(), delimiter=",", names=True, deletechars=""
        )
        assert parsed.dtype.names == names
        for name in names:
            col = coll.series.column(name)
            if name == "Q_ok":
                col = np.array([1.0 if s.Q_ok else 0.0 for s in coll.series])
            back = parsed[name]
            both_nan = np.isnan(col) & np.isnan(back)
            assert np.array_equal(col[~both_nan], back[~both_nan]), name


class TestSeriesAudits:
    def test_monotone_clean_and_flagged(self):
        s = series_of(FlowKind.LP, 2.0)
        s.append(record(0.0, I=1.2, entropy=5.0))
        s.append(record(0.1, I=1.1, entropy=4.0))
        s.append(record(0.2, I=1.05, entropy=3.5))
        assert monotonicity_violations(s) == []
        s = series_of(FlowKind.LP, 2.0)
        s.append(record(0.0, I=1.1, entropy=5.0))
        s.append(record(0.1, I=1.2, entropy=6.0))
        out = monotonicity_violations(s)
        assert len(out) == 2
        assert any("isoperimetric" in msg for msg in out)
        assert any("entropy" in msg for msg in out)

    def test_monotone_directions_by_law(self):
        # G1 adds length down / area up; contraction drops the ratio check
        s = series_of(FlowKind.G1, 1.0)
        s.append(record(0.0, L=6.0, A=3.0))
        s.append(record(0.1, L=6.1, A=2.9))
        out = monotonicity_violations(s)
        assert any("length" in msg for msg in out)
        assert any("area" in msg for msg in out)
        s = series_of(FlowKind.CONTRACTION, 1.0)
        s.append(record(0.0, I=1.0))
        s.append(record(0.1, I=1.5))
        assert monotonicity_violations(s) == []

    def test_monotone_tolerates_roundoff(self):
        s = series_of(FlowKind.LP, 1.0)
        s.append(record(0.0, I=1.1))
        s.append(record(0.1, I=1.1 * (1.0 + 1e-13)))
        assert monotonicity_violations(s) == []

    def test_phi_checked_only_when_enabled(self):
        for enabled, expect in ((True, 1), (False, 0)):
            s = series_of(FlowKind.LP, 1.0, phi_enabled=enabled)
            s.append(record(0.0, Phi_max=0.5))
            s.append(record(0.1, Phi_max=0.6))
            assert len(monotonicity_violations(s)) == expect

    def test_psi_running_max(self):
        s = series_of(FlowKind.LP, 1.0)
        s.append(record(0.0, Psi_max=4.0, k_max=2.0))
        s.append(record(0.1, Psi_max=3.0, k_max=1.5))
        s.append(record(0.2, Psi_max=3.9, k_max=1.2))
        assert psi_violations(s) == []
        s = series_of(FlowKind.LP, 1.0)
        s.append(record(0.0, Psi_max=4.0, k_max=2.0))
        s.append(record(0.1, Psi_max=4.5, k_max=1.5))
        assert len(psi_violations(s)) == 1
        # a growing curvature maximum raises the allowance
        s = series_of(FlowKind.LP, 1.0)
        s.append(record(0.0, Psi_max=4.0, k_max=2.0))
        s.append(record(0.1, Psi_max=8.9, k_max=3.0))
        assert psi_violations(s) == []

    def test_psi_skipped_when_disabled(self):
        s = series_of(FlowKind.LP, 1.0)
        s.append(record(0.0, Psi_max=math.nan, k_max=2.0))
        s.append(record(0.1, Psi_max=math.nan, k_max=9.0))
        assert psi_violations(s) == []

    def test_tso_bound(self):
        ctx = TsoContext(alpha=1.0, beta=0.1, sigma=1.0, T1=1.0, Q0=5.0)
        s = series_of(FlowKind.LP, 1.0, tso=ctx)
        s.append(record(0.0, Q_max=100.0, Q_ok=True))  # t = 0 exempt
        s.append(record(0.2, Q_max=2.49, Q_ok=True))  # spike allows 2.5
        s.append(record(0.6, Q_max=4.9, Q_ok=True))  # plateau allows 5
        s.append(record(0.8, Q_max=50.0, Q_ok=False))  # precondition lost
        s.append(record(2.0, Q_max=50.0, Q_ok=True))  # past T1
        assert tso_violations(s) == []
        s = series_of(FlowKind.LP, 1.0, tso=ctx)
        s.append(record(0.6, Q_max=5.1, Q_ok=True))
        assert len(tso_violations(s)) == 1

    def test_tso_asserted_for_conserving_laws_only(self):
        ctx = TsoContext(alpha=1.0, beta=0.1, sigma=1.0, T1=1.0, Q0=5.0)
        s = series_of(FlowKind.G1, 1.0, tso=ctx)
        s.append(record(0.5, Q_max=1e9, Q_ok=True))
        assert tso_violations(s) == []

    def test_margin_violations(self):
        s = series_of()
        s.append(record(0.0, margins={"holder": Margin(-1.0, 1.0)}))
        out = margin_violations(s)
        assert len(out) == 1 and "holder" in out[0]

    def test_conservation(self):
        s = series_of(FlowKind.LP, 1.0)
        s.append(record(0.0, L=TWO_PI))
        s.append(record(0.1, L=TWO_PI * (1.0 + 2e-6)))
        assert len(conservation_violations(s)) == 1
        assert conservation_violations(s, rtol=1e-5) == []
        # AP watches area instead, G1 watches neither
        s = series_of(FlowKind.AP, 1.0)
        s.append(record(0.0, L=TWO_PI, A=math.pi))
        s.append(record(0.1, L=5.0, A=math.pi * (1.0 + 2e-6)))
        assert len(conservation_violations(s)) == 1
        s = series_of(FlowKind.G1, 1.0)
        s.append(record(0.0, L=TWO_PI, A=math.pi))
        s.append(record(0.1, L=5.0, A=4.0))
        assert conservation_violations(s) == []

    def test_closure(self):
        s = series_of()
        s.append(record(0.0, L=TWO_PI, closure_defect=0.0))
        s.append(record(0.1, closure_defect=TWO_PI * 2e-6))
        assert len(closure_violations(s)) == 1
        assert closure_violations(s, rtol=1e-5) == []


class TestRateAudit:
    @staticmethod
    def exp_series(h, n):
        # L = A = exp(t) with exact rate columns
        s = series_of(FlowKind.G1, 1.0)
        for j in range(n):
            t = j * h
            s.append(
                record(
                    t, L=math.exp(t), A=math.exp(t),
                    dL_dt_formula=math.exp(t), dA_dt_formula=math.exp(t),
                )
            )
        return s

    def test_pairs_agree_to_fourth_order(self):
        s = self.exp_series(0.05, 9)
        fd, avg = rate_fd_pairs(s, "L")
        assert len(fd) == 7
        # both sides carry the same h^2/6 term; the residual is h^4/180
        diff = np.abs(fd - avg)
        assert diff.max() < 1e-7
        assert diff.max() > 1e-9
        assert rate_violations(s) == []

    def test_unequal_spacing_skipped(self):
        s = self.exp_series(0.05, 5)
        s.append(record(0.33, L=math.exp(0.33), A=math.exp(0.33),
                        dL_dt_formula=math.exp(0.33), dA_dt_formula=math.exp(0.33)))
        fd, _ = rate_fd_pairs(s, "L")
        assert len(fd) == 3  # interior points flanked by equal steps only

    def test_corrupt_formula_flagged(self):
        s = self.exp_series(0.05, 9)
        bad = s[4]
        s.samples[4] = record(
            bad.t, L=bad.L, A=bad.A,
            dL_dt_formula=bad.dL_dt_formula * 1.01,
            dA_dt_formula=bad.dA_dt_formula,
        )
        assert any("dL/dt" in msg for msg in rate_violations(s))
        assert not any("dA/dt" in msg for msg in rate_violations(s))

    def test_bad_quantity(self):
        with pytest.raises(AuditError, match="'L' or 'A'"):
            rate_fd_pairs(self.exp_series(0.1, 4), "I")


class TestDecayRate:
    def test_recovers_exponential_rate(self):
        s = series_of()
        for t in np.linspace(0.0, 3.0, 40):
            s.append(record(t, k_min=1.0, k_max=1.0 + math.exp(-3.0 * t)))
        assert fit_decay_rate(s) == pytest.approx(-3.0, rel=1e-9)

    def test_uses_final_decade_only(self):
        # early plateau would bias the fit; the cutoff must exclude it
        s = series_of()
        for t in np.linspace(0.0, 1.0, 10):
            s.append(record(t, k_min=1.0, k_max=2.0))
        for t in np.linspace(1.1, 4.0, 30):
            s.append(record(t, k_min=1.0, k_max=1.0 + math.exp(-2.0 * (t - 1.0))))
        assert fit_decay_rate(s) == pytest.approx(-2.0, rel=1e-6)

    def test_degenerate_series(self):
        s = series_of()
        for t in (0.0, 0.1, 0.2):
            s.append(record(t, k_min=1.0, k_max=1.0 + math.exp(-t)))
        assert math.isnan(fit_decay_rate(s))  # too few points
        s = series_of()
        for t in (0.0, 0.1, 0.2, 0.3, 0.4):
            s.append(record(t, k_min=1.0, k_max=1.0))
        assert math.isnan(fit_decay_rate(s))  # gap identically zero
