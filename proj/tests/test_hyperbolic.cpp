#include <cmath>
#include <random>

#include "doctest.h"
#include "spk/hyperbolic.hpp"

using namespace spk;

namespace {

const double kPi = std::acos(-1.0);

// sup |K + 1| over nodes where the curvature stencil exists, restricted to r in [lo, hi]
double curvature_defect(const HyperbolicMetric& m, double lo, double hi) {
    auto K = gauss_curvature(m);
    double worst = 0.0;
    for (size_t c = 0; c < m.charts.size(); ++c) {
        const auto& ch = m.charts[c].chart;
        for (size_t k = 0; k < K[c].size(); ++k) {
            if (!std::isfinite(K[c][k])) continue;
            double r = std::abs(ch.point(k) - (ch.is_log_polar() ? ch.lp.center : Complex(0.0)));
            if (r < lo || r > hi) continue;
            worst = std::max(worst, std::abs(K[c][k] + 1.0));
        }
    }
    return worst;
}

double sup_error_vs_model(const HyperbolicMetric& m, ModelKind kind, double alpha) {
    const auto& cf = m.charts[0];
    double err = 0.0;
    for (size_t k = 0; k < cf.v.size(); ++k) {
        double r = std::abs(cf.chart.point(k));
        err = std::max(err, std::abs(cf.v[k] - model_v(kind, alpha, r)));
    }
    return err;
}

HyperbolicMetric disc_solve(ModelKind kind, double alpha, int n, InsetCondition ic = InsetCondition::Asymptotic) {
    LiouvilleOptions o;
    o.n_rho = o.n_theta = n;
    o.tol = 1e-10;
    o.inset_condition = ic;
    auto p = kind == ModelKind::Cusp ? SingularityPrescription::cusp(CPoint::finite(0, 0))
                                     : SingularityPrescription::conical(CPoint::finite(0, 0), alpha);
    return solve_liouville({p}, DiscChart{0.5}, o);
}

}  // namespace

TEST_CASE("model metrics take their closed-form values") {
    auto cusp = model_metric(ModelKind::Cusp, 0.0, 0.5);
    REQUIRE(cusp.closed_form.has_value());
    CHECK(std::exp(2.0 * model_v(ModelKind::Cusp, 0.0, std::exp(-1.0))) == doctest::Approx(std::exp(2.0)).epsilon(1e-14));
    double e2v = std::exp(2.0 * model_v(ModelKind::Conical, 2.0, 0.5));
    CHECK(e2v == doctest::Approx(16.0 * 0.25 / (0.9375 * 0.9375)).epsilon(1e-14));
    CHECK(e2v == doctest::Approx(4.551).epsilon(1e-3));
    // grid values are the closed form at the node radius
    const auto& cf = cusp.charts[0];
    for (size_t k = 0; k < cf.v.size(); k += 997)
        CHECK(cf.v[k] == doctest::Approx(model_v(ModelKind::Cusp, 0.0, std::abs(cf.chart.point(k)))).epsilon(1e-12));
}

TEST_CASE("model metric rejects bad parameters") {
    CHECK_THROWS_AS(model_metric(ModelKind::Conical, 1.0, 0.5), Error);
    try {
        model_metric(ModelKind::Conical, -0.5, 0.5);
        FAIL("expected InvalidAlpha");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidAlpha);
    }
    CHECK_THROWS_AS(model_metric(ModelKind::Cusp, 0.0, 1.0), Error);
}

TEST_CASE("discrete curvature of the models is -1") {
    // the cusp profile steepens as log r -> 0, so stay inside r = 0.4
    CHECK(curvature_defect(model_metric(ModelKind::Cusp, 0.0, 0.5, ModelGrid{256, 256, 1e-3}), 0.0, 0.4) < 1e-6);
    // e^{-2v} ~ r^{2-2a} amplifies rounding in v near a large cone point, so the
    // cone check uses an annulus where the metric is not tiny
    ModelGrid g{256, 256, 0.1};
    for (double a : {0.5, 2.0, 3.0}) {
        CAPTURE(a);
        CHECK(curvature_defect(model_metric(ModelKind::Conical, a, 0.5, g), 0.2, 1.0) < 1e-6);
    }
}

TEST_CASE("flat field has zero curvature") {
    CartesianGrid g{-1.0, -1.0, 2.0 / 63, 64};
    auto m = metric_from_function(Chart::cartesian(g), [](Complex) { return 0.0; }, "flat");
    auto K = gauss_curvature(m);
    int seen = 0;
    for (double k : K[0])
        if (std::isfinite(k)) {
            CHECK(k == 0.0);
            ++seen;
        }
    CHECK(seen > 0);
}

TEST_CASE("cusp annulus area matches the antiderivative -1/log r") {
    auto m = model_metric(ModelKind::Cusp, 0.0, 0.5);
    double a = area(m, AnnulusRegion{{0, 0}, 1e-3, std::exp(-1.0)});
    double exact = 2.0 * kPi * (1.0 - 1.0 / std::log(1e3));
    CHECK(a == doctest::Approx(exact).epsilon(1e-7));
    CHECK(exact / (2.0 * kPi) == doctest::Approx(0.8552).epsilon(1e-4));
    // whole punctured disc of radius 0.5: 2 pi / log 2
    CHECK(area(m, AnnulusRegion{{0, 0}, 0.0, 0.5}) == doctest::Approx(2.0 * kPi / std::log(2.0)).epsilon(1e-7));
    // conical over the whole disc: 2 pi * 2 alpha r^{2a} / (1 - r^{2a})
    double al = 2.0, r = 0.5;
    auto c = model_metric(ModelKind::Conical, al, r);
    double cexact = 2.0 * kPi * 2.0 * al * std::pow(r, 2 * al) / (1.0 - std::pow(r, 2 * al));
    CHECK(area(c) == doctest::Approx(cexact).epsilon(1e-6));
    // the part inside the inset comes from the first integral alone
    double r0 = 1e-3, x = std::pow(r0, 2 * al);
    CHECK(area(c, AnnulusRegion{{0, 0}, 0.0, r0}) == doctest::Approx(2.0 * kPi * 2.0 * al * x / (1.0 - x)).epsilon(1e-12));
}

TEST_CASE("area of a vanishing metric is zero and foreign regions are rejected") {
    CartesianGrid g{-1.0, -1.0, 2.0 / 31, 32};
    auto m = metric_from_function(Chart::cartesian(g), [](Complex) { return -INFINITY; }, "zero");
    CHECK(area(m) == 0.0);
    auto cusp = model_metric(ModelKind::Cusp, 0.0, 0.5);
    try {
        area(cusp, AnnulusRegion{{0, 0}, 0.1, 0.9});
        FAIL("expected RegionOutsideChart");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RegionOutsideChart);
    }
    CHECK_THROWS_AS(area(cusp, AnnulusRegion{{0.3, 0}, 0.01, 0.1}), Error);
}

TEST_CASE("sphere admissibility") {
    auto code_of = [](const std::vector<SingularityPrescription>& ps) {
        try {
            check_admissible(ps);
            return ErrorCode::InvalidArgument;  // sentinel meaning "accepted"
        } catch (const Error& e) {
            return e.code();
        }
    };
    auto pt = [](double x) { return CPoint::finite(x, 0.0); };
    CHECK(code_of({SingularityPrescription::conical(pt(0), 3.0)}) == ErrorCode::NonAdmissible);
    CHECK(code_of({SingularityPrescription::cusp(pt(0)), SingularityPrescription::cusp(pt(1))}) ==
          ErrorCode::NonAdmissible);
    CHECK(code_of({SingularityPrescription::conical(pt(0), 0.0)}) == ErrorCode::InvalidAlpha);
    CHECK_NOTHROW(check_admissible({SingularityPrescription::cusp(pt(0)), SingularityPrescription::cusp(pt(1)),
                                    SingularityPrescription::cusp(CPoint::infinity())}));
    // exact boundary: sum(alpha-1)+2 = 0 is rejected
    CHECK(code_of({SingularityPrescription::conical(pt(0), 0.5), SingularityPrescription::conical(pt(1), 0.5),
                   SingularityPrescription::conical(pt(2), 0.5), SingularityPrescription::conical(pt(3), 0.5)}) ==
          ErrorCode::NonAdmissible);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(0.05, 3.0);
    for (int t = 0; t < 200; ++t) {
        std::vector<SingularityPrescription> ps;
        double s = 2.0;
        int n = 1 + t % 5;
        for (int j = 0; j < n; ++j) {
            double a = U(rng);
            if (std::abs(a - 1.0) < 1e-3) a = 0.5;
            bool cusp = rng() % 3 == 0;
            ps.push_back(cusp ? SingularityPrescription::cusp(pt(j)) : SingularityPrescription::conical(pt(j), a));
            s += (cusp ? 0.0 : a) - 1.0;
        }
        CAPTURE(s);
        CHECK((code_of(ps) == ErrorCode::NonAdmissible) == (s >= 0.0));
    }
}

TEST_CASE("disc solves reproduce the closed forms and converge at fourth order") {
    struct Case {
        ModelKind kind;
        double alpha;
    };
    for (Case c : {Case{ModelKind::Cusp, 0.0}, Case{ModelKind::Conical, 0.5}, Case{ModelKind::Conical, 2.0},
                   Case{ModelKind::Conical, 3.0}}) {
        CAPTURE(c.alpha);
        auto coarse = disc_solve(c.kind, c.alpha, 128);
        auto fine = disc_solve(c.kind, c.alpha, 256);
        double e1 = sup_error_vs_model(coarse, c.kind, c.alpha), e2 = sup_error_vs_model(fine, c.kind, c.alpha);
        CHECK(e2 < 1e-6);
        CHECK(e1 / e2 > 3.0);
        CHECK(fine.stats.monotone);
        CHECK(fine.stats.final_residual <= 1e-10);
        for (size_t k = 1; k < fine.stats.residual_history.size(); ++k)
            CHECK(fine.stats.residual_history[k] <= fine.stats.residual_history[k - 1]);
        // fourth-order differences of the solved field; the truncation floor is
        // about h^4 (2 alpha)^4 / 90 on this grid
        CHECK(curvature_defect(fine, 0.1, 0.45) < 1e-5);
    }
}

TEST_CASE("model Dirichlet inset agrees with the asymptotic inset") {
    auto a = disc_solve(ModelKind::Conical, 2.0, 128, InsetCondition::ModelDirichlet);
    CHECK(sup_error_vs_model(a, ModelKind::Conical, 2.0) < 1e-5);
    auto b = disc_solve(ModelKind::Cusp, 0.0, 128, InsetCondition::ModelDirichlet);
    CHECK(sup_error_vs_model(b, ModelKind::Cusp, 0.0) < 1e-5);
}

TEST_CASE("disc solve error paths") {
    LiouvilleOptions o;
    o.n_rho = o.n_theta = 16;  // 15 nodes over 2.7 decades
    try {
        solve_liouville({SingularityPrescription::cusp(CPoint::finite(0, 0))}, DiscChart{0.5}, o);
        FAIL("expected GridTooCoarse");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::GridTooCoarse);
    }
    o.n_rho = o.n_theta = 64;
    o.max_iter = 1;
    o.tol = 1e-12;
    CHECK_THROWS_AS(solve_liouville({SingularityPrescription::cusp(CPoint::finite(0, 0))}, DiscChart{0.5}, o),
                    NoConvergenceError);
    LiouvilleOptions ok;
    ok.n_rho = ok.n_theta = 64;
    CHECK_THROWS_AS(solve_liouville({SingularityPrescription::conical(CPoint::finite(0, 0), 1.0)}, DiscChart{}, ok),
                    Error);
}

TEST_CASE("three-cusp sphere has area 2 pi") {
    LiouvilleOptions o;
    o.n_rho = o.n_theta = 128;
    o.n_cart = 256;
    o.coarse_start = false;
    std::vector<SingularityPrescription> ps;
    for (int k = 0; k < 3; ++k) ps.push_back(SingularityPrescription::cusp(CPoint::finite(std::polar(1.0, 2 * kPi * k / 3))));
    auto m = solve_liouville(ps, SphereChart{}, o);
    CHECK(area(m) / (2.0 * kPi) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(m.stats.monotone);
    CHECK(m.stats.final_residual <= o.tol);
    // the metric is invariant under rotation by the cube root of unity
    Complex w = std::polar(1.0, 2 * kPi / 3);
    for (Complex z : {Complex(0.3, 0.1), Complex(-0.5, 0.4), Complex(1.7, -0.6)}) {
        CAPTURE(z);
        CHECK(m.v_at(Frame::Z, z) == doctest::Approx(m.v_at(Frame::Z, w * z)).epsilon(1e-5));
    }
    // inversion z -> 1/z is an isometry fixing the cusp set, so v_w = v_z pointwise
    for (Complex z : {Complex(0.4, 0.25), Complex(-0.9, 0.3)}) {
        CAPTURE(z);
        CHECK(m.v_at(Frame::W, z) == doctest::Approx(m.v_at(Frame::Z, z)).epsilon(1e-5));
    }
}
