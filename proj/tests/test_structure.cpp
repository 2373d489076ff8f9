#include <cmath>
#include <cstring>
#include <random>

#include "doctest.h"
#include "spk/structure.hpp"

using namespace spk;

namespace {

const double kPi = std::acos(-1.0);

LogPolarGrid model_grid(int n) { return {{0.0, 0.0}, std::log(0.05), std::log(0.9), n, n}; }

VerifyOptions annulus(double r0, double r1) {
    VerifyOptions o;
    o.region = AnnulusRegion{{0.0, 0.0}, r0, r1};
    o.fit_orders = false;
    return o;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("sampled models pass every check") {
    std::vector<ModelStructure> models{log_model(-2, 1.0), log_model(0, Complex(0, 1)), log_model(3, Complex(2, 1)),
                                       cone_model(-3.0), cone_model(2.0)};
    for (const auto& m : models) {
        CAPTURE(m.describe());
        auto s = sample_model(m, model_grid(512));
        auto rep = verify(s, annulus(0.1, 0.8));
        CAPTURE(rep.to_json().dump());
        CHECK(rep.pass());
        CHECK(rep.residual_pde < 1e-5);
        CHECK(rep.residual_flat < 1e-5);
        CHECK(rep.residual_torsion < 1e-5);
        CHECK(rep.residual_trace < 1e-5);
        CHECK(rep.residual_harmonic < 1e-5);
        CHECK(rep.curvature_identity < 1e-5);
        CHECK(rep.degenerate_identity == (m.kind() == ModelStructure::Kind::Cone));
    }
}

TEST_CASE("corrupted structures fail") {
    auto s = sample_model(log_model(1, 1.0), model_grid(256));
    auto bad = s;
    auto& cs = bad.charts[0];
    for (size_t k = 0; k < cs.u.size(); ++k) cs.u[k] += 0.05 * std::sin(3.0 * cs.chart.coords(k).second);
    auto rep = verify(bad, annulus(0.1, 0.8));
    CHECK_FALSE(rep.pass());
    CHECK_FALSE(rep.check("pde")->pass);
    CHECK_FALSE(rep.check("trace")->pass);

    auto tw = s;
    for (auto& v : tw.charts[0].omega.w[0][1][0]) v += 0.01;
    auto r2 = verify(tw, annulus(0.1, 0.8));
    CHECK_FALSE(r2.check("torsion")->pass);
    CHECK_FALSE(r2.check("flat")->pass);
    CHECK(r2.check("pde")->pass);

    CHECK_THROWS_AS(verify(s, annulus(2.0, 3.0)), Error);
}

TEST_CASE("assembling the closed-form cusp metric with 1/z^2") {
    auto g = model_metric(ModelKind::Cusp, 0.0, 0.5, ModelGrid{512, 256, 1e-3});
    auto xi = CubicDifferential::rational(Rational::from_factors(1.0, {{0.0, -2}}));
    auto s = assemble(g, xi);
    CHECK(s.complete());
    // 1/z^2 also has a pole of order 4 at infinity
    REQUIRE(s.punctures.size() == 2);
    CHECK(s.punctures[1].is_infinity());
    CHECK(s.a[0] == doctest::Approx(0.0));
    auto rep = verify(s);
    CAPTURE(rep.to_json().dump());
    CHECK(rep.residual_pde < 1e-6);
    CHECK(rep.residual_flat < 1e-5);
    CHECK(rep.residual_harmonic < 1e-6);
    REQUIRE(rep.order_fits.size() >= 1);
    // cusp with ord Xi = -2: (n + 1)/2
    CHECK(rep.order_fits[0].order == doctest::Approx(-0.5).epsilon(0.02 / 0.5));
    CHECK(rep.order_fits[0].type == SingularityType::Logarithmic);

    auto back = extract_cubic_fit(s);
    CHECK(back.fit_residual < 1e-6);
    for (Complex z : {Complex(0.2, 0.1), Complex(-0.05, 0.3)})
        CHECK(std::abs(back.xi.eval(z) - xi.eval(z)) / std::abs(xi.eval(z)) < 1e-8);
}

TEST_CASE("residue weights and harmonic potential") {
    // Xi_0 = (i/4 + 0.3)/z: A = residue, a = 4 Re A, h = -4 Im A log r
    Complex A(0.3, 0.25);
    auto g = model_metric(ModelKind::Cusp, 0.0, 0.5, ModelGrid{256, 128, 1e-3});
    auto s = assemble(g, CubicDifferential::rational(Rational::from_factors(A, {{0.0, -1}})));
    REQUIRE(s.a.size() == 2);
    CHECK(s.a[0] == doctest::Approx(4 * A.real()));
    const auto& cs = s.charts[0];
    size_t k1 = cs.chart.idx(10, 3), k2 = cs.chart.idx(200, 70);
    double r1 = std::abs(cs.chart.point(k1)), r2 = std::abs(cs.chart.point(k2));
    CHECK(cs.h[k1] - cs.h[k2] == doctest::Approx(-4 * A.imag() * std::log(r1 / r2)).epsilon(1e-10));
}

TEST_CASE("connection_form reproduces the log model") {
    auto m = log_model(2, Complex(1.0, -0.5));
    auto g = model_grid(512);
    auto s = sample_model(m, g);
    const auto& cs = s.charts[0];
    auto W = connection_form(cs.chart, cs.u, cs.h, cs.a, cs.punctures, calibrated_star());
    double worst = 0.0;
    for (int i = 4; g.rho(i) < std::log(0.8); ++i)
        for (int j = 0; j < g.n_theta; j += 7) {
            size_t k = g.idx(i, j);
            REQUIRE(W.ok[k]);
            for (int p = 0; p < 2; ++p)
                for (int q = 0; q < 2; ++q)
                    for (int c = 0; c < 2; ++c)
                        worst = std::max(worst, std::abs(W.w[p][q][c][k] - cs.omega.w[p][q][c][k]));
        }
    CHECK(worst < 1e-6);

    // constant h, a = 0: only the -du/2 part remains
    std::vector<double> h(cs.u.size(), 3.0);
    auto W0 = connection_form(cs.chart, cs.u, h, {}, {}, StarOrientation::Plus);
    size_t k = g.idx(100, 5);
    CHECK(W0.w[0][0][0][k] == doctest::Approx(W0.w[1][1][0][k]));
    CHECK(W0.w[0][0][0][k] == doctest::Approx(-0.5 * m.du(g.rho(100), 0.0)[0]).epsilon(1e-8));

    try {
        connection_form(cs.chart, cs.u, cs.h, cs.a, cs.punctures, std::nullopt);
        FAIL("expected NotCalibrated");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotCalibrated);
    }
}

TEST_CASE("associated metric round trip") {
    auto g = model_metric(ModelKind::Conical, 2.0, 0.5, ModelGrid{128, 64, 1e-3});
    auto xi = CubicDifferential::rational(Rational::from_factors(Complex(0.5, 1.0), {{0.0, 1}, {0.7, -1}}));
    auto s = assemble(g, xi);
    auto back = associated_hyperbolic(s);
    double worst = 0.0;
    for (size_t k = 0; k < g.charts[0].v.size(); ++k)
        if (s.charts[0].mask[k]) worst = std::max(worst, std::abs(back.charts[0].v[k] - g.charts[0].v[k]));
    CHECK(worst <= 1e-10);

    // Xi -> 4 Xi shifts u by -log 4
    auto s4 = assemble(g, xi.scaled(4.0));
    size_t k = s.charts[0].chart.idx(60, 10);
    CHECK(s4.charts[0].u[k] - s.charts[0].u[k] == doctest::Approx(-std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("extract_cubic recovers sampled models") {
    for (int k : {-2, 0, 1, 3}) {
        auto m = log_model(k, Complex(2.0, 1.0));
        auto s = sample_model(m, model_grid(128));
        auto xi = extract_cubic(s);
        for (Complex z : {Complex(0.3, 0.2), Complex(-0.1, -0.5)})
            CHECK(std::abs(xi.eval(z) - m.xi0(z)) <= 1e-6 * std::abs(m.xi0(z)));
        CHECK(ord_at(xi, CPoint::finite(0.0, 0.0)) == k - 1);
    }
    auto cone = extract_cubic(sample_model(cone_model(1.0), model_grid(64)));
    CHECK(cone.eval(Complex(0.3, 0.1)) == Complex(0.0, 0.0));
}

TEST_CASE("metric-only structures") {
    Chart c = Chart::cartesian({-0.8, -0.8, 1.6 / 127, 128});
    auto m = metric_from_function(c, [](Complex z) { return -std::log(1.0 - std::norm(z)) + std::log(2.0); }, "disc");
    auto s = assemble(m, CubicDifferential::exp_kernel());
    CHECK(s.metric_only);
    CHECK_FALSE(s.complete());
    CHECK_FALSE(s.warnings.empty());
    CHECK(s.charts[0].h.empty());
    try {
        extract_cubic(s);
        FAIL("expected EssentialSingularityMetricOnly");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EssentialSingularityMetricOnly);
    }
    auto rep = verify(s, annulus(0.2, 0.8));
    CHECK(rep.check("flat")->skipped);
    CHECK(rep.check("harmonic")->skipped);
    CHECK_FALSE(rep.check("pde")->skipped);
}

TEST_CASE("fitted orders on sampled cones") {
    LogPolarGrid g{{0.0, 0.0}, std::log(1e-3), std::log(0.5), 256, 32};
    auto fit = fit_singularity_order(sample_model(cone_model(3.0), g), CPoint::finite(0.0, 0.0));
    CHECK(fit.order == doctest::Approx(1.5).epsilon(0.02 / 1.5));
    CHECK(fit.type == SingularityType::Conical);
    auto lf = fit_singularity_order(sample_model(log_model(2, 1.0), g), CPoint::finite(0.0, 0.0));
    CHECK(lf.order == doctest::Approx(1.0).epsilon(0.02));
    CHECK(lf.type == SingularityType::Logarithmic);

    LogPolarGrid shallow{{0.0, 0.0}, std::log(0.01), std::log(0.5), 128, 16};
    try {
        fit_singularity_order(sample_model(cone_model(1.0), shallow), CPoint::finite(0.0, 0.0));
        FAIL("expected InsufficientRange");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InsufficientRange);
    }
}

TEST_CASE("cusp fits survive a large horoball offset") {
    // exact cusp in a rescaled coordinate: v = -rho - log(A - rho)
    for (double A : {0.0, 3.0, 7.5, 12.0}) {
        CAPTURE(A);
        Chart c = Chart::log_polar({{0.0, 0.0}, std::log(1e-3), std::log(0.2), 256, 32});
        auto m = metric_from_function(c, [A](Complex z) { double rho = std::log(std::abs(z)); return -rho - std::log(A - rho); },
                                      "cusp");
        auto xi = CubicDifferential::rational(Rational::from_factors(1.0, {{0.0, -2}}));
        auto fit = fit_singularity_order(assemble(m, xi), CPoint::finite(0.0, 0.0));
        CHECK(fit.order == doctest::Approx(-0.5).epsilon(0.01));
        CHECK(fit.type == SingularityType::Logarithmic);
    }
}

TEST_CASE("rotating the family") {
    auto g = model_metric(ModelKind::Cusp, 0.0, 0.5, ModelGrid{256, 128, 1e-3});
    auto xi = CubicDifferential::rational(Rational::from_factors(Complex(0.2, 0.1), {{0.0, -1}, {0.7, 1}}));
    auto s = assemble(g, xi);
    for (Complex lam : {Complex(0, 1), Complex(-1, 0), std::polar(1.0, kPi / 3)}) {
        auto r = rotate_family(s, lam);
        CHECK(bitwise_equal(r.charts[0].u, s.charts[0].u));
        Complex z(0.1, 0.2);
        CHECK(std::abs(r.xi.eval(z) - lam * xi.eval(z)) < 1e-14);
        // the complete metric blows up at the rim r = 0.5
        CHECK(verify(r, annulus(0.0, 0.4)).pass());
    }
    auto neg = rotate_family(s, -1.0);
    CHECK(neg.a[0] == doctest::Approx(-s.a[0]));
    try {
        rotate_family(s, 1.1);
        FAIL("expected NotUnitModulus");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotUnitModulus);
    }
}

TEST_CASE("zeros of the cubic form off the grid centre are excluded") {
    auto g = model_metric(ModelKind::Cusp, 0.0, 0.5, ModelGrid{512, 256, 1e-3});
    auto s = assemble(g, CubicDifferential::rational(Rational::from_factors(Complex(0.2, 0.1), {{0.0, -1}, {0.3, 1}})));
    VerifyOptions o;
    o.zero_exclusion = 0.0;
    CHECK_FALSE(verify(s, o).pass());
    o.zero_exclusion = 0.2;
    auto rep = verify(s, o);
    CAPTURE(rep.to_json().dump());
    CHECK(rep.pass());
}
