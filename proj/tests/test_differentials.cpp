#include <doctest.h>

#include <cmath>
#include <random>

#include "spk/differentials.hpp"

using namespace spk;

namespace {

const double kPi = std::acos(-1.0);

// Laurent coefficient c_n of f about p by trapezoid quadrature on |z - p| = r.
Complex contour_coeff(const std::function<Complex(Complex)>& f, Complex p, double r, int n, int M = 512) {
    Complex s(0.0, 0.0);
    for (int k = 0; k < M; ++k) {
        Complex e = std::polar(1.0, 2.0 * kPi * k / M);
        s += f(p + r * e) * std::pow(r * e, -n);
    }
    return s / double(M);
}

// Order of vanishing of f at p from its Laurent expansion: lowest index with a
// coefficient that is not negligible.
int contour_order(const std::function<Complex(Complex)>& f, Complex p, double r) {
    std::vector<Complex> c;
    double mx = 0.0;
    for (int n = -20; n <= 10; ++n) {
        c.push_back(contour_coeff(f, p, r, n));
        mx = std::max(mx, std::abs(c.back()) * std::pow(r, n));
    }
    for (int n = -20; n <= 10; ++n)
        if (std::abs(c[n + 20]) * std::pow(r, n) > 1e-9 * mx) return n;
    return 99;
}

double min_gap(const std::vector<Factor>& fs) {
    double g = 1e300;
    for (size_t i = 0; i < fs.size(); ++i)
        for (size_t j = i + 1; j < fs.size(); ++j) g = std::min(g, std::abs(fs[i].root - fs[j].root));
    return g;
}

std::vector<Factor> random_factors(std::mt19937_64& rng, int max_pole) {
    std::uniform_real_distribution<double> U(-1.5, 1.5);
    std::uniform_int_distribution<int> nf(1, 4), mm(-max_pole, 3);
    std::vector<Factor> fs;
    int n = nf(rng);
    while (static_cast<int>(fs.size()) < n) {
        Complex z(U(rng), U(rng));
        bool ok = true;
        for (auto& f : fs) ok = ok && std::abs(f.root - z) > 0.2;
        int m = mm(rng);
        if (ok && m != 0) fs.push_back({z, m});
    }
    return fs;
}

}  // namespace

TEST_CASE("ord_at reads orders including infinity") {
    auto xi = CubicDifferential::rational(Rational::from_factors(1.0, {{1.0, 3}, {0.0, -6}}));
    CHECK(ord_at(xi, CPoint::finite(0, 0)) == -6);
    CHECK(ord_at(xi, CPoint::infinity()) == -3);
    CHECK(ord_at(xi, CPoint::finite(1, 0)) == 3);
    CHECK(ord_at(xi, CPoint::finite(2, 0)) == 0);

    auto y = CubicDifferential::rational(Rational::from_factors(1.0, {{0.0, -3}, {1.0, -3}}));
    CHECK(ord_at(y, CPoint::infinity()) == 0);
    CHECK(divisor_of(y).degree() == doctest::Approx(-6));
}

TEST_CASE("ord_at from coefficient input") {
    // (z-1)^3 / z^6 given as dense coefficients
    Poly num{-1.0, 3.0, -3.0, 1.0};
    Poly den{0, 0, 0, 0, 0, 0, 1.0};
    auto xi = CubicDifferential::from_coefficients(num, den);
    CHECK(ord_at(xi, CPoint::finite(0, 0)) == -6);
    CHECK(ord_at(xi, CPoint::finite(1, 0)) == 3);
    CHECK(ord_at(xi, CPoint::infinity()) == -3);
}

TEST_CASE("ord at infinity agrees with series in w = 1/z") {
    auto xi = CubicDifferential::rational(Rational::from_factors(1.0, {{1.0, 3}, {0.0, -6}}));
    auto fw = [&](Complex w) { return -xi.eval(1.0 / w) * std::pow(w, -6); };
    CHECK(contour_order(fw, 0.0, 0.1) == -3);
    auto xw = xi.to_w_chart();
    CHECK(ord_at(xw, CPoint::finite(0, 0)) == -3);
    Complex w(0.3, -0.2);
    CHECK(std::abs(xw.eval(w) - fw(w)) < 1e-12 * std::abs(fw(w)));
}

TEST_CASE("divisor_of examples") {
    auto one = CubicDifferential::rational(Rational::constant(1.0));
    auto d1 = divisor_of(one);
    REQUIRE(d1.entries.size() == 1);
    CHECK(d1.entries[0].point.is_infinity());
    CHECK(d1.entries[0].coeff == -6);

    Complex p1(0.3, 0.1), p2(-1.0, 0.5), p3(0.0, -2.0);
    auto three = CubicDifferential::rational(Rational::from_factors(1.0, {{p1, -2}, {p2, -2}, {p3, -2}}));
    auto d3 = divisor_of(three);
    CHECK(d3.coeff_at(CPoint::finite(p1)) == -2);
    CHECK(d3.coeff_at(CPoint::finite(p3)) == -2);
    CHECK(d3.coeff_at(CPoint::infinity()) == 0);
    CHECK(d3.degree() == -6);

    auto z = CubicDifferential::from_coefficients({0.0, 1.0}, {1.0});
    auto dz = divisor_of(z);
    CHECK(dz.coeff_at(CPoint::finite(0, 0)) == 1);
    CHECK(dz.coeff_at(CPoint::infinity()) == -7);
}

TEST_CASE("divisor degree is -6 and orders match the Laurent oracle on random instances") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        auto fs = random_factors(rng, 4);
        Complex lead(0.5 + trial % 3, 0.25);
        auto xi = CubicDifferential::rational(Rational::from_factors(lead, fs));
        CHECK(divisor_of(xi).degree() == -6);
        double r = 0.1 * std::min(1.0, fs.size() > 1 ? min_gap(fs) : 1.0);
        auto f = [&](Complex z) { return xi.eval(z); };
        for (auto& fa : fs) CHECK(ord_at(xi, CPoint::finite(fa.root)) == contour_order(f, fa.root, r));
        Complex regular(3.1, -2.9);
        CHECK(ord_at(xi, CPoint::finite(regular)) == contour_order(f, regular, 0.05));
        auto fw = [&](Complex w) { return -xi.eval(1.0 / w) * std::pow(w, -6); };
        CHECK(ord_at(xi, CPoint::infinity()) == contour_order(fw, 0.0, 0.1));
    }
}

TEST_CASE("residue_at examples") {
    Complex A(2.0, 1.0);
    auto xi = CubicDifferential::rational(Rational::from_factors(A, {{0.0, -1}}));
    CHECK(std::abs(residue_at(xi, CPoint::finite(0, 0)) - A) < 1e-14);

    auto y = CubicDifferential::from_coefficients({1.0}, {0.0, 0.0, -1.0, 1.0});
    CHECK(std::abs(residue_at(y, CPoint::finite(0, 0)) - Complex(-1.0, 0.0)) < 1e-12);
    CHECK(std::abs(residue_at(y, CPoint::finite(1, 0)) - Complex(1.0, 0.0)) < 1e-12);
    CHECK_THROWS_AS(residue_at(y, CPoint::infinity()), Error);
    CHECK_THROWS_AS(residue_at(CubicDifferential::exp_kernel(), CPoint::finite(0, 0)), Error);
}

TEST_CASE("residue_at agrees with contour quadrature on random instances") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        auto fs = random_factors(rng, 4);
        auto xi = CubicDifferential::rational(Rational::from_factors(Complex(1.0, -0.5), fs));
        double r = 1e-2 * (fs.size() > 1 ? min_gap(fs) : 1.0);
        auto f = [&](Complex z) { return xi.eval(z); };
        for (auto& fa : fs) {
            if (fa.mult >= 0) continue;
            Complex res = residue_at(xi, CPoint::finite(fa.root));
            Complex oracle = contour_coeff(f, fa.root, r, -1, 256);
            CHECK(std::abs(res - oracle) <= 1e-8 * std::max(1.0, std::abs(res)));
        }
    }
}

TEST_CASE("eval examples") {
    auto cube = CubicDifferential::from_coefficients({0, 0, 0, 1.0}, {1.0});
    CHECK(std::abs(cube.eval(2.0) - Complex(8.0, 0.0)) < 1e-12);
    auto ek = CubicDifferential::exp_kernel();
    CHECK(std::abs(ek.eval(1.0) - Complex(2.718281828459045, 0.0)) < 1e-12);
    auto pole = CubicDifferential::from_coefficients({1.0}, {-1.0, 1.0});
    try {
        pole.eval(Complex(1.0 + 1e-16, 0.0));
        FAIL("expected NearPole");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NearPole);
    }
}

TEST_CASE("regular_primitive examples") {
    Complex z0(0.5, 0.5);
    auto a_over_z = CubicDifferential::rational(Rational::from_factors(Complex(2, 1), {{0.0, -1}}));
    auto H0 = regular_primitive(a_over_z, {CPoint::finite(0, 0)}, z0);
    CHECK(std::abs(H0.value(Complex(0.3, -0.7))) < 1e-14);
    CHECK(std::abs(H0.residues[0] - Complex(2, 1)) < 1e-14);

    auto inv_sq = CubicDifferential::rational(Rational::from_factors(1.0, {{0.0, -2}}));
    auto H1 = regular_primitive(inv_sq, {CPoint::finite(0, 0)}, z0);
    Complex z(0.2, 0.9);
    CHECK(std::abs(H1.value(z) - (-1.0 / z + 1.0 / z0)) < 1e-13);

    // 3z^2 + 5/z = (3 z^3 + 5) / z
    auto mix = CubicDifferential::from_coefficients({5.0, 0, 0, 3.0}, {0.0, 1.0});
    auto H2 = regular_primitive(mix, {CPoint::finite(0, 0)}, z0);
    CHECK(std::abs(H2.value(z) - (z * z * z - z0 * z0 * z0)) < 1e-12);
    CHECK(std::abs(H2.residues[0] - Complex(5.0, 0.0)) < 1e-12);

    CHECK_THROWS_AS(regular_primitive(inv_sq, {CPoint::finite(1, 0)}, z0), Error);
}

TEST_CASE("derivative of the regular primitive is the regular part") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        auto fs = random_factors(rng, 4);
        auto xi = CubicDifferential::rational(Rational::from_factors(Complex(0.7, 0.2), fs));
        std::vector<CPoint> punct;
        for (auto& f : fs)
            if (f.mult < 0) punct.push_back(CPoint::finite(f.root));
        auto H = regular_primitive(xi, punct, Complex(2.5, 2.5));
        for (int s = 0; s < 5; ++s) {
            Complex z(2.0 + U(rng), 2.0 + U(rng));
            double h = 1e-6 * std::abs(z) + 1e-8;
            Complex fd = (H.value(z + h) - H.value(z - h)) / (2.0 * h);
            Complex reg = xi.eval(z);
            for (size_t j = 0; j < punct.size(); ++j) reg -= H.residues[j] / (z - punct[j].z);
            CHECK(std::abs(fd - reg) <= 1e-8 * std::max(std::abs(reg), 1e-3 * std::abs(xi.eval(z))));
            CHECK(std::abs(H.derivative(z) - reg) <= 1e-10 * std::max(1.0, std::abs(reg)));
        }
    }
}

TEST_CASE("json round trip") {
    auto xi = CubicDifferential::rational(Rational::from_factors(Complex(1, 2), {{Complex(0.5, 0), -2}, {Complex(0, 1), 1}}));
    auto j = xi.to_json();
    CHECK(j["kind"] == "rational");
    auto back = CubicDifferential::from_json(j);
    Complex z(0.1, 0.2);
    CHECK(std::abs(back.eval(z) - xi.eval(z)) < 1e-12 * std::abs(xi.eval(z)));
    nlohmann::json coeffs = {{"kind", "rational"}, {"num", j["num"]}, {"den", j["den"]}};
    auto back2 = CubicDifferential::from_json(coeffs);
    CHECK(std::abs(back2.eval(z) - xi.eval(z)) < 1e-9 * std::abs(xi.eval(z)));
    auto ek = CubicDifferential::exp_kernel().to_json();
    CHECK(ek["kernel"] == "exp_inv_z");
    CHECK_THROWS_AS(CubicDifferential::from_json({{"kind", "rational"}, {"bogus", 1}}), Error);
}
