#include <cmath>
#include <random>

#include "doctest.h"
#include "spk/moduli.hpp"

using namespace spk;

namespace {

SingularData sphere_data(std::vector<double> betas, int ell, std::vector<CPoint> pts = {}) {
    SingularData d;
    d.betas = std::move(betas);
    d.ell = ell;
    if (pts.empty())
        for (size_t i = 0; i < d.betas.size(); ++i) pts.push_back(CPoint::finite(std::polar(0.6, 1.0 + 2.1 * i)));
    d.points = std::move(pts);
    return d;
}

SingularData random_instance(std::mt19937& rng) {
    std::uniform_int_distribution<int> K(1, 6), B(-4, 4);
    std::uniform_real_distribution<double> U(-1.0, 1.0), F(0.0, 1.0);
    SingularData d;
    int k = K(rng);
    d.ell = std::uniform_int_distribution<int>(0, k)(rng);
    for (int j = 0; j < k; ++j) {
        if (j == 0 && F(rng) < 0.3)
            d.points.push_back(CPoint::infinity());
        else
            d.points.push_back(CPoint::finite(U(rng) * 2.0, U(rng) * 2.0));
        if (j < d.ell) {
            // floor(beta) in [-4, 4]; half-integers and generic fractions
            double frac = F(rng) < 0.5 ? 0.5 : F(rng);
            d.betas.push_back(B(rng) + frac);
        } else {
            d.betas.push_back(B(rng) + 1);  // order beta - 1 in [-4, 4]
        }
    }
    return d;
}

// Count t >= 0 such that z^t prod_{finite} (z - p_j)^{o_j} meets every order
// bound, including the one at infinity (0 when infinity is unmarked).
int monomial_oracle(const SingularData& d) {
    int count = 0;
    for (int t = 0; t <= 80; ++t) {
        std::vector<Factor> fs;
        if (t > 0) fs.push_back({Complex(0.0, 0.0), t});
        for (int j = 0; j < d.k(); ++j)
            if (!d.points[j].is_infinity()) fs.push_back({d.points[j].z, d.order(j)});
        auto xi = CubicDifferential::rational(Rational::from_factors(1.0, fs));
        int need_inf = 0;
        bool ok = true;
        for (int j = 0; j < d.k(); ++j) {
            if (d.points[j].is_infinity())
                need_inf = d.order(j);
            else
                ok = ok && ord_at(xi, d.points[j]) >= d.order(j);
        }
        if (ok && ord_at(xi, CPoint::infinity()) >= need_inf) ++count;
    }
    return count;
}

}  // namespace

TEST_CASE("h_space_dim matches the monomial count") {
    std::mt19937 rng(20240611);
    int nonzero = 0;
    for (int it = 0; it < 200; ++it) {
        SingularData d = random_instance(rng);
        CAPTURE(d.to_json().dump());
        int dim = h_space_dim(d);
        CHECK(dim == monomial_oracle(d));
        nonzero += dim > 0;
    }
    CHECK(nonzero > 20);
}

TEST_CASE("existence on the sphere") {
    auto r = existence_check(sphere_data({-1, -1, -1}, 0));
    CHECK(r.exists);
    REQUIRE(r.N);
    CHECK(*r.N == 0);
    CHECK(r.verdict == "iff");
    auto r0 = existence_check(sphere_data({0, 0, 0}, 0));
    CHECK_FALSE(r0.exists);
    CHECK_FALSE(r0.N);
    CHECK(r0.reasons.size() == 1);

    // twenty-four simple poles
    auto d24 = sphere_data(std::vector<double>(24, 0.0), 0);
    auto r24 = existence_check(d24);
    CHECK(r24.exists);
    CHECK(*r24.N == 18);
    CHECK(h_space_dim(d24) == 19);
    CHECK(r24.to_json().dump().find("\"N\":18") != std::string::npos);
    CHECK(r24.strata.size() == 10000);
    CHECK(r24.strata_total > 10000);

    auto d4 = sphere_data({0, -1, -1, -1}, 0);
    CHECK(h_space_dim(d4) == 2);
}

TEST_CASE("at least three singular points on the sphere") {
    // sweep beta in [-5, 5] (conical slots in half steps) for k <= 2
    std::vector<double> halves, ints;
    for (int i = -10; i <= 10; ++i) halves.push_back(0.5 * i);
    for (int i = -5; i <= 5; ++i) ints.push_back(i);
    long checked = 0;
    for (int k = 1; k <= 2; ++k)
        for (int ell = 0; ell <= k; ++ell) {
            const auto& v0 = ell >= 1 ? halves : ints;
            for (double b0 : v0) {
                if (k == 1) {
                    CHECK_FALSE(existence_check(sphere_data({b0}, ell)).exists);
                    ++checked;
                    continue;
                }
                const auto& v1 = ell >= 2 ? halves : ints;
                for (double b1 : v1) {
                    CHECK_FALSE(existence_check(sphere_data({b0, b1}, ell)).exists);
                    ++checked;
                }
            }
        }
    CHECK(checked > 800);
}

TEST_CASE("sphere basis and sections") {
    auto d3 = sphere_data({-1, -1, -1}, 0);
    auto b3 = basis_on_sphere(d3);
    REQUIRE(b3.size() == 1);
    CHECK(divisor_of(b3[0]).degree() == -6);
    CHECK(ord_at(b3[0], CPoint::infinity()) == 0);

    auto d4 = sphere_data({0, -1, -1, -1}, 0);
    auto b4 = basis_on_sphere(d4);
    REQUIRE(b4.size() == 2);
    for (const auto& xi : b4) {
        CHECK(ord_at(xi, d4.points[0]) == -1);
        CHECK(divisor_of(xi).degree() == -6);
    }

    // a marked point at infinity
    auto dinf = sphere_data({0, -1, -1, -1}, 0, {CPoint::infinity(), CPoint::finite(0, 0), CPoint::finite(1, 0),
                                                   CPoint::finite(-0.5, 0.5)});
    for (const auto& xi : basis_on_sphere(dinf)) CHECK(ord_at(xi, CPoint::infinity()) >= -1);

    auto s1 = sample_section(d4, 1), s1b = sample_section(d4, 1), s2 = sample_section(d4, 2);
    CHECK(s1.to_json() == s1b.to_json());
    CHECK(s1.to_json() != s2.to_json());

    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        auto xi = sample_section(seed % 2 ? d4 : dinf, seed);
        const auto& d = seed % 2 ? d4 : dinf;
        bool ok = true;
        for (int j = d.ell; j < d.k(); ++j) ok = ok && ord_at(xi, d.points[j]) == d.order(j);
        if (!ok) {
            CAPTURE(seed);
            CHECK(ok);
        }
    }

    auto xi3 = sample_section(d3, 7);
    Complex z(0.2, -0.3);
    Complex ratio = xi3.eval(z) / b3[0].eval(z), ratio2 = xi3.eval(-z) / b3[0].eval(-z);
    CHECK(std::abs(ratio - ratio2) < 1e-10 * std::abs(ratio));

    try {
        basis_on_sphere(sphere_data({0, 0, 0}, 0));
        FAIL("expected EmptySpace");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptySpace);
    }
}

TEST_CASE("existence agrees with the basis") {
    std::mt19937 rng(99);
    for (int it = 0; it < 200; ++it) {
        SingularData d = random_instance(rng);
        CAPTURE(d.to_json().dump());
        bool exists = existence_check(d).exists;
        bool member = false;
        try {
            auto xi = sample_section(d, it);
            member = true;
            for (int j = d.ell; j < d.k(); ++j) member = member && ord_at(xi, d.points[j]) == d.order(j);
            for (int j = 0; j < d.ell; ++j) member = member && ord_at(xi, d.points[j]) >= d.order(j);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::EmptySpace);
        }
        CHECK(exists == member);
    }
}

TEST_CASE("stratification") {
    auto s = enumerate_strata(sphere_data({0, -1, -1, -1}, 0));
    REQUIRE(s.size() == 5);
    CHECK(s[0].m == std::vector<int>{0, 0, 0, 0});
    CHECK(s[0].N == 1);
    for (int j = 1; j < 5; ++j) {
        CHECK(s[j].N == 0);
        std::vector<int> e(4, 0);
        e[j - 1] = 1;
        CHECK(s[j].m == e);
    }
    // CP^1 is the top stratum (CP^1 minus four points) plus four points
    auto d = sphere_data({0, -1, -1, -1}, 0);
    int on_point = 0;
    for (int j = 0; j < 4; ++j) {
        // (z - p_j) times the fixed factor spans the line of sections in stratum e_j
        std::vector<Factor> fs{{d.points[j].z, 1}};
        for (int i = 0; i < 4; ++i) fs.push_back({d.points[i].z, d.order(i)});
        auto xi = CubicDifferential::rational(Rational::from_factors(1.0, fs));
        on_point += ord_at(xi, d.points[j]) == d.order(j) + 1;
    }
    CHECK(on_point == 4);
    CHECK(count_strata(d) == 5);

    auto single = enumerate_strata(sphere_data({-1, -1, -1}, 0));
    REQUIRE(single.size() == 1);
    CHECK(single[0].N == 0);

    std::mt19937 rng(5);
    for (int it = 0; it < 100; ++it) {
        SingularData r = random_instance(rng);
        double sb = 0.0;
        for (double b : r.betas) sb += b;
        auto st = enumerate_strata(r, 2000);
        for (const auto& x : st) {
            int sm = 0;
            for (int v : x.m) sm += v;
            CHECK(sm <= r.k() + 6 - sb + 1e-9);
            CHECK(x.N >= 0);
        }
        if (st.size() < 2000) CHECK(count_strata(r) == st.size());
    }
}

TEST_CASE("elliptic curves") {
    const Complex tau(0.3, 1.1);
    const Complex q3(0.3, 0.2), q1(0.1, 0.05);
    const Complex q2 = 2.0 * q3 - q1 + 1.0 + tau;  // q1 + q2 - 2 q3 in the lattice
    SingularData d;
    d.genus = 1;
    d.points = {CPoint::finite(q1), CPoint::finite(q2), CPoint::finite(q3)};
    d.betas = {2, 2, -1};  // orders 1, 1, -2
    d.ell = 0;
    auto r = elliptic_check(tau, d);
    CHECK(r.deg_L == 0);
    CHECK(r.exists);
    CHECK(*r.N == 0);
    d.points[1] = CPoint::finite(q2 + 0.01);
    CHECK_FALSE(elliptic_check(tau, d).exists);

    // deg L = 1 with one logarithmic point: the section vanishes there
    SingularData e;
    e.genus = 1;
    e.points = {CPoint::finite(0.4, 0.1), CPoint::finite(0.2, 0.5)};
    e.betas = {0.5, 0.0};
    e.ell = 1;
    auto re = elliptic_check(tau, e);
    CHECK(re.deg_L == 1);
    CHECK_FALSE(re.exists);
    CHECK(re.reasons.back().find("(iii)") != std::string::npos);

    SingularData z = d;
    z.betas = {1, 0, -1};
    CHECK_FALSE(elliptic_check(tau, z).exists);

    // positive degree: dim = deg L
    SingularData p;
    p.genus = 1;
    p.points = {CPoint::finite(0.1, 0.1), CPoint::finite(0.5, 0.3), CPoint::finite(0.7, 0.9)};
    p.betas = {0, 0, 1};
    p.ell = 0;
    auto rp = elliptic_check(tau, p);
    CHECK(rp.deg_L == 2);
    CHECK(rp.exists);
    CHECK(*rp.N == 1);

    try {
        elliptic_check(Complex(0.5, -1.0), d);
        FAIL("expected BadLattice");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::BadLattice);
    }
    CHECK(lattice_distance(3.0 + 2.0 * tau, tau) < 1e-12);
}

TEST_CASE("higher genus is necessary-only") {
    SingularData d;
    d.genus = 2;
    d.points = {CPoint::finite(0.1, 0.0), CPoint::finite(0.2, 0.0), CPoint::finite(0.3, 0.0)};
    d.betas = {3, 3, 3};
    d.ell = 0;
    auto r = existence_check(d);
    CHECK(r.verdict == "necessary-only");
    CHECK_THROWS_AS(h_space_dim(d), Error);
}

TEST_CASE("singular data validation and JSON") {
    auto d = sphere_data({0.5, -1, 2}, 1);
    d.points[2] = CPoint::infinity();
    auto back = SingularData::from_json(d.to_json());
    CHECK(back.to_json() == d.to_json());
    CHECK_THROWS_AS(SingularData::from_json(nlohmann::json::parse(R"({"betas":[0.5],"ell":0})")), Error);
    CHECK_THROWS_AS(SingularData::from_json(nlohmann::json::parse(R"({"betas":[1],"bogus":1})")), Error);
    auto dflt = SingularData::from_json(nlohmann::json::parse(R"({"betas":[0,0,0,0],"ell":0})"));
    CHECK(dflt.k() == 4);
    CHECK(sphere_data({-1.5}, 1).order(0) == -2);
}
