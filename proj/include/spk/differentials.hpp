#pragma once

#include <functional>
#include <nlohmann/json.hpp>
#include <vector>

#include "spk/polynomial.hpp"
#include "spk/types.hpp"

namespace spk {

// (z - root)^mult; mult > 0 for zeros, < 0 for poles.
struct Factor {
    Complex root;
    int mult;
};

// lead * prod (z - root_i)^mult_i, kept in factored form with cached coefficients.
class Rational {
public:
    Rational() : lead_(1.0, 0.0) {}
    static Rational from_factors(Complex lead, std::vector<Factor> factors);
    static Rational from_coefficients(const Poly& num, const Poly& den);
    static Rational constant(Complex c) { return from_factors(c, {}); }

    Complex lead() const { return lead_; }
    const std::vector<Factor>& factors() const { return factors_; }
    const Poly& numerator() const { return num_; }
    const Poly& denominator() const { return den_; }  // monic
    int num_degree() const { return degree(num_); }
    int den_degree() const { return degree(den_); }
    bool is_zero() const { return lead_ == Complex(0.0, 0.0); }

    // Signed multiplicity at a finite point (0 if regular and nonzero).
    int mult_at(Complex p) const;
    Complex eval(Complex z) const;
    // d/dz log of the function, sum mult/(z - root).
    Complex log_derivative(Complex z) const;
    std::vector<Complex> poles() const;

    // Laurent coefficients at p: c[i] multiplies (z-p)^(ord + i), i < count.
    std::vector<Complex> laurent(Complex p, int count, int* ord) const;

    Rational times(const Rational& o) const;
    Rational scaled(Complex c) const;

private:
    void rebuild();
    Complex lead_;
    std::vector<Factor> factors_;
    Poly num_, den_;
};

struct Divisor {
    struct Entry {
        CPoint point;
        double coeff;
    };
    std::vector<Entry> entries;
    double degree() const;
    double coeff_at(const CPoint& p) const;
};

struct Primitive;

class CubicDifferential {
public:
    enum class Kind { Rational, ExpKernel };

    CubicDifferential() = default;
    explicit CubicDifferential(Rational r) : kind_(Kind::Rational), r_(std::move(r)) {}
    static CubicDifferential rational(Rational r) { return CubicDifferential(std::move(r)); }
    static CubicDifferential from_coefficients(const Poly& num, const Poly& den);
    static CubicDifferential exp_kernel(Rational r = Rational::constant(1.0));

    Kind kind() const { return kind_; }
    bool is_rational() const { return kind_ == Kind::Rational; }
    const Rational& rational_part() const { return r_; }

    Complex eval(Complex z) const;
    // d/dz log Xi_0.
    Complex log_derivative(Complex z) const;
    CubicDifferential scaled(Complex lambda) const;
    // The same differential in the chart w = 1/z: Xi_0(1/w) * (-w^-6).
    CubicDifferential to_w_chart() const;

    nlohmann::json to_json() const;
    static CubicDifferential from_json(const nlohmann::json& j);

private:
    Kind kind_ = Kind::Rational;
    Rational r_;
};

int ord_at(const CubicDifferential& xi, const CPoint& p);
Divisor divisor_of(const CubicDifferential& xi);
Complex residue_at(const CubicDifferential& xi, const CPoint& p);
Complex eval(const CubicDifferential& xi, Complex z);

// Primitive H of the regular part Xi_0 - sum A_j/(z - p_j), normalized by H(z0) = 0.
struct Primitive {
    Poly poly;  // polynomial part of H before normalization
    struct PoleTerm {
        Complex p;
        std::vector<Complex> coeff;  // coeff[n] multiplies (z-p)^-(n+1)
    };
    std::vector<PoleTerm> terms;
    std::vector<Complex> punctures;
    std::vector<Complex> residues;  // A_j per puncture
    Complex base_point{0.0, 0.0};
    Complex offset{0.0, 0.0};

    Complex value(Complex z) const;
    Complex derivative(Complex z) const;  // the regular part itself
};

Primitive regular_primitive(const CubicDifferential& xi, const std::vector<CPoint>& punctures,
                            Complex base_point = Complex(0.0, 0.0));

}  // namespace spk
