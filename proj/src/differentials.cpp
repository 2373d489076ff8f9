#include "spk/differentials.hpp"

#include <algorithm>
#include <cmath>

namespace spk {

namespace {

constexpr double kCoincide = 1e-9;
constexpr double kNearPole = 1e-12;

bool close(Complex a, Complex b, double tol) { return std::abs(a - b) <= tol * (1.0 + std::abs(a)); }

Complex ipow(Complex z, int m) {
    Complex r(1.0, 0.0);
    Complex b = m >= 0 ? z : 1.0 / z;
    for (int i = 0; i < std::abs(m); ++i) r *= b;
    return r;
}

// First `count` Taylor coefficients of (c + t)^m in t.
std::vector<Complex> binomial_series(Complex c, int m, int count) {
    std::vector<Complex> s(count, Complex(0.0, 0.0));
    if (count == 0) return s;
    s[0] = ipow(c, m);
    for (int n = 1; n < count; ++n) s[n] = s[n - 1] * (static_cast<double>(m - n + 1) / n) / c;
    return s;
}

std::vector<Complex> series_mul(const std::vector<Complex>& a, const std::vector<Complex>& b) {
    std::vector<Complex> r(a.size(), Complex(0.0, 0.0));
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; i + j < a.size() && j < b.size(); ++j) r[i + j] += a[i] * b[j];
    return r;
}

nlohmann::json poly_json(const Poly& p) {
    nlohmann::json a = nlohmann::json::array();
    for (auto c : p) a.push_back({c.real(), c.imag()});
    return a;
}

Complex complex_from_json(const nlohmann::json& v) {
    if (v.is_number()) return Complex(v.get<double>(), 0.0);
    if (!v.is_array() || v.size() != 2) throw Error(ErrorCode::InvalidConfig, "complex number must be [re, im]");
    return Complex(v[0].get<double>(), v[1].get<double>());
}

Poly poly_from_json(const nlohmann::json& a) {
    if (!a.is_array()) throw Error(ErrorCode::InvalidConfig, "coefficient list must be an array");
    Poly p;
    for (auto& c : a) p.push_back(complex_from_json(c));
    return p;
}

}  // namespace

Rational Rational::from_factors(Complex lead, std::vector<Factor> factors) {
    Rational r;
    r.lead_ = lead;
    for (auto& f : factors) {
        if (f.mult == 0) continue;
        auto it = std::find_if(r.factors_.begin(), r.factors_.end(),
                               [&](const Factor& g) { return close(g.root, f.root, kCoincide); });
        if (it != r.factors_.end())
            it->mult += f.mult;
        else
            r.factors_.push_back(f);
    }
    r.factors_.erase(std::remove_if(r.factors_.begin(), r.factors_.end(), [](const Factor& f) { return f.mult == 0; }),
                     r.factors_.end());
    r.rebuild();
    return r;
}

Rational Rational::from_coefficients(const Poly& num_in, const Poly& den_in) {
    Poly num = trim(num_in), den = trim(den_in);
    if (degree(den) < 0) throw Error(ErrorCode::InvalidArgument, "zero denominator");
    if (degree(num) < 0) {
        Rational r;
        r.lead_ = 0.0;
        r.rebuild();
        return r;
    }
    std::vector<Factor> fs;
    for (auto& z : roots(num)) fs.push_back({z.z, z.mult});
    for (auto& z : roots(den)) fs.push_back({z.z, -z.mult});
    return from_factors(num[degree(num)] / den[degree(den)], fs);
}

void Rational::rebuild() {
    num_ = Poly{lead_};
    den_ = Poly{Complex(1.0, 0.0)};
    for (auto& f : factors_) {
        if (f.mult > 0)
            num_ = mul(num_, power_linear(f.root, f.mult));
        else
            den_ = mul(den_, power_linear(f.root, -f.mult));
    }
}

int Rational::mult_at(Complex p) const {
    for (auto& f : factors_)
        if (close(f.root, p, kCoincide)) return f.mult;
    return 0;
}

Complex Rational::eval(Complex z) const {
    Complex num = lead_, den(1.0, 0.0);
    for (auto& f : factors_) {
        Complex d = z - f.root;
        if (f.mult < 0 && std::abs(d) <= kNearPole * (1.0 + std::abs(f.root)))
            throw Error(ErrorCode::NearPole, "evaluation at a pole");
        if (f.mult > 0)
            num *= ipow(d, f.mult);
        else
            den *= ipow(d, -f.mult);
    }
    return num / den;
}

Complex Rational::log_derivative(Complex z) const {
    Complex s(0.0, 0.0);
    for (auto& f : factors_) s += static_cast<double>(f.mult) / (z - f.root);
    return s;
}

std::vector<Complex> Rational::poles() const {
    std::vector<Complex> out;
    for (auto& f : factors_)
        if (f.mult < 0) out.push_back(f.root);
    return out;
}

std::vector<Complex> Rational::laurent(Complex p, int count, int* ord) const {
    int o = mult_at(p);
    if (ord) *ord = o;
    std::vector<Complex> s(count, Complex(0.0, 0.0));
    if (count == 0) return s;
    s[0] = lead_;
    for (auto& f : factors_) {
        if (close(f.root, p, kCoincide)) continue;
        s = series_mul(s, binomial_series(p - f.root, f.mult, count));
    }
    return s;
}

Rational Rational::times(const Rational& o) const {
    std::vector<Factor> fs = factors_;
    fs.insert(fs.end(), o.factors_.begin(), o.factors_.end());
    return from_factors(lead_ * o.lead_, fs);
}

Rational Rational::scaled(Complex c) const { return from_factors(lead_ * c, factors_); }

double Divisor::degree() const {
    double s = 0.0;
    for (auto& e : entries) s += e.coeff;
    return s;
}

double Divisor::coeff_at(const CPoint& p) const {
    for (auto& e : entries)
        if (same_point(e.point, p, kCoincide)) return e.coeff;
    return 0.0;
}

CubicDifferential CubicDifferential::from_coefficients(const Poly& num, const Poly& den) {
    return CubicDifferential(Rational::from_coefficients(num, den));
}

CubicDifferential CubicDifferential::exp_kernel(Rational r) {
    CubicDifferential x(std::move(r));
    x.kind_ = Kind::ExpKernel;
    return x;
}

Complex CubicDifferential::eval(Complex z) const {
    Complex v = r_.eval(z);
    if (kind_ == Kind::ExpKernel) {
        if (std::abs(z) <= kNearPole) throw Error(ErrorCode::EssentialSingularity, "exp(1/z) at 0");
        v *= std::exp(1.0 / z);
    }
    return v;
}

Complex CubicDifferential::log_derivative(Complex z) const {
    Complex d = r_.log_derivative(z);
    if (kind_ == Kind::ExpKernel) d -= 1.0 / (z * z);
    return d;
}

CubicDifferential CubicDifferential::scaled(Complex lambda) const {
    CubicDifferential x = *this;
    x.r_ = r_.scaled(lambda);
    return x;
}

CubicDifferential CubicDifferential::to_w_chart() const {
    if (kind_ == Kind::ExpKernel) throw Error(ErrorCode::EssentialSingularity, "exp kernel has no w-chart form");
    // (1/w - r)^m = (-r)^m (w - 1/r)^m w^-m, and (dz/dw)^3 = -w^-6.
    Complex lead = -r_.lead();
    int wpow = -6;
    std::vector<Factor> fs;
    for (auto& f : r_.factors()) {
        wpow -= f.mult;
        if (std::abs(f.root) == 0.0) continue;
        lead *= ipow(-f.root, f.mult);
        fs.push_back({1.0 / f.root, f.mult});
    }
    fs.push_back({Complex(0.0, 0.0), wpow});
    return CubicDifferential(Rational::from_factors(lead, fs));
}

nlohmann::json CubicDifferential::to_json() const {
    nlohmann::json j;
    j["kind"] = kind_ == Kind::Rational ? "rational" : "exp_kernel";
    j["num"] = poly_json(r_.numerator());
    j["den"] = poly_json(r_.denominator());
    j["lead"] = {r_.lead().real(), r_.lead().imag()};
    nlohmann::json fs = nlohmann::json::array();
    for (auto& f : r_.factors()) fs.push_back({{"root", {f.root.real(), f.root.imag()}}, {"mult", f.mult}});
    j["factors"] = fs;
    if (kind_ == Kind::ExpKernel) j["kernel"] = "exp_inv_z";
    return j;
}

CubicDifferential CubicDifferential::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "cubic differential must be an object");
    for (auto& [k, v] : j.items()) {
        (void)v;
        if (k != "kind" && k != "num" && k != "den" && k != "lead" && k != "factors" && k != "kernel")
            throw Error(ErrorCode::InvalidConfig, "unknown key in cubic differential: " + k);
    }
    std::string kind = j.value("kind", std::string("rational"));
    bool is_exp = kind == "exp_kernel" || j.contains("kernel");
    if (kind != "rational" && kind != "exp_kernel") throw Error(ErrorCode::InvalidConfig, "unknown kind " + kind);
    if (j.contains("kernel") && j["kernel"] != "exp_inv_z")
        throw Error(ErrorCode::InvalidConfig, "only the exp_inv_z kernel is supported");
    Rational r;
    if (j.contains("factors")) {
        std::vector<Factor> fs;
        for (auto& f : j["factors"]) fs.push_back({complex_from_json(f.at("root")), f.at("mult").get<int>()});
        Complex lead = j.contains("lead") ? complex_from_json(j["lead"]) : Complex(1.0, 0.0);
        r = Rational::from_factors(lead, fs);
    } else {
        Poly num = j.contains("num") ? poly_from_json(j["num"]) : Poly{Complex(1.0, 0.0)};
        Poly den = j.contains("den") ? poly_from_json(j["den"]) : Poly{Complex(1.0, 0.0)};
        r = Rational::from_coefficients(num, den);
    }
    return is_exp ? CubicDifferential::exp_kernel(r) : CubicDifferential(r);
}

int ord_at(const CubicDifferential& xi, const CPoint& p) {
    if (!xi.is_rational()) {
        if (p.is_infinity() || std::abs(p.z) == 0.0)
            throw Error(ErrorCode::EssentialSingularity, "essential singularity of exp(1/z)");
        return xi.rational_part().mult_at(p.z);
    }
    const Rational& r = xi.rational_part();
    if (r.is_zero()) throw Error(ErrorCode::InvalidArgument, "order of the zero differential");
    if (p.is_infinity()) return -(r.num_degree() - r.den_degree()) - 6;
    return r.mult_at(p.z);
}

Divisor divisor_of(const CubicDifferential& xi) {
    if (!xi.is_rational()) throw Error(ErrorCode::EssentialSingularity, "divisor of exp(1/z)");
    Divisor d;
    for (auto& f : xi.rational_part().factors()) d.entries.push_back({CPoint::finite(f.root), double(f.mult)});
    int oinf = ord_at(xi, CPoint::infinity());
    if (oinf != 0) d.entries.push_back({CPoint::infinity(), double(oinf)});
    return d;
}

Complex residue_at(const CubicDifferential& xi, const CPoint& p) {
    if (!xi.is_rational()) throw Error(ErrorCode::EssentialSingularity, "residue of exp(1/z)");
    if (p.is_infinity()) throw Error(ErrorCode::InfinityUnsupported, "residue at infinity");
    int ord = 0;
    ord = xi.rational_part().mult_at(p.z);
    if (ord >= 0) return Complex(0.0, 0.0);
    auto s = xi.rational_part().laurent(p.z, -ord, &ord);
    return s[-1 - ord];
}

Complex eval(const CubicDifferential& xi, Complex z) { return xi.eval(z); }

Complex Primitive::value(Complex z) const {
    Complex v = spk::eval(poly, z);
    for (auto& t : terms) {
        Complex d = 1.0 / (z - t.p), pw = d;
        for (auto& c : t.coeff) {
            v += c * pw;
            pw *= d;
        }
    }
    return v - offset;
}

Complex Primitive::derivative(Complex z) const {
    Complex v = spk::eval(spk::derivative(poly), z);
    for (auto& t : terms) {
        Complex d = 1.0 / (z - t.p), pw = d * d;
        for (size_t n = 0; n < t.coeff.size(); ++n) {
            v -= static_cast<double>(n + 1) * t.coeff[n] * pw;
            pw *= d;
        }
    }
    return v;
}

Primitive regular_primitive(const CubicDifferential& xi, const std::vector<CPoint>& punctures, Complex base_point) {
    if (!xi.is_rational()) throw Error(ErrorCode::EssentialSingularity, "primitive of exp(1/z)");
    const Rational& r = xi.rational_part();
    Primitive H;
    H.base_point = base_point;
    for (auto& p : punctures) {
        if (p.is_infinity()) continue;
        H.punctures.push_back(p.z);
        H.residues.push_back(residue_at(xi, p));
    }
    for (auto& pole : r.poles()) {
        bool listed = std::any_of(H.punctures.begin(), H.punctures.end(),
                                  [&](Complex q) { return close(q, pole, kCoincide); });
        if (!listed) throw Error(ErrorCode::PoleOutsidePunctures, "pole at " + CPoint::finite(pole).str());
        int ord = 0;
        auto s = r.laurent(pole, -r.mult_at(pole), &ord);
        Primitive::PoleTerm t;
        t.p = pole;
        // c_{-k} (z-p)^{-k} integrates to c_{-k} (z-p)^{1-k} / (1-k) for k >= 2.
        for (int k = 2; k <= -ord; ++k) t.coeff.push_back(s[-ord - k] / static_cast<double>(1 - k));
        if (!t.coeff.empty()) H.terms.push_back(t);
    }
    H.poly = antiderivative(divmod(r.numerator(), r.denominator()).first);
    H.offset = Complex(0.0, 0.0);
    H.offset = H.value(base_point);
    return H;
}

}  // namespace spk
