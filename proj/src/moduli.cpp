#include "spk/moduli.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace spk {

namespace {

constexpr std::size_t kReportStrataCap = 10000;

bool is_integer(double b) { return std::isfinite(b) && b == std::floor(b); }

int n_log(const SingularData& d) { return d.k() - d.ell; }

int beta_floor_sum(const SingularData& d) {
    int s = 0;
    for (double b : d.betas) s += static_cast<int>(std::floor(b));
    return s;
}

double beta_sum(const SingularData& d) {
    double s = 0.0;
    for (double b : d.betas) s += b;
    return s;
}

Complex point_value(const CPoint& p) { return p.z; }

// Abel sum of sum_j order_j p_j + sum_i m_i p_{ell + i}.
Complex abel_sum(const SingularData& d, const std::vector<int>& m) {
    Complex s = 0.0;
    for (int j = 0; j < d.k(); ++j) {
        int o = d.order(j) + (j >= d.ell && !m.empty() ? m[j - d.ell] : 0);
        s += static_cast<double>(o) * point_value(d.points[j]);
    }
    return s;
}

double abel_tol(Complex tau) { return 1e-9 * (1.0 + std::abs(tau)); }

// dim H^0 on the elliptic curve C / (Z + tau Z) of a line bundle of degree deg
// whose divisor class has Abel sum s.
int elliptic_dim(int deg, Complex s, Complex tau) {
    if (deg > 0) return deg;
    if (deg < 0) return 0;
    return lattice_distance(s, tau) <= abel_tol(tau) ? 1 : 0;
}

void check_tau(Complex tau) {
    if (!(tau.imag() > 0.0) || !std::isfinite(std::abs(tau)))
        throw Error(ErrorCode::BadLattice, "lattice parameter needs Im tau > 0");
}

// N for the stratum with added orders m (|m| = sm); nullopt when empty or unknown.
std::optional<int> stratum_N(const SingularData& d, const std::vector<int>& m, int sm) {
    int deg = degree_L(d) - sm;
    if (d.genus == 0) return deg >= 0 ? std::optional<int>(deg) : std::nullopt;
    if (d.genus == 1) {
        if (!d.tau) return deg > 0 ? std::optional<int>(deg - 1) : std::nullopt;
        int dim = elliptic_dim(deg, -abel_sum(d, m), *d.tau);
        return dim > 0 ? std::optional<int>(dim - 1) : std::nullopt;
    }
    // Riemann-Roch in the non-special range
    if (deg > 2 * d.genus - 2) return deg - d.genus;
    return std::nullopt;
}

int strata_bound(const SingularData& d) {
    return static_cast<int>(std::floor(d.k() - 6.0 * (d.genus - 1) - beta_sum(d) + 1e-12));
}

// Visit m in Z_+^n with |m| = s, lexicographically descending (unit vectors e_1, e_2, ... in order).
bool visit_compositions(int n, int s, std::vector<int>& m, int pos, const std::function<bool(const std::vector<int>&)>& f) {
    if (pos == n - 1) {
        m[pos] = s;
        return f(m);
    }
    for (int v = s; v >= 0; --v) {
        m[pos] = v;
        if (!visit_compositions(n, s - v, m, pos + 1, f)) return false;
    }
    return true;
}

double binom(int n, int r) {
    if (r < 0 || r > n) return 0.0;
    double out = 1.0;
    for (int i = 1; i <= r; ++i) out = out * (n - r + i) / i;
    return out;
}

std::string topology_text(const SingularData& d, int N) {
    std::string n = std::to_string(N), s = std::to_string(2 * N + 1);
    if (d.ell == d.k()) return "S^" + s + " (projectivization CP^" + n + ")";
    return "open dense subset of S^" + s + " (projectivization Zariski-open in CP^" + n + ")";
}

void fill_strata(ModuliReport& r, const SingularData& d) {
    r.strata_total = count_strata(d);
    r.strata = enumerate_strata(d, kReportStrataCap);
    if (r.strata.size() < r.strata_total)
        r.reasons.push_back("strata list capped at " + std::to_string(kReportStrataCap) + " of " +
                            std::to_string(r.strata_total));
}

}  // namespace

int SingularData::order(int j) const {
    double b = betas.at(static_cast<size_t>(j));
    return conical(j) ? static_cast<int>(std::floor(b)) : static_cast<int>(b) - 1;
}

void SingularData::validate() const {
    if (genus < 0) throw Error(ErrorCode::InvalidArgument, "genus must be non-negative");
    if (points.size() != betas.size()) throw Error(ErrorCode::InvalidArgument, "points and betas differ in length");
    if (ell < 0 || ell > k()) throw Error(ErrorCode::InvalidArgument, "ell must lie in [0, k]");
    for (int j = 0; j < k(); ++j) {
        if (!std::isfinite(betas[j])) throw Error(ErrorCode::InvalidArgument, "beta must be finite");
        if (!conical(j) && !is_integer(betas[j]))
            throw Error(ErrorCode::InvalidArgument, "logarithmic slots need integer beta");
        if (genus >= 1 && points[j].is_infinity())
            throw Error(ErrorCode::InvalidArgument, "points on an elliptic curve are finite representatives");
        for (int i = 0; i < j; ++i)
            if (same_point(points[i], points[j], 1e-12))
                throw Error(ErrorCode::InvalidArgument, "repeated point " + points[j].str());
    }
    if (genus == 1 && tau) check_tau(*tau);
}

nlohmann::json SingularData::to_json() const {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : points) {
        if (p.is_infinity())
            pts.push_back("inf");
        else
            pts.push_back({p.z.real(), p.z.imag()});
    }
    nlohmann::json j{{"genus", genus}, {"points", pts}, {"betas", betas}, {"ell", ell}};
    if (tau) j["tau"] = {tau->real(), tau->imag()};
    return j;
}

SingularData SingularData::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "singular data must be an object");
    for (auto& [key, v] : j.items()) {
        (void)v;
        if (key != "genus" && key != "points" && key != "betas" && key != "ell" && key != "tau")
            throw Error(ErrorCode::InvalidConfig, "unknown key in singular data: " + key);
    }
    SingularData d;
    try {
        d.genus = j.value("genus", 0);
        d.ell = j.value("ell", 0);
        d.betas = j.at("betas").get<std::vector<double>>();
        if (j.contains("points")) {
            for (const auto& p : j["points"]) {
                if (p.is_string() && p.get<std::string>() == "inf")
                    d.points.push_back(CPoint::infinity());
                else if (p.is_array() && p.size() == 2)
                    d.points.push_back(CPoint::finite(p[0].get<double>(), p[1].get<double>()));
                else if (p.is_number())
                    d.points.push_back(CPoint::finite(p.get<double>(), 0.0));
                else
                    throw Error(ErrorCode::InvalidConfig, "point must be [re, im] or \"inf\"");
            }
        } else {
            // default: distinct points on the unit circle
            const int k = static_cast<int>(d.betas.size());
            for (int i = 0; i < k; ++i) d.points.push_back(CPoint::finite(std::polar(1.0, 2.0 * M_PI * (i + 0.25) / k)));
        }
        if (j.contains("tau")) {
            const auto& t = j["tau"];
            if (!t.is_array() || t.size() != 2) throw Error(ErrorCode::InvalidConfig, "tau must be [re, im]");
            d.tau = Complex(t[0].get<double>(), t[1].get<double>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("singular data: ") + e.what());
    }
    try {
        d.validate();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::BadLattice) throw;
        throw Error(ErrorCode::InvalidConfig, e.what());
    }
    return d;
}

nlohmann::json ModuliReport::to_json() const {
    nlohmann::json st = nlohmann::json::array();
    for (const auto& s : strata) st.push_back({{"m", s.m}, {"N", s.N}});
    nlohmann::json j{{"exists", exists}, {"verdict", verdict}, {"deg_L", deg_L}, {"topology", topology},
                     {"strata", st},     {"strata_total", strata_total}, {"reasons", reasons}};
    j["N"] = N ? nlohmann::json(*N) : nlohmann::json(nullptr);
    return j;
}

int degree_L(const SingularData& d) { return 6 * (d.genus - 1) + n_log(d) - beta_floor_sum(d); }

double lattice_distance(Complex s, Complex tau) {
    double b = s.imag() / tau.imag();
    double a = s.real() - b * tau.real();
    double best = std::numeric_limits<double>::infinity();
    double a0 = std::round(a), b0 = std::round(b);
    for (int da = -1; da <= 1; ++da)
        for (int db = -1; db <= 1; ++db)
            best = std::min(best, std::abs(s - (a0 + da) - (b0 + db) * tau));
    return best;
}

ModuliReport existence_check(const SingularData& d) {
    d.validate();
    if (d.genus == 1 && d.tau) return elliptic_check(*d.tau, d);
    ModuliReport r;
    r.deg_L = degree_L(d);
    // Sum floor(beta) over conical slots plus beta over logarithmic ones is sum floor(beta).
    const double sb = beta_sum(d);
    const int sf = beta_floor_sum(d);
    const bool first = 4.0 * (d.genus - 1) < sb;
    const bool second = sf <= 6 * (d.genus - 1) + n_log(d);
    if (!first) r.reasons.push_back("4(genus - 1) < sum beta fails");
    if (!second) r.reasons.push_back("sum floor(beta) <= 6(genus - 1) + k - ell fails");
    r.exists = first && second;
    if (d.genus == 0) {
        r.verdict = "iff";
        if (r.exists) {
            r.N = r.deg_L;
            r.topology = topology_text(d, *r.N);
            fill_strata(r, d);
        } else {
            r.topology = "empty";
        }
        return r;
    }
    r.verdict = "necessary-only";
    if (d.genus == 1) r.reasons.push_back("genus 1 without a lattice: only the necessary inequalities are checked");
    else r.reasons.push_back("genus >= 2: only the necessary inequalities are checked");
    r.topology = r.exists ? "unknown" : "empty";
    if (r.exists && r.deg_L > 2 * d.genus - 2) r.N = r.deg_L - d.genus;
    return r;
}

int h_space_dim(const SingularData& d) {
    d.validate();
    if (d.genus == 0) return std::max(0, degree_L(d) + 1);
    if (d.genus == 1 && d.tau) return elliptic_dim(degree_L(d), -abel_sum(d, {}), *d.tau);
    throw Error(ErrorCode::GenusUnsupported, "dim H^0(L) is implemented for genus 0 and for genus 1 with a lattice");
}

std::vector<CubicDifferential> basis_on_sphere(const SingularData& d) {
    d.validate();
    if (d.genus != 0) throw Error(ErrorCode::GenusUnsupported, "explicit sections are built on the sphere only");
    ModuliReport r = existence_check(d);
    if (!r.exists) throw Error(ErrorCode::EmptySpace, "no structure with these singularities");
    const int N = *r.N;
    std::vector<CubicDifferential> out;
    for (int t = 0; t <= N; ++t) {
        std::vector<Factor> fs;
        int zero_mult = t;
        for (int j = 0; j < d.k(); ++j) {
            if (d.points[j].is_infinity()) continue;
            if (d.points[j].z == Complex(0.0, 0.0))
                zero_mult += d.order(j);
            else
                fs.push_back({d.points[j].z, d.order(j)});
        }
        fs.push_back({Complex(0.0, 0.0), zero_mult});
        out.push_back(CubicDifferential::rational(Rational::from_factors(1.0, fs)));
    }
    return out;
}

CubicDifferential sample_section(const SingularData& d, std::uint64_t seed) {
    auto basis = basis_on_sphere(d);
    const int N = static_cast<int>(basis.size()) - 1;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> G(0.0, 1.0);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Poly P(static_cast<size_t>(N) + 1);
        for (auto& c : P) c = Complex(G(rng), G(rng));
        double scale = 0.0;
        for (auto c : P) scale = std::max(scale, std::abs(c));
        bool ok = true;
        for (int j = d.ell; j < d.k() && ok; ++j) {
            const CPoint& p = d.points[j];
            if (p.is_infinity()) {
                ok = std::abs(P.back()) > 1e-8 * scale;
            } else {
                double pw = 0.0;
                for (int t = 0; t <= N; ++t) pw += std::pow(std::abs(p.z), t);
                ok = std::abs(eval(P, p.z)) > 1e-8 * scale * pw;
            }
        }
        if (!ok) continue;
        std::vector<Factor> fs;
        Complex lead = P.back();
        int zero_mult = 0;
        if (N > 0) {
            for (const auto& rt : roots(P)) {
                if (std::abs(rt.z) == 0.0)
                    zero_mult += rt.mult;
                else
                    fs.push_back({rt.z, rt.mult});
            }
        }
        for (int j = 0; j < d.k(); ++j) {
            if (d.points[j].is_infinity()) continue;
            if (d.points[j].z == Complex(0.0, 0.0))
                zero_mult += d.order(j);
            else
                fs.push_back({d.points[j].z, d.order(j)});
        }
        if (zero_mult != 0) fs.push_back({Complex(0.0, 0.0), zero_mult});
        return CubicDifferential::rational(Rational::from_factors(lead, fs));
    }
    throw Error(ErrorCode::EmptySpace, "could not sample a section with exact orders");
}

std::uint64_t count_strata(const SingularData& d) {
    d.validate();
    const int n = n_log(d);
    if (n == 0) return stratum_N(d, {}, 0) ? 1 : 0;
    const int smax = std::min(strata_bound(d), d.genus == 0 ? degree_L(d) : strata_bound(d));
    if (d.genus == 0) {
        double total = 0.0;
        for (int s = 0; s <= smax; ++s) total += binom(s + n - 1, n - 1);
        return static_cast<std::uint64_t>(std::llround(total));
    }
    std::uint64_t total = 0;
    std::vector<int> m(n);
    for (int s = 0; s <= smax; ++s)
        visit_compositions(n, s, m, 0, [&](const std::vector<int>& mm) {
            if (stratum_N(d, mm, s)) ++total;
            return true;
        });
    return total;
}

std::vector<Stratum> enumerate_strata(const SingularData& d, std::size_t limit) {
    d.validate();
    std::vector<Stratum> out;
    const int n = n_log(d);
    if (n == 0) {
        if (auto N = stratum_N(d, {}, 0)) out.push_back({{}, *N});
        return out;
    }
    const int smax = strata_bound(d);
    std::vector<int> m(n);
    for (int s = 0; s <= smax && out.size() < limit; ++s) {
        if (d.genus == 0 && degree_L(d) - s < 0) break;
        visit_compositions(n, s, m, 0, [&](const std::vector<int>& mm) {
            if (auto N = stratum_N(d, mm, s)) out.push_back({mm, *N});
            return out.size() < limit;
        });
    }
    return out;
}

ModuliReport elliptic_check(Complex tau, const SingularData& d0) {
    check_tau(tau);
    SingularData d = d0;
    d.genus = 1;
    d.tau = tau;
    d.validate();
    ModuliReport r;
    r.verdict = "iff";
    r.deg_L = degree_L(d);
    const double tol = abel_tol(tau);
    const bool c1 = beta_sum(d) > 0.0;
    if (!c1) r.reasons.push_back("(i) sum beta > 0 fails");
    const int dim = elliptic_dim(r.deg_L, -abel_sum(d, {}), tau);
    const bool c2 = dim > 0;
    if (!c2) r.reasons.push_back("(ii) H^0(L) is trivial");
    bool c3 = true;
    if (r.deg_L == 1) {
        for (int j = d.ell; j < d.k(); ++j) {
            // the single section vanishes at p_j when L(-p_j) is trivial
            Complex s = -abel_sum(d, {}) - d.points[j].z;
            if (lattice_distance(s, tau) <= tol) {
                c3 = false;
                r.reasons.push_back("(iii) -D + p_" + std::to_string(j + 1) + " is principal");
            }
        }
    }
    r.exists = c1 && c2 && c3;
    if (r.exists) {
        r.N = dim - 1;
        r.topology = topology_text(d, *r.N);
        fill_strata(r, d);
    } else {
        r.topology = "empty";
    }
    return r;
}

}  // namespace spk
