#include "spk/hyperbolic.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace spk {

namespace {
const double kTwoPi = 2.0 * std::acos(-1.0);
const double kNaN = std::numeric_limits<double>::quiet_NaN();

// Point c of frame `from` expressed in frame `to`; false for the point at infinity.
bool convert(Frame from, Frame to, Complex c, Complex* out) {
    if (from == to) {
        *out = c;
        return true;
    }
    if (std::abs(c) == 0.0) return false;
    *out = 1.0 / c;
    return true;
}

// Integral of a node profile A(rho_i) over [a, b] by Simpson on cubic interpolants.
double integrate_profile(const std::vector<double>& A, double rho0, double h, double a, double b) {
    int n = static_cast<int>(A.size());
    auto value = [&](double r) {
        double s = (r - rho0) / h;
        int i0 = std::max(0, std::min(static_cast<int>(std::floor(s)) - 1, n - 4));
        double x = s - i0, acc = 0.0;
        for (int m = 0; m < 4; ++m) {
            double w = 1.0;
            for (int l = 0; l < 4; ++l)
                if (l != m) w *= (x - l) / (m - l);
            acc += w * A[i0 + m];
        }
        return acc;
    };
    int cells = std::max(2, 2 * static_cast<int>(std::ceil((b - a) / h * 8.0)));
    double dh = (b - a) / cells, s = value(a) + value(b);
    for (int k = 1; k < cells; ++k) s += (k % 2 ? 4.0 : 2.0) * value(a + k * dh);
    return s * dh / 3.0;
}

// theta-summed density e^{2V} per rho row of a patch (V = v + rho).
std::vector<double> radial_profile(const ChartField& cf) {
    const auto& g = cf.chart.lp;
    std::vector<double> A(g.n_rho, 0.0);
    for (int i = 0; i < g.n_rho; ++i) {
        double s = 0.0;
        for (int j = 0; j < g.n_theta; ++j) s += std::exp(2.0 * (cf.v[g.idx(i, j)] + g.rho(i)));
        A[i] = s * g.h_theta();
    }
    return A;
}

// Area of the disc inside the inset, from the first integral V_rho^2 - e^{2V} = alpha^2.
double inset_area(const ChartField& cf) {
    const auto& g = cf.chart.lp;
    double s = 0.0, a = cf.inset_alpha;
    for (int j = 0; j < g.n_theta; ++j) {
        double e2 = std::exp(2.0 * (cf.v[g.idx(0, j)] + g.rho(0)));
        s += e2 / (std::sqrt(a * a + e2) + a);
    }
    return s * g.h_theta();
}

}  // namespace

std::string SingularityPrescription::str() const {
    char buf[128];
    if (type == Type::Cusp)
        std::snprintf(buf, sizeof buf, "cusp@%s", point.str().c_str());
    else
        std::snprintf(buf, sizeof buf, "conical(%.17g)@%s", alpha, point.str().c_str());
    return buf;
}

int HyperbolicMetric::owner(Frame f, Complex c) const {
    if (sphere) {
        for (size_t k = 0; k < charts.size(); ++k) {
            const auto& cf = charts[k];
            if (!cf.chart.is_log_polar()) continue;
            Complex loc;
            if (!convert(f, cf.chart.frame, c, &loc)) continue;
            if (std::abs(loc - cf.chart.lp.center) < cf.own_radius) return static_cast<int>(k);
        }
        Complex z;
        bool finite_z = convert(f, Frame::Z, c, &z);
        Frame want = (finite_z && std::abs(z) <= 1.0) ? Frame::Z : Frame::W;
        for (size_t k = 0; k < charts.size(); ++k)
            if (!charts[k].chart.is_log_polar() && charts[k].chart.frame == want) return static_cast<int>(k);
        return -1;
    }
    for (size_t k = 0; k < charts.size(); ++k) {
        const auto& ch = charts[k].chart;
        Complex loc;
        if (!convert(f, ch.frame, c, &loc)) continue;
        if (ch.is_log_polar()) {
            double r = std::abs(loc - ch.lp.center);
            if (r >= std::exp(ch.lp.rho_min) * (1 - 1e-12) && r <= std::exp(ch.lp.rho_max) * (1 + 1e-12))
                return static_cast<int>(k);
        } else {
            const auto& g = ch.cart;
            if (loc.real() >= g.x(0) && loc.real() <= g.x(g.n - 1) && loc.imag() >= g.y(0) &&
                loc.imag() <= g.y(g.n - 1))
                return static_cast<int>(k);
        }
    }
    return -1;
}

double HyperbolicMetric::v_at(Frame f, Complex c) const {
    int k = owner(f, c);
    if (k < 0) return kNaN;
    const auto& cf = charts[k];
    Complex loc;
    if (!convert(f, cf.chart.frame, c, &loc)) return kNaN;
    double v;
    if (!interpolate(cf.chart, cf.v, cf.usable, loc, &v)) return kNaN;
    if (cf.chart.frame != f) v -= 2.0 * std::log(std::abs(c));
    return v;
}

std::string HyperbolicMetric::describe() const {
    std::string s = sphere ? "sphere" : "chart";
    for (auto& cf : charts) s += "; " + cf.chart.describe();
    return s;
}

double model_v(ModelKind kind, double alpha, double r) {
    if (kind == ModelKind::Cusp) return -std::log(r * (-std::log(r)));
    return std::log(2.0 * alpha) + (alpha - 1.0) * std::log(r) - std::log(1.0 - std::pow(r, 2.0 * alpha));
}

HyperbolicMetric model_metric(ModelKind kind, double alpha, double radius, const ModelGrid& grid) {
    if (kind == ModelKind::Conical && (!(alpha > 0.0) || alpha == 1.0))
        throw Error(ErrorCode::InvalidAlpha, "conical model needs alpha > 0, alpha != 1");
    if (!(radius > grid.r_min) || !(radius < 1.0))
        throw Error(ErrorCode::InvalidArgument, "model disc radius must lie in (r_min, 1)");
    LogPolarGrid g;
    g.rho_min = std::log(grid.r_min);
    g.rho_max = std::log(radius);
    g.n_rho = grid.n_rho;
    g.n_theta = grid.n_theta;
    HyperbolicMetric m;
    ChartField cf;
    cf.chart = Chart::log_polar(g);
    cf.v.resize(cf.chart.size());
    for (int i = 0; i < g.n_rho; ++i) {
        double v = model_v(kind, alpha, std::exp(g.rho(i)));
        for (int j = 0; j < g.n_theta; ++j) cf.v[g.idx(i, j)] = v;
    }
    cf.usable.assign(cf.v.size(), 1);
    cf.singular_index = 0;
    cf.own_radius = radius;
    cf.has_inset = true;
    cf.inset_alpha = kind == ModelKind::Cusp ? 0.0 : alpha;
    m.charts.push_back(std::move(cf));
    m.prescriptions.push_back(kind == ModelKind::Cusp ? SingularityPrescription::cusp(CPoint::finite(0, 0))
                                                      : SingularityPrescription::conical(CPoint::finite(0, 0), alpha));
    char buf[64];
    if (kind == ModelKind::Cusp)
        std::snprintf(buf, sizeof buf, "cusp");
    else
        std::snprintf(buf, sizeof buf, "conical(%.17g)", alpha);
    m.closed_form = buf;
    return m;
}

HyperbolicMetric metric_from_function(const Chart& chart, const std::function<double(Complex)>& v,
                                      const std::string& tag) {
    HyperbolicMetric m;
    ChartField cf;
    cf.chart = chart;
    cf.v.assign(chart.size(), kNaN);
    cf.usable.assign(chart.size(), 0);
    for (size_t k = 0; k < chart.size(); ++k)
        if (chart.active[k]) {
            cf.v[k] = v(chart.point(k));
            cf.usable[k] = 1;
        }
    if (chart.is_log_polar()) cf.own_radius = std::exp(chart.lp.rho_max);
    m.charts.push_back(std::move(cf));
    m.closed_form = tag;
    return m;
}

void check_admissible(const std::vector<SingularityPrescription>& ps) {
    double s = 2.0;
    for (size_t i = 0; i < ps.size(); ++i) {
        const auto& p = ps[i];
        if (p.type == SingularityPrescription::Type::Conical && (!(p.alpha > 0.0) || p.alpha == 1.0))
            throw Error(ErrorCode::InvalidAlpha, "conical alpha must be positive and != 1: " + p.str());
        for (size_t j = 0; j < i; ++j)
            if (same_point(ps[j].point, p.point, 1e-9))
                throw Error(ErrorCode::InvalidArgument, "repeated prescription point " + p.point.str());
        s += p.cone_alpha() - 1.0;
    }
    if (!(s < 0.0)) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "sum(alpha_j - 1) + 2 = %.6g is not negative", s);
        throw Error(ErrorCode::NonAdmissible, buf);
    }
}

std::vector<std::vector<double>> gauss_curvature(const HyperbolicMetric& m, int order) {
    std::vector<std::vector<double>> out;
    for (const auto& cf : m.charts) {
        std::vector<uint8_t> ok;
        auto lap = laplacian_natural(cf.chart, cf.v, &ok, order);
        std::vector<double> K(cf.v.size(), kNaN);
        for (size_t k = 0; k < K.size(); ++k) {
            if (!ok[k]) continue;
            double scale = std::exp(-2.0 * cf.v[k]);
            if (cf.chart.is_log_polar()) scale *= std::exp(-2.0 * cf.chart.coords(k).first);
            K[k] = -scale * lap[k];
        }
        out.push_back(std::move(K));
    }
    return out;
}

double area(const HyperbolicMetric& m, const Region& region) {
    if (std::holds_alternative<AnnulusRegion>(region)) {
        const auto& a = std::get<AnnulusRegion>(region);
        for (const auto& cf : m.charts) {
            if (!cf.chart.is_log_polar() || cf.chart.lp.center != a.center) continue;
            const auto& g = cf.chart.lp;
            if (a.r_min <= 0.0) {
                if (!cf.has_inset) break;
                double rest = a.r_max > std::exp(g.rho_min)
                                  ? integrate_profile(radial_profile(cf), g.rho_min, g.h_rho(), g.rho_min,
                                                      std::log(a.r_max))
                                  : 0.0;
                return inset_area(cf) + rest;
            }
            double lo = std::log(a.r_min), hi = std::log(a.r_max);
            if (lo < g.rho_min - 1e-12 || hi > g.rho_max + 1e-12 || !(hi > lo)) break;
            return integrate_profile(radial_profile(cf), g.rho_min, g.h_rho(), lo, hi);
        }
        throw Error(ErrorCode::RegionOutsideChart, "annulus not covered by a log-polar grid centred at its centre");
    }

    double total = 0.0;
    if (!m.sphere) {
        for (const auto& cf : m.charts) {
            if (cf.chart.is_log_polar()) {
                const auto& g = cf.chart.lp;
                total += integrate_profile(radial_profile(cf), g.rho_min, g.h_rho(), g.rho_min, g.rho_max);
                if (cf.has_inset) total += inset_area(cf);
            } else {
                double h2 = cf.chart.cart.h * cf.chart.cart.h;
                for (size_t k = 0; k < cf.v.size(); ++k)
                    if (cf.usable[k] && std::isfinite(cf.v[k])) total += h2 * std::exp(2.0 * cf.v[k]);
            }
        }
        return total;
    }

    for (size_t idx = 0; idx < m.charts.size(); ++idx) {
        const auto& cf = m.charts[idx];
        if (cf.chart.is_log_polar()) {
            const auto& g = cf.chart.lp;
            total += inset_area(cf) +
                     integrate_profile(radial_profile(cf), g.rho_min, g.h_rho(), g.rho_min, std::log(cf.own_radius));
            continue;
        }
        const auto& g = cf.chart.cart;
        auto owned = [&](double x, double y) { return m.owner(cf.chart.frame, Complex(x, y)) == static_cast<int>(idx); };
        const int sub = 8;
        for (int j = 0; j < g.n; ++j)
            for (int i = 0; i < g.n; ++i) {
                size_t k = g.idx(i, j);
                double x = g.x(i), y = g.y(j), hh = 0.5 * g.h;
                if (std::hypot(x, y) > 1.0 + g.h) continue;
                bool c0 = owned(x, y);
                bool same = c0 == owned(x - hh, y - hh) && c0 == owned(x + hh, y - hh) && c0 == owned(x - hh, y + hh) &&
                            c0 == owned(x + hh, y + hh);
                double frac;
                if (same) {
                    frac = c0 ? 1.0 : 0.0;
                } else {
                    int cnt = 0;
                    for (int a = 0; a < sub; ++a)
                        for (int b = 0; b < sub; ++b)
                            cnt += owned(x - hh + (a + 0.5) * g.h / sub, y - hh + (b + 0.5) * g.h / sub);
                    frac = cnt / double(sub * sub);
                }
                if (frac == 0.0) continue;
                if (!cf.usable[k]) throw Error(ErrorCode::GridTooCoarse, "owned cell without a value");
                total += frac * g.h * g.h * std::exp(2.0 * cf.v[k]);
            }
    }
    return total;
}

}  // namespace spk
