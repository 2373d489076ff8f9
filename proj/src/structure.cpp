// Assembly of special Kahler structures from (hyperbolic metric, cubic form)
// and the inverse maps.
#include "spk/structure.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <limits>

#include "structure_internal.hpp"

namespace spk {

namespace detail {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

std::array<double, 2> im_dz(const Chart& c, Complex z, Complex G) {
    if (c.is_log_polar()) {
        Complex q = G * (z - c.lp.center);
        return {q.imag(), q.real()};
    }
    return {G.imag(), G.real()};
}

std::array<double, 2> re_dz(const Chart& c, Complex z, Complex G) {
    if (c.is_log_polar()) {
        Complex q = G * (z - c.lp.center);
        return {q.real(), -q.imag()};
    }
    return {G.real(), -G.imag()};
}

Complex xi_from_eta(const Chart& c, Complex z, double e1, double e2) {
    // eta = -4 Im(Xi_0 dz)
    Complex q = -Complex(e2, e1) / 4.0;
    return c.is_log_polar() ? q / (z - c.lp.center) : q;
}

CubicDifferential in_frame(const CubicDifferential& xi, Frame f) {
    return f == Frame::Z ? xi : xi.to_w_chart();
}

}  // namespace detail

using namespace detail;

namespace {

const double kLog4 = 2.0 * std::log(2.0);

std::vector<Complex> distinct_poles(const CubicDifferential& xi) {
    if (!xi.is_rational() || xi.rational_part().is_zero()) return {};
    return xi.rational_part().poles();
}

Complex pick_base_point(const std::vector<Complex>& poles) {
    const Complex candidates[] = {{0.0, 0.0}, {0.3, 0.4}, {-0.45, 0.2}, {0.1, -0.6}, {0.7, 0.05}, {-0.2, -0.35}};
    for (Complex c : candidates) {
        bool ok = true;
        for (Complex p : poles) ok = ok && std::abs(c - p) > 0.05;
        if (ok) return c;
    }
    return {0.123, 0.456};
}

void fill_potential(ChartStructure& cs, const ChartField& cf) {
    const Chart& c = cf.chart;
    const size_t n = c.size();
    cs.chart = c;
    cs.u.assign(n, kNaN);
    cs.du.assign(n, {kNaN, kNaN});
    cs.mask.assign(n, 0);
    Gradient gv = gradient(c, cf.v);
    for (size_t k = 0; k < n; ++k) {
        if (!cf.usable[k] || !std::isfinite(cf.v[k])) continue;
        Complex z = c.point(k);
        Complex X, L;
        try {
            X = cs.xi.eval(z);
            L = cs.xi.log_derivative(z);
        } catch (const Error&) {
            continue;
        }
        double ax = std::abs(X);
        if (!(ax > 0.0) || !std::isfinite(ax)) continue;
        cs.u[k] = cf.v[k] - std::log(ax) - kLog4;
        cs.mask[k] = 1;
        if (gv.ok[k] && std::isfinite(gv.d1[k]) && std::isfinite(gv.d2[k])) {
            auto dl = re_dz(c, z, L);
            cs.du[k] = {gv.d1[k] - dl[0], gv.d2[k] - dl[1]};
        }
    }
}

void clear_connection(ChartStructure& cs) {
    cs.h.clear();
    cs.a.clear();
    cs.punctures.clear();
    for (auto& row : cs.omega.w)
        for (auto& e : row)
            for (auto& f : e) f.clear();
    cs.omega.ok.clear();
}

// h, a and omega from the cubic form, with u and du already in place.
void fill_connection(ChartStructure& cs, StarOrientation star) {
    clear_connection(cs);
    if (!cs.xi.is_rational()) return;
    const Chart& c = cs.chart;
    const size_t n = c.size();
    cs.punctures = distinct_poles(cs.xi);
    cs.base_point = pick_base_point(cs.punctures);
    std::vector<CPoint> pts;
    for (Complex p : cs.punctures) pts.push_back(CPoint::finite(p));
    const bool zero = cs.xi.rational_part().is_zero();
    Primitive P;
    if (!zero) P = regular_primitive(cs.xi, pts, cs.base_point);
    const size_t np = cs.punctures.size();
    std::vector<Complex> A(np, 0.0);
    for (size_t j = 0; j < np && !zero; ++j) A[j] = P.residues[j];
    for (size_t j = 0; j < np; ++j) cs.a.push_back(4.0 * A[j].real());
    cs.h.assign(n, kNaN);
    for (auto& row : cs.omega.w)
        for (auto& e : row)
            for (auto& f : e) f.assign(n, kNaN);
    cs.omega.ok.assign(n, 0);
    for (size_t k = 0; k < n; ++k) {
        if (!cs.mask[k]) continue;
        Complex z = c.point(k);
        double hv = 0.0;
        std::array<double, 2> eta{0.0, 0.0};
        if (!zero) {
            hv = -4.0 * P.value(z).imag();
            auto dH = im_dz(c, z, P.derivative(z));
            eta = {-4.0 * dH[0], -4.0 * dH[1]};
        }
        for (size_t j = 0; j < np; ++j) {
            Complex d = z - cs.punctures[j];
            hv -= 4.0 * A[j].imag() * std::log(std::abs(d));
            auto dlog = re_dz(c, z, 1.0 / d);  // d log|z - p|
            auto darg = im_dz(c, z, 1.0 / d);  // d arg(z - p); phi = -d arg
            for (int q = 0; q < 2; ++q) eta[q] += -4.0 * A[j].imag() * dlog[q] - cs.a[j] * darg[q];
        }
        cs.h[k] = hv;
        const auto& du = cs.du[k];
        if (!std::isfinite(du[0]) || !std::isfinite(du[1])) continue;
        MatrixForm W = connection_matrix(du, eta, std::exp(cs.u[k]), star);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                cs.omega.w[i][j][0][k] = W.first(i, j);
                cs.omega.w[i][j][1][k] = W.second(i, j);
            }
        cs.omega.ok[k] = 1;
    }
}

void fill_global_punctures(SpecialKahlerStructure& s) {
    s.punctures.clear();
    s.a.clear();
    if (!s.xi.is_rational() || s.xi.rational_part().is_zero()) return;
    auto poles = distinct_poles(s.xi);
    std::vector<CPoint> pts;
    for (Complex p : poles) pts.push_back(CPoint::finite(p));
    Primitive P = regular_primitive(s.xi, pts, pick_base_point(poles));
    for (size_t j = 0; j < pts.size(); ++j) {
        s.punctures.push_back(pts[j]);
        s.a.push_back(4.0 * P.residues[j].real());
    }
    if (ord_at(s.xi, CPoint::infinity()) < 0) {
        s.punctures.push_back(CPoint::infinity());
        s.a.push_back(4.0 * residue_at(s.xi.to_w_chart(), CPoint::finite(0.0, 0.0)).real());
    }
}

}  // namespace

double SpecialKahlerStructure::u_at(Frame f, Complex c) const {
    int own = gtilde.owner(f, c);
    if (own < 0) return kNaN;
    for (const auto& cs : charts) {
        if (cs.metric_chart != own) continue;
        Complex p = to_frame(f, cs.chart.frame, c);
        double out;
        if (interpolate(cs.chart, cs.u, cs.mask, p, &out)) return out;
    }
    return kNaN;
}

SpecialKahlerStructure assemble(const HyperbolicMetric& gtilde, const CubicDifferential& xi) {
    if (gtilde.charts.empty()) throw Error(ErrorCode::ChartMismatch, "metric has no grid");
    SpecialKahlerStructure s;
    s.gtilde = gtilde;
    s.xi = xi;
    s.star = calibrated_star();
    s.metric_only = !xi.is_rational();
    s.source = "assemble";
    if (s.metric_only)
        s.warnings.push_back(std::string(error_name(ErrorCode::EssentialSingularityMetricOnly)) +
                             ": exp(1/z) kernel, connection and h omitted");
    long covered = 0;
    for (size_t i = 0; i < gtilde.charts.size(); ++i) {
        const auto& cf = gtilde.charts[i];
        if (s.metric_only && cf.chart.frame == Frame::W)
            throw Error(ErrorCode::ChartMismatch, "exp(1/z) structures live in the z chart only");
        ChartStructure cs;
        cs.metric_chart = static_cast<int>(i);
        cs.xi = in_frame(xi, cf.chart.frame);
        fill_potential(cs, cf);
        if (!s.metric_only) fill_connection(cs, s.star);
        for (auto m : cs.mask) covered += m;
        s.charts.push_back(std::move(cs));
    }
    if (covered == 0) throw Error(ErrorCode::ChartMismatch, "the cubic form is undefined on every grid node");
    if (!s.metric_only) fill_global_punctures(s);
    return s;
}

ConnectionFields connection_form(const Chart& chart, const std::vector<double>& u, const std::vector<double>& h,
                                 const std::vector<double>& a, const std::vector<Complex>& punctures,
                                 std::optional<StarOrientation> star) {
    if (!star) throw Error(ErrorCode::NotCalibrated, "Hodge star orientation not calibrated");
    const size_t n = chart.size();
    if (u.size() != n || h.size() != n || a.size() != punctures.size())
        throw Error(ErrorCode::InvalidArgument, "field sizes do not match the chart");
    Gradient gu = gradient(chart, u), gh = gradient(chart, h);
    ConnectionFields out;
    for (auto& row : out.w)
        for (auto& e : row)
            for (auto& f : e) f.assign(n, kNaN);
    out.ok.assign(n, 0);
    for (size_t k = 0; k < n; ++k) {
        if (!gu.ok[k] || !gh.ok[k]) continue;
        Complex z = chart.point(k);
        std::array<double, 2> eta{gh.d1[k], gh.d2[k]};
        for (size_t j = 0; j < punctures.size(); ++j) {
            auto darg = im_dz(chart, z, 1.0 / (z - punctures[j]));
            eta[0] -= a[j] * darg[0];
            eta[1] -= a[j] * darg[1];
        }
        MatrixForm W = connection_matrix({gu.d1[k], gu.d2[k]}, eta, std::exp(u[k]), *star);
        bool fin = true;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                out.w[i][j][0][k] = W.first(i, j);
                out.w[i][j][1][k] = W.second(i, j);
                fin = fin && std::isfinite(W.first(i, j)) && std::isfinite(W.second(i, j));
            }
        out.ok[k] = fin;
    }
    return out;
}

SpecialKahlerStructure sample_model(const ModelStructure& m, const LogPolarGrid& g) {
    if (g.center != Complex(0.0, 0.0)) throw Error(ErrorCode::InvalidArgument, "model grids are centred at 0");
    if (m.kind() == ModelStructure::Kind::Log && !(g.rho_max < 0.0))
        throw Error(ErrorCode::RegionOutsideChart, "log models live in the unit disc");
    SpecialKahlerStructure s;
    s.star = calibrated_star();
    s.source = m.describe();
    CubicDifferential xi;
    if (m.kind() == ModelStructure::Kind::Cone) {
        xi = CubicDifferential::rational(Rational::constant(0.0));
    } else {
        Complex lead = Complex(0.0, -0.25) * m.b();
        std::vector<Factor> f;
        if (m.k() != 1) f.push_back({Complex(0.0, 0.0), m.k() - 1});
        xi = CubicDifferential::rational(Rational::from_factors(lead, f));
    }
    s.xi = xi;

    ChartStructure cs;
    cs.chart = Chart::log_polar(g);
    cs.metric_chart = 0;
    cs.xi = xi;
    const size_t n = cs.chart.size();
    cs.u.assign(n, kNaN);
    cs.du.assign(n, {kNaN, kNaN});
    cs.h.assign(n, kNaN);
    cs.mask.assign(n, 1);
    for (auto& row : cs.omega.w)
        for (auto& e : row)
            for (auto& f : e) f.assign(n, kNaN);
    cs.omega.ok.assign(n, 1);
    cs.punctures = {Complex(0.0, 0.0)};
    double a0 = (m.kind() == ModelStructure::Kind::Log && m.k() == 0) ? m.b().imag() : 0.0;
    cs.a = {a0};
    ChartField cf;
    cf.chart = cs.chart;
    cf.v.assign(n, kNaN);
    cf.usable.assign(n, 1);
    cf.singular_index = 0;
    cf.own_radius = std::exp(g.rho_max);
    cf.has_inset = false;
    for (int i = 0; i < g.n_rho; ++i)
        for (int j = 0; j < g.n_theta; ++j) {
            size_t k = g.idx(i, j);
            double rho = g.rho(i), th = g.theta(j);
            Complex z = g.point(i, j);
            cs.u[k] = m.u(rho, th);
            cs.du[k] = m.du(rho, th);
            MatrixForm w = m.omega(rho, th);
            for (int p = 0; p < 2; ++p)
                for (int q = 0; q < 2; ++q) {
                    cs.omega.w[p][q][0][k] = w.first(p, q);
                    cs.omega.w[p][q][1][k] = w.second(p, q);
                }
            if (m.kind() == ModelStructure::Kind::Cone)
                cs.h[k] = 0.0;
            else if (m.k() == 0)
                cs.h[k] = m.b().real() * rho;
            else
                cs.h[k] = (m.b() * std::pow(z, m.k())).real() / m.k();
            double ax = std::abs(m.xi0(z));
            cf.v[k] = cs.u[k] + std::log(ax) + kLog4;  // -inf for the flat cones
        }
    s.gtilde.charts.push_back(std::move(cf));
    s.gtilde.closed_form = m.describe();
    s.charts.push_back(std::move(cs));
    s.punctures = {CPoint::finite(0.0, 0.0)};
    s.a = {a0};
    return s;
}

HyperbolicMetric associated_hyperbolic(const SpecialKahlerStructure& s) {
    HyperbolicMetric m = s.gtilde;
    for (const auto& cs : s.charts) {
        auto& cf = m.charts[cs.metric_chart];
        for (size_t k = 0; k < cf.v.size(); ++k) {
            if (!cs.mask[k]) {
                cf.v[k] = kNaN;
                continue;
            }
            double ax = std::abs(cs.xi.eval(cs.chart.point(k)));
            cf.v[k] = ax > 0.0 ? cs.u[k] + std::log(ax) + kLog4 : kNaN;
        }
    }
    return m;
}

ExtractResult extract_cubic_fit(const SpecialKahlerStructure& s) {
    if (s.metric_only)
        throw Error(ErrorCode::EssentialSingularityMetricOnly, "metric-only structure carries no connection");
    if (!s.xi.is_rational()) throw Error(ErrorCode::EssentialSingularity, "cubic form is not rational");
    const Rational& R = s.xi.rational_part();
    const Poly D = R.denominator();
    const int dN = std::max(0, R.num_degree());

    struct Sample {
        Complex z, x;
    };
    std::vector<Sample> all;
    for (const auto& cs : s.charts) {
        if (cs.chart.frame != Frame::Z || cs.omega.ok.empty()) continue;
        for (size_t k = 0; k < cs.chart.size(); ++k) {
            if (!cs.omega.ok[k] || !cs.mask[k]) continue;
            double eu = std::exp(-cs.u[k]);
            double e1 = eu * (cs.omega.w[0][0][0][k] - cs.omega.w[1][1][0][k]);
            double e2 = eu * (cs.omega.w[0][0][1][k] - cs.omega.w[1][1][1][k]);
            Complex z = cs.chart.point(k);
            Complex x = xi_from_eta(cs.chart, z, e1, e2);
            if (std::isfinite(x.real()) && std::isfinite(x.imag())) all.push_back({z, x});
        }
    }
    if (all.size() < static_cast<size_t>(dN + 1) * 4)
        throw Error(ErrorCode::InsufficientRange, "too few connection samples to recover the cubic form");
    const size_t want = 4000;
    std::vector<Sample> sm;
    if (all.size() <= want) {
        sm = all;
    } else {
        for (size_t q = 0; q < want; ++q) sm.push_back(all[q * all.size() / want]);
    }
    double xmax = 0.0;
    for (auto& p : sm) xmax = std::max(xmax, std::abs(p.x));
    ExtractResult res;
    if (xmax == 0.0) {
        res.xi = CubicDifferential::rational(Rational::constant(0.0));
        res.samples = static_cast<int>(sm.size());
        return res;
    }
    std::vector<Sample> use;
    for (auto& p : sm)
        if (std::abs(p.x) > 1e-12 * xmax) use.push_back(p);
    const long m = static_cast<long>(use.size()), nc = dN + 1;
    Eigen::MatrixXcd A(m, nc);
    Eigen::VectorXcd b(m);
    for (long r = 0; r < m; ++r) {
        Complex dz = eval(D, use[r].z);
        Complex rhs = use[r].x * dz;
        double w = 1.0 / std::abs(rhs);
        Complex pw = 1.0;
        for (long c = 0; c < nc; ++c) {
            A(r, c) = w * pw;
            pw *= use[r].z;
        }
        b[r] = w * rhs;
    }
    Eigen::VectorXcd coef = A.colPivHouseholderQr().solve(b);
    res.fit_residual = (A * coef - b).norm() / b.norm();
    res.samples = static_cast<int>(m);
    Poly N(coef.data(), coef.data() + nc);
    res.xi = CubicDifferential::from_coefficients(N, D);
    return res;
}

CubicDifferential extract_cubic(const SpecialKahlerStructure& s) {
    ExtractResult r = extract_cubic_fit(s);
    if (!(r.fit_residual <= 1e-6)) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "relative fit residual %.3e exceeds 1e-6", r.fit_residual);
        throw Error(ErrorCode::FitResidualTooLarge, buf);
    }
    return r.xi;
}

SpecialKahlerStructure rotate_family(const SpecialKahlerStructure& s, Complex lambda) {
    if (!(std::abs(std::abs(lambda) - 1.0) <= 1e-12))
        throw Error(ErrorCode::NotUnitModulus, "rotation parameter must have modulus 1");
    if (s.metric_only) throw Error(ErrorCode::EssentialSingularityMetricOnly, "metric-only structure cannot be rotated");
    SpecialKahlerStructure out = s;
    out.xi = s.xi.scaled(lambda);
    for (auto& cs : out.charts) {
        cs.xi = cs.xi.scaled(lambda);
        fill_connection(cs, out.star);
    }
    fill_global_punctures(out);
    out.source = s.source + " rotated";
    return out;
}

}  // namespace spk
