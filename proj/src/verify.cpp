// Numerical verification of assembled structures and singularity order fits.
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "spk/parallel.hpp"
#include "spk/structure.hpp"
#include "structure_internal.hpp"

namespace spk {

using namespace detail;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

// max over k of fn(k); NaN counts as a failure.
template <class F>
double par_max(const std::vector<size_t>& nodes, F&& fn) {
    const size_t n = nodes.size();
    int workers = std::max(1, num_threads());
    // same blocking as parallel_for
    size_t nb = std::max<size_t>(1, std::min<size_t>(static_cast<size_t>(workers), n / 4096));
    std::vector<double> block_max(nb, 0.0);
    size_t chunk = (n + nb - 1) / std::max<size_t>(nb, 1);
    parallel_for(n, [&](size_t b, size_t e) {
        double m = 0.0;
        for (size_t q = b; q < e; ++q) {
            double r = fn(nodes[q]);
            if (!(r <= m)) m = std::isnan(r) ? kInf : r;
        }
        block_max[chunk ? std::min(nb - 1, b / chunk) : 0] = m;
    });
    double out = 0.0;
    for (double m : block_max) out = std::max(out, m);
    return out;
}

std::vector<uint8_t> box_interior(const Chart& c, const std::vector<uint8_t>& mask) {
    const int n1 = c.n1(), n2 = c.n2();
    const bool periodic = c.is_log_polar();
    std::vector<uint8_t> out(c.size(), 0);
    for (int i = 2; i < n1 - 2; ++i)
        for (int j = 0; j < n2; ++j) {
            if (!periodic && (j < 2 || j >= n2 - 2)) continue;
            bool ok = true;
            for (int di = -2; di <= 2 && ok; ++di)
                for (int dj = -2; dj <= 2 && ok; ++dj) {
                    int jj = periodic ? (j + dj + n2) % n2 : j + dj;
                    ok = mask[c.idx(i + di, jj)] != 0;
                }
            out[c.idx(i, j)] = ok;
        }
    return out;
}

// e^{-2 rho} on log-polar charts, 1 on Cartesian ones.
double lap_scale(const Chart& c, size_t k) {
    if (!c.is_log_polar()) return 1.0;
    double rho = c.coords(k).first;
    return std::exp(-2.0 * rho);
}

struct ChartResiduals {
    double pde = 0, curv = 0, flat = 0, torsion = 0, trace = 0, harmonic = 0;
    long nodes = 0;
};

ChartResiduals check_chart(const SpecialKahlerStructure& s, const ChartStructure& cs, const VerifyOptions& opts) {
    ChartResiduals r;
    const Chart& c = cs.chart;
    const size_t n = c.size();
    auto inner = box_interior(c, cs.mask);
    const bool multi = s.gtilde.charts.size() > 1;
    // zeros of Xi away from the patch centre make u singular on this grid
    std::vector<Complex> zeros;
    if (cs.xi.is_rational() && !cs.xi.rational_part().is_zero())
        for (const auto& f : cs.xi.rational_part().factors())
            if (f.mult > 0 && !(c.is_log_polar() && std::abs(f.root - c.lp.center) < 1e-12)) zeros.push_back(f.root);
    std::vector<size_t> nodes;
    for (size_t k = 0; k < n; ++k) {
        if (!inner[k]) continue;
        Complex p = c.point(k);
        if (multi && s.gtilde.owner(c.frame, p) != cs.metric_chart) continue;
        if (opts.region) {
            if (c.frame == Frame::W && p == Complex(0.0, 0.0)) continue;
            double d = std::abs(to_frame(c.frame, Frame::Z, p) - opts.region->center);
            if (!(d > opts.region->r_min && d < opts.region->r_max)) continue;
        }
        bool near_zero = false;
        for (Complex q : zeros) near_zero = near_zero || std::abs(p - q) < opts.zero_exclusion;
        if (near_zero) continue;
        nodes.push_back(k);
    }
    r.nodes = static_cast<long>(nodes.size());
    if (nodes.empty()) return r;

    std::vector<Complex> X(n, 0.0);
    const bool zero = cs.xi.is_rational() && cs.xi.rational_part().is_zero();
    std::vector<double> w(n, kNaN);
    for (size_t k = 0; k < n; ++k) {
        if (!cs.mask[k]) continue;
        X[k] = zero ? Complex(0.0) : cs.xi.eval(c.point(k));
        w[k] = zero ? cs.u[k] : cs.u[k] + std::log(std::abs(X[k]));
    }
    std::vector<uint8_t> okw;
    auto lap_w = laplacian_natural(c, w, &okw, 4);

    r.pde = par_max(nodes, [&](size_t k) {
        if (!okw[k]) return 0.0;
        double rhs = 16.0 * std::norm(X[k]) * std::exp(2.0 * cs.u[k]);
        return std::abs(lap_w[k] * lap_scale(c, k) - rhs) / (1.0 + rhs);
    });
    // Delta u = Delta w off the zeros of Xi, and w is the smooth representative
    r.curv = par_max(nodes, [&](size_t k) {
        if (!okw[k]) return 0.0;
        double K = 0.5 * std::exp(cs.u[k]) * lap_w[k] * lap_scale(c, k);
        double id = 8.0 * std::norm(X[k]) * std::exp(3.0 * cs.u[k]);
        return std::abs(K - id) / (1.0 + std::abs(K));
    });
    if (s.metric_only || cs.omega.ok.empty()) return r;

    Gradient G[2][2][2];
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int q = 0; q < 2; ++q) G[i][j][q] = gradient(c, cs.omega.w[i][j][q]);
    // du from the smooth part: d w - Re(d log Xi_0)
    Gradient gw = gradient(c, w);
    auto inner_w = box_interior(c, cs.omega.ok);
    Hessian hh = hessian(c, cs.h);
    auto A = [&](int q, size_t k) {
        Mat2 m;
        m << cs.omega.w[0][0][q][k], cs.omega.w[0][1][q][k], cs.omega.w[1][0][q][k], cs.omega.w[1][1][q][k];
        return m;
    };
    auto grad_ok = [&](size_t k) {
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int q = 0; q < 2; ++q)
                    if (!G[i][j][q].ok[k]) return false;
        return true;
    };
    r.flat = par_max(nodes, [&](size_t k) {
        if (!inner_w[k] || !grad_ok(k)) return 0.0;
        Mat2 d1A2, d2A1;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                d1A2(i, j) = G[i][j][1].d1[k];
                d2A1(i, j) = G[i][j][0].d2[k];
            }
        Mat2 A1 = A(0, k), A2 = A(1, k);
        Mat2 F = d1A2 - d2A1 + A1 * A2 - A2 * A1;
        return F.cwiseAbs().maxCoeff() / (1.0 + A1.squaredNorm() + A2.squaredNorm());
    });
    r.torsion = par_max(nodes, [&](size_t k) {
        if (!cs.omega.ok[k]) return 0.0;
        const auto& W = cs.omega.w;
        double big = 0.0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int q = 0; q < 2; ++q) big = std::max(big, std::abs(W[i][j][q][k]));
        double t1 = std::abs(W[0][1][0][k] - W[0][0][1][k]);
        double t2 = std::abs(W[1][0][1][k] - W[1][1][0][k]);
        return std::max(t1, t2) / (1.0 + big);
    });
    r.trace = par_max(nodes, [&](size_t k) {
        if (!cs.omega.ok[k] || !gw.ok[k]) return 0.0;
        std::array<double, 2> dl{0.0, 0.0};
        if (!zero) dl = re_dz(c, c.point(k), cs.xi.log_derivative(c.point(k)));
        double u1 = gw.d1[k] - dl[0], u2 = gw.d2[k] - dl[1];
        double t1 = cs.omega.w[0][0][0][k] + cs.omega.w[1][1][0][k] + u1;
        double t2 = cs.omega.w[0][0][1][k] + cs.omega.w[1][1][1][k] + u2;
        return std::max(std::abs(t1), std::abs(t2)) / (1.0 + std::hypot(u1, u2));
    });
    r.harmonic = par_max(nodes, [&](size_t k) {
        if (!hh.ok[k]) return 0.0;
        return std::abs(hh.d11[k] + hh.d22[k]) /
               (1.0 + std::abs(hh.d11[k]) + std::abs(hh.d22[k]) + std::abs(hh.d12[k]));
    });
    return r;
}

CheckResult make_check(const std::string& name, double res, double thr, bool skipped, std::string note = {}) {
    CheckResult c;
    c.name = name;
    c.residual = res;
    c.threshold = thr;
    c.skipped = skipped;
    c.pass = skipped || res <= thr;
    c.note = std::move(note);
    return c;
}

bool contains(const std::vector<CPoint>& v, const CPoint& p) {
    for (const auto& q : v)
        if (same_point(p, q, 1e-9)) return true;
    return false;
}

}  // namespace

const char* singularity_type_name(SingularityType t) {
    return t == SingularityType::Conical ? "conical" : "logarithmic";
}

nlohmann::json thresholds_to_json(const Thresholds& t) {
    return {{"pde", t.pde},         {"flat", t.flat},         {"torsion", t.torsion},
            {"trace", t.trace},     {"harmonic", t.harmonic}, {"curvature", t.curvature}};
}

Thresholds thresholds_from_json(const nlohmann::json& j, Thresholds base) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "thresholds must be an object");
    const std::pair<const char*, double*> fields[] = {{"pde", &base.pde},         {"flat", &base.flat},
                                                      {"torsion", &base.torsion}, {"trace", &base.trace},
                                                      {"harmonic", &base.harmonic}, {"curvature", &base.curvature}};
    for (auto& [k, v] : j.items()) {
        bool known = false;
        for (auto& [name, dst] : fields)
            if (k == name) {
                if (!v.is_number() || !(v.get<double>() > 0.0))
                    throw Error(ErrorCode::InvalidConfig, "threshold " + k + " must be a positive number");
                *dst = v.get<double>();
                known = true;
            }
        if (!known) throw Error(ErrorCode::InvalidConfig, "unknown threshold: " + k);
    }
    return base;
}

bool VerificationReport::pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

const CheckResult* VerificationReport::check(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

nlohmann::json VerificationReport::to_json() const {
    nlohmann::json j;
    j["pass"] = pass();
    j["nodes"] = nodes;
    j["degenerate_identity"] = degenerate_identity;
    j["residuals"] = {{"pde", residual_pde},         {"flat", residual_flat},
                      {"torsion", residual_torsion}, {"trace", residual_trace},
                      {"harmonic", residual_harmonic}, {"curvature_identity", curvature_identity}};
    j["checks"] = nlohmann::json::array();
    for (const auto& c : checks) {
        nlohmann::json e{{"name", c.name}, {"residual", c.residual}, {"threshold", c.threshold},
                         {"pass", c.pass}, {"skipped", c.skipped}};
        if (!c.note.empty()) e["note"] = c.note;
        j["checks"].push_back(e);
    }
    j["order_fits"] = nlohmann::json::array();
    for (const auto& f : order_fits)
        j["order_fits"].push_back({{"point", f.point.str()},
                                   {"type", singularity_type_name(f.type)},
                                   {"order", f.order},
                                   {"slope", f.slope},
                                   {"residual", f.residual}});
    return j;
}

VerificationReport verify(const SpecialKahlerStructure& s, const VerifyOptions& opts) {
    VerificationReport rep;
    for (const auto& cs : s.charts) {
        ChartResiduals r = check_chart(s, cs, opts);
        rep.nodes += r.nodes;
        rep.residual_pde = std::max(rep.residual_pde, r.pde);
        rep.curvature_identity = std::max(rep.curvature_identity, r.curv);
        rep.residual_flat = std::max(rep.residual_flat, r.flat);
        rep.residual_torsion = std::max(rep.residual_torsion, r.torsion);
        rep.residual_trace = std::max(rep.residual_trace, r.trace);
        rep.residual_harmonic = std::max(rep.residual_harmonic, r.harmonic);
    }
    if (rep.nodes == 0) throw Error(ErrorCode::RegionOutsideChart, "no grid node inside the verification region");
    rep.degenerate_identity = s.xi.is_rational() && s.xi.rational_part().is_zero();
    const Thresholds& t = opts.thresholds;
    const bool mo = s.metric_only;
    const std::string why = mo ? "metric-only structure" : "";
    rep.checks.push_back(make_check("pde", rep.residual_pde, t.pde, false));
    rep.checks.push_back(make_check("curvature_identity", rep.curvature_identity, t.curvature, false,
                                    rep.degenerate_identity ? "cubic form vanishes; identity reads K = 0" : ""));
    rep.checks.push_back(make_check("flat", rep.residual_flat, t.flat, mo, why));
    rep.checks.push_back(make_check("torsion", rep.residual_torsion, t.torsion, mo, why));
    rep.checks.push_back(make_check("trace", rep.residual_trace, t.trace, mo, why));
    rep.checks.push_back(make_check("harmonic", rep.residual_harmonic, t.harmonic, mo, why));

    if (opts.fit_orders) {
        std::vector<CPoint> pts;
        for (const auto& p : s.gtilde.prescriptions)
            if (!contains(pts, p.point)) pts.push_back(p.point);
        for (const auto& p : s.punctures)
            if (!contains(pts, p)) pts.push_back(p);
        for (const auto& p : pts) {
            try {
                rep.order_fits.push_back(fit_singularity_order(s, p));
            } catch (const Error&) {
            }
        }
    }
    return rep;
}

namespace {

// Relative distance of g from the best affine function of x.
double non_affinity(const std::vector<double>& x, const std::vector<double>& f, double c, double* slope_rel) {
    const size_t n = x.size();
    std::vector<double> g(n);
    double top = -kInf;
    for (size_t i = 0; i < n; ++i) top = std::max(top, f[i] - c * x[i]);
    double sx = 0, sg = 0;
    for (size_t i = 0; i < n; ++i) {
        g[i] = std::exp(f[i] - c * x[i] - top);
        sx += x[i];
        sg += g[i];
    }
    double mx = sx / n, mg = sg / n, sxx = 0, sxg = 0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxg += (x[i] - mx) * (g[i] - mg);
    }
    double b = sxg / sxx, res = 0, nrm = 0;
    for (size_t i = 0; i < n; ++i) {
        double e = g[i] - (mg + b * (x[i] - mx));
        res += e * e;
        nrm += g[i] * g[i];
    }
    if (slope_rel) *slope_rel = b * (x.back() - x.front()) / mg;
    return std::sqrt(res / nrm);
}

}  // namespace

OrderFit fit_singularity_order(const SpecialKahlerStructure& s, const CPoint& p) {
    // a patch may sit in either frame; finite points far out are resolved in w = 1/z
    auto patch_at = [&](Frame f, Complex c) -> const ChartStructure* {
        for (const auto& q : s.charts)
            if (q.chart.is_log_polar() && q.chart.frame == f && std::abs(q.chart.lp.center - c) < 1e-9) return &q;
        return nullptr;
    };
    const ChartStructure* cs = nullptr;
    if (p.is_infinity())
        cs = patch_at(Frame::W, 0.0);
    else {
        cs = patch_at(Frame::Z, p.z);
        if (!cs && std::abs(p.z) > 0.0) cs = patch_at(Frame::W, 1.0 / p.z);
    }
    if (!cs) throw Error(ErrorCode::RegionOutsideChart, "no log-polar patch centred at " + p.str());
    const LogPolarGrid& g = cs->chart.lp;
    double own = s.gtilde.charts[cs->metric_chart].own_radius;
    double hi = std::log(std::min(0.1, 0.9 * own));
    std::vector<double> x, y;
    for (int i = 0; i < g.n_rho; ++i) {
        double rho = g.rho(i);
        if (rho > hi + 1e-12) break;
        double sum = 0.0;
        bool ok = true;
        for (int j = 0; j < g.n_theta && ok; ++j) {
            size_t k = g.idx(i, j);
            ok = cs->mask[k] && std::isfinite(cs->u[k]);
            sum -= cs->u[k];
        }
        if (!ok) continue;
        x.push_back(rho);
        y.push_back(sum / g.n_theta);
    }
    if (x.size() < 8 || x.back() - x.front() < 2.0 * std::log(10.0) - 1.5 * g.h_rho())
        throw Error(ErrorCode::InsufficientRange, "need two decades of radius below 0.1 at " + p.str());

    // ordinary least-squares slope as the starting bracket centre
    double mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= x.size();
    my /= x.size();
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    double c0 = sxy / sxx;

    // The misfit is not unimodal: near a cusp with a large horoball offset L,
    // L e^{s rho} has an inflection inside the window for s ~ 2/L and looks
    // nearly affine. Scan the bracket, then refine the best cell.
    const int scan = 800;
    const double lo = c0 - 2.0, step = 4.0 / scan;
    int best = 0;
    double fbest = kInf;
    for (int i = 0; i <= scan; ++i) {
        const double fi = non_affinity(x, y, lo + i * step, nullptr);
        if (fi < fbest) {
            fbest = fi;
            best = i;
        }
    }
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo + std::max(0, best - 1) * step, b = lo + std::min(scan, best + 1) * step;
    double m1 = b - phi * (b - a), m2 = a + phi * (b - a);
    double f1 = non_affinity(x, y, m1, nullptr), f2 = non_affinity(x, y, m2, nullptr);
    for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
        if (f1 < f2) {
            b = m2;
            m2 = m1;
            f2 = f1;
            m1 = b - phi * (b - a);
            f1 = non_affinity(x, y, m1, nullptr);
        } else {
            a = m1;
            m1 = m2;
            f1 = f2;
            m2 = a + phi * (b - a);
            f2 = non_affinity(x, y, m2, nullptr);
        }
    }
    double c1 = 0.5 * (a + b);
    OrderFit out;
    out.point = p;
    out.residual = non_affinity(x, y, c1, &out.slope);
    out.order = 0.5 * c1;
    out.type = out.slope < -0.15 ? SingularityType::Logarithmic : SingularityType::Conical;
    return out;
}

}  // namespace spk
