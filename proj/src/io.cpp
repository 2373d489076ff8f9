#include "spk/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "structure_internal.hpp"

namespace spk {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

nlohmann::json cjson(Complex c) { return {c.real(), c.imag()}; }

Complex cfrom(const nlohmann::json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::InvalidConfig, "complex number must be [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

// Run-length encoding of a 0/1 mask: [[value, count], ...].
nlohmann::json rle(const std::vector<uint8_t>& m) {
    nlohmann::json out = nlohmann::json::array();
    size_t i = 0;
    while (i < m.size()) {
        size_t j = i;
        while (j < m.size() && m[j] == m[i]) ++j;
        out.push_back({static_cast<int>(m[i]), j - i});
        i = j;
    }
    return out;
}

std::vector<uint8_t> unrle(const nlohmann::json& j, size_t n) {
    std::vector<uint8_t> m;
    for (const auto& e : j) m.insert(m.end(), e.at(1).get<size_t>(), static_cast<uint8_t>(e.at(0).get<int>()));
    if (m.size() != n) throw Error(ErrorCode::IoError, "mask length does not match the grid");
    return m;
}

std::string coord_names(const Chart& c) { return c.is_log_polar() ? "rho,theta" : "x,y"; }

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p);
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + p.string());
    return f;
}

void write_header(std::ostream& f, const Chart& c) {
    f << "# chart=" << c.describe() << " nr=" << c.n1() << " ntheta=" << c.n2() << "\n";
}

// Columns of a CSV dump, header line included in `names`.
std::vector<std::vector<double>> read_csv(const fs::path& p, size_t ncols, size_t nrows) {
    std::ifstream f(p);
    if (!f) throw Error(ErrorCode::IoError, "cannot read " + p.string());
    std::vector<std::vector<double>> cols(ncols);
    for (auto& c : cols) c.reserve(nrows);
    std::string line;
    bool header = false;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            header = true;
            continue;
        }
        const char* s = line.c_str();
        for (size_t c = 0; c < ncols; ++c) {
            char* end = nullptr;
            double v = std::strtod(s, &end);
            if (end == s) throw Error(ErrorCode::IoError, "malformed row in " + p.string());
            cols[c].push_back(v);
            s = end;
            if (*s == ',') ++s;
        }
    }
    for (auto& c : cols)
        if (c.size() != nrows) throw Error(ErrorCode::IoError, "row count mismatch in " + p.string());
    return cols;
}

}  // namespace

std::string fmt17(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream f(p);
    if (!f) throw Error(ErrorCode::IoError, "cannot read " + p.string());
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::InvalidConfig, p.string() + ": " + e.what());
    }
}

void write_json(const fs::path& p, const nlohmann::json& j) {
    auto f = open_out(p);
    f << j.dump(2) << "\n";
}

nlohmann::json point_to_json(const CPoint& p) {
    if (p.is_infinity()) return "inf";
    return cjson(p.z);
}

CPoint point_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return CPoint::infinity();
        throw Error(ErrorCode::InvalidConfig, "point must be [re, im] or \"inf\"");
    }
    return CPoint::finite(cfrom(j));
}

nlohmann::json chart_to_json(const Chart& c) {
    nlohmann::json j;
    j["frame"] = frame_name(c.frame);
    if (c.is_log_polar()) {
        j["kind"] = "log_polar";
        j["center"] = cjson(c.lp.center);
        j["rho_min"] = c.lp.rho_min;
        j["rho_max"] = c.lp.rho_max;
        j["n_rho"] = c.lp.n_rho;
        j["n_theta"] = c.lp.n_theta;
    } else {
        j["kind"] = "cartesian";
        j["x0"] = c.cart.x0;
        j["y0"] = c.cart.y0;
        j["h"] = c.cart.h;
        j["n"] = c.cart.n;
    }
    j["active"] = rle(c.active);
    return j;
}

Chart chart_from_json(const nlohmann::json& j) {
    Frame f = j.at("frame").get<std::string>() == frame_name(Frame::W) ? Frame::W : Frame::Z;
    Chart c;
    if (j.at("kind") == "log_polar") {
        LogPolarGrid g;
        g.center = cfrom(j.at("center"));
        g.rho_min = j.at("rho_min");
        g.rho_max = j.at("rho_max");
        g.n_rho = j.at("n_rho");
        g.n_theta = j.at("n_theta");
        c = Chart::log_polar(g, f);
    } else {
        CartesianGrid g;
        g.x0 = j.at("x0");
        g.y0 = j.at("y0");
        g.h = j.at("h");
        g.n = j.at("n");
        c = Chart::cartesian(g, f);
    }
    if (j.contains("active")) c.active = unrle(j["active"], c.size());
    return c;
}

nlohmann::json prescription_to_json(const SingularityPrescription& p) {
    nlohmann::json j{{"point", point_to_json(p.point)}};
    if (p.type == SingularityPrescription::Type::Cusp) {
        j["type"] = "cusp";
    } else {
        j["type"] = "cone";
        j["alpha"] = p.alpha;
    }
    return j;
}

SingularityPrescription prescription_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "prescription must be an object");
    for (auto& [k, v] : j.items()) {
        (void)v;
        if (k != "point" && k != "type" && k != "alpha")
            throw Error(ErrorCode::InvalidConfig, "unknown key in prescription: " + k);
    }
    CPoint p = point_from_json(j.at("point"));
    std::string t = j.value("type", std::string("cusp"));
    if (t == "cusp") return SingularityPrescription::cusp(p);
    if (t == "cone") return SingularityPrescription::conical(p, j.at("alpha").get<double>());
    throw Error(ErrorCode::InvalidConfig, "prescription type must be cusp or cone");
}

nlohmann::json stats_to_json(const SolverStats& s) {
    return {{"newton_iterations", s.newton_iterations},
            {"linear_iterations", s.linear_iterations},
            {"sweeps", s.sweeps},
            {"final_residual", s.final_residual},
            {"mismatch", s.mismatch},
            {"monotone", s.monotone},
            {"residual_history", s.residual_history}};
}

void write_metric(const HyperbolicMetric& m, const fs::path& dir, const std::string& stem) {
    nlohmann::json side;
    side["sphere"] = m.sphere;
    side["chart_radius"] = m.chart_radius;
    if (m.closed_form) side["closed_form"] = *m.closed_form;
    side["prescriptions"] = nlohmann::json::array();
    for (const auto& p : m.prescriptions) side["prescriptions"].push_back(prescription_to_json(p));
    side["stats"] = stats_to_json(m.stats);
    side["grids"] = nlohmann::json::array();
    for (size_t i = 0; i < m.charts.size(); ++i) {
        const auto& cf = m.charts[i];
        std::string file = stem + "_g" + std::to_string(i) + ".csv";
        side["grids"].push_back({{"file", file},
                                 {"chart", chart_to_json(cf.chart)},
                                 {"usable", rle(cf.usable)},
                                 {"singular_index", cf.singular_index},
                                 {"own_radius", cf.own_radius},
                                 {"inset_alpha", cf.inset_alpha},
                                 {"has_inset", cf.has_inset}});
        auto f = open_out(dir / file);
        write_header(f, cf.chart);
        f << coord_names(cf.chart) << ",v\n";
        for (size_t k = 0; k < cf.v.size(); ++k) {
            auto [a, b] = cf.chart.coords(k);
            f << fmt17(a) << ',' << fmt17(b) << ',' << fmt17(cf.v[k]) << '\n';
        }
    }
    write_json(dir / (stem + ".json"), side);
}

HyperbolicMetric read_metric(const fs::path& sidecar) {
    auto side = read_json(sidecar);
    const fs::path dir = sidecar.parent_path();
    HyperbolicMetric m;
    try {
        m.sphere = side.at("sphere");
        m.chart_radius = side.value("chart_radius", 1.25);
        if (side.contains("closed_form")) m.closed_form = side["closed_form"].get<std::string>();
        for (const auto& p : side.at("prescriptions")) m.prescriptions.push_back(prescription_from_json(p));
        if (side.contains("stats")) {
            const auto& s = side["stats"];
            m.stats.newton_iterations = s.value("newton_iterations", 0);
            m.stats.linear_iterations = s.value("linear_iterations", 0);
            m.stats.sweeps = s.value("sweeps", 0);
            m.stats.final_residual = s.value("final_residual", 0.0);
        }
        for (const auto& g : side.at("grids")) {
            ChartField cf;
            cf.chart = chart_from_json(g.at("chart"));
            const size_t n = cf.chart.size();
            cf.usable = unrle(g.at("usable"), n);
            cf.singular_index = g.value("singular_index", -1);
            cf.own_radius = g.value("own_radius", 0.0);
            cf.inset_alpha = g.value("inset_alpha", 0.0);
            cf.has_inset = g.value("has_inset", false);
            auto cols = read_csv(dir / g.at("file").get<std::string>(), 3, n);
            cf.v = std::move(cols[2]);
            m.charts.push_back(std::move(cf));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::IoError, sidecar.string() + ": " + e.what());
    }
    return m;
}

void write_model(const ModelStructure& m, const LogPolarGrid& g, const fs::path& dir, const std::string& stem) {
    Chart c = Chart::log_polar(g);
    auto f = open_out(dir / (stem + ".csv"));
    write_header(f, c);
    f << "rho,theta,v,u,w11_rho,w11_theta,w12_rho,w12_theta,w21_rho,w21_theta,w22_rho,w22_theta\n";
    for (int i = 0; i < g.n_rho; ++i)
        for (int j = 0; j < g.n_theta; ++j) {
            double rho = g.rho(i), th = g.theta(j);
            double u = m.u(rho, th);
            MatrixForm w = m.omega(rho, th);
            f << fmt17(rho) << ',' << fmt17(th) << ',' << fmt17(-0.5 * u) << ',' << fmt17(u);
            for (int p = 0; p < 2; ++p)
                for (int q = 0; q < 2; ++q) f << ',' << fmt17(w.first(p, q)) << ',' << fmt17(w.second(p, q));
            f << '\n';
        }
    write_json(dir / (stem + ".json"),
               {{"model", m.describe()}, {"chart", chart_to_json(c)}, {"file", stem + ".csv"}});
}

void write_structure(const SpecialKahlerStructure& s, const Thresholds& t, const fs::path& dir,
                     const std::string& stem) {
    write_metric(s.gtilde, dir, stem + "_metric");
    nlohmann::json side;
    side["source"] = s.source;
    side["metric"] = stem + "_metric.json";
    side["xi"] = s.xi.to_json();
    side["star"] = orientation_name(s.star);
    side["metric_only"] = s.metric_only;
    side["warnings"] = s.warnings;
    side["thresholds"] = thresholds_to_json(t);
    side["punctures"] = nlohmann::json::array();
    for (const auto& p : s.punctures) side["punctures"].push_back(point_to_json(p));
    side["a"] = s.a;
    side["charts"] = nlohmann::json::array();
    for (size_t i = 0; i < s.charts.size(); ++i) {
        const auto& cs = s.charts[i];
        std::string file = stem + "_c" + std::to_string(i) + ".csv";
        nlohmann::json pj = nlohmann::json::array();
        for (Complex p : cs.punctures) pj.push_back(cjson(p));
        side["charts"].push_back({{"file", file},
                                  {"metric_chart", cs.metric_chart},
                                  {"chart", chart_to_json(cs.chart)},
                                  {"punctures", pj},
                                  {"a", cs.a},
                                  {"base_point", cjson(cs.base_point)}});
        auto f = open_out(dir / file);
        write_header(f, cs.chart);
        const bool lp = cs.chart.is_log_polar();
        const std::string c1 = lp ? "rho" : "x", c2 = lp ? "theta" : "y";
        f << c1 << ',' << c2 << ",u,h,xi_re,xi_im,w11_" << c1 << ",w11_" << c2 << ",w22_" << c1 << ",w22_" << c2
          << "\n";
        const bool conn = !cs.omega.ok.empty();
        for (size_t k = 0; k < cs.chart.size(); ++k) {
            auto [a, b] = cs.chart.coords(k);
            Complex X(kNaN, kNaN);
            if (cs.mask[k]) X = cs.xi.eval(cs.chart.point(k));
            double h = cs.h.empty() ? kNaN : cs.h[k];
            f << fmt17(a) << ',' << fmt17(b) << ',' << fmt17(cs.mask[k] ? cs.u[k] : kNaN) << ',' << fmt17(h) << ','
              << fmt17(X.real()) << ',' << fmt17(X.imag());
            for (int d : {0, 1})
                for (int q : {0, 1}) f << ',' << fmt17(conn && cs.omega.ok[k] ? cs.omega.w[d][d][q][k] : kNaN);
            f << '\n';
        }
    }
    write_json(dir / (stem + ".json"), side);
}

SpecialKahlerStructure read_structure(const fs::path& sidecar, Thresholds* t) {
    auto side = read_json(sidecar);
    const fs::path dir = sidecar.parent_path();
    SpecialKahlerStructure s;
    try {
        s.gtilde = read_metric(dir / side.at("metric").get<std::string>());
        s.xi = CubicDifferential::from_json(side.at("xi"));
        s.star = side.value("star", std::string("+")) == "+" ? StarOrientation::Plus : StarOrientation::Minus;
        s.metric_only = side.value("metric_only", false);
        s.source = side.value("source", std::string());
        if (side.contains("warnings")) s.warnings = side["warnings"].get<std::vector<std::string>>();
        for (const auto& p : side.at("punctures")) s.punctures.push_back(point_from_json(p));
        s.a = side.at("a").get<std::vector<double>>();
        if (t && side.contains("thresholds")) *t = thresholds_from_json(side["thresholds"], *t);
        for (const auto& cj : side.at("charts")) {
            ChartStructure cs;
            cs.chart = chart_from_json(cj.at("chart"));
            cs.metric_chart = cj.at("metric_chart");
            cs.xi = detail::in_frame(s.xi, cs.chart.frame);
            for (const auto& p : cj.at("punctures")) cs.punctures.push_back(cfrom(p));
            cs.a = cj.at("a").get<std::vector<double>>();
            cs.base_point = cfrom(cj.at("base_point"));
            const size_t n = cs.chart.size();
            auto cols = read_csv(dir / cj.at("file").get<std::string>(), 10, n);
            cs.u = std::move(cols[2]);
            cs.mask.assign(n, 0);
            for (size_t k = 0; k < n; ++k) cs.mask[k] = std::isfinite(cs.u[k]);
            // du from the smooth part w = u + log|Xi_0|
            const bool zero = !cs.xi.is_rational() || cs.xi.rational_part().is_zero();
            std::vector<double> w(n, kNaN);
            for (size_t k = 0; k < n; ++k)
                if (cs.mask[k]) w[k] = zero ? cs.u[k] : cs.u[k] + std::log(std::abs(cs.xi.eval(cs.chart.point(k))));
            Gradient gw = gradient(cs.chart, w);
            cs.du.assign(n, {kNaN, kNaN});
            for (size_t k = 0; k < n; ++k) {
                if (!cs.mask[k] || !gw.ok[k]) continue;
                std::array<double, 2> dl{0.0, 0.0};
                if (!zero) dl = detail::re_dz(cs.chart, cs.chart.point(k), cs.xi.log_derivative(cs.chart.point(k)));
                cs.du[k] = {gw.d1[k] - dl[0], gw.d2[k] - dl[1]};
            }
            if (!s.metric_only) {
                cs.h = std::move(cols[3]);
                for (auto& row : cs.omega.w)
                    for (auto& e : row)
                        for (auto& f : e) f.assign(n, kNaN);
                cs.omega.ok.assign(n, 0);
                for (size_t k = 0; k < n; ++k) {
                    std::array<double, 2> w11{cols[6][k], cols[7][k]}, w22{cols[8][k], cols[9][k]};
                    if (!std::isfinite(w11[0] + w11[1] + w22[0] + w22[1])) continue;
                    auto s11 = hodge_star(w11, s.star), s22 = hodge_star(w22, s.star);
                    for (int q = 0; q < 2; ++q) {
                        cs.omega.w[0][0][q][k] = w11[q];
                        cs.omega.w[0][1][q][k] = -s11[q];
                        cs.omega.w[1][0][q][k] = s22[q];
                        cs.omega.w[1][1][q][k] = w22[q];
                    }
                    cs.omega.ok[k] = 1;
                }
            }
            s.charts.push_back(std::move(cs));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::IoError, sidecar.string() + ": " + e.what());
    }
    return s;
}

}  // namespace spk
