#include "spk/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "spk/io.hpp"
#include "spk/moduli.hpp"
#include "spk/parallel.hpp"
#include "spk/pipeline.hpp"

namespace spk {

namespace {

using json = nlohmann::json;

const double kPi = std::acos(-1.0);

enum Exit { kOk = 0, kVerifyFailed = 1, kInvalid = 2, kNoConvergence = 3 };

Error bad(const std::string& msg) { return Error(ErrorCode::InvalidConfig, msg); }

// Overlays over on base. Keys missing from base are rejected; non-empty
// objects in base are merged recursively, anything else is replaced.
json overlay(const json& base, const json& over, const std::string& where) {
    if (!over.is_object()) throw bad((where.empty() ? std::string("config") : where) + " must be an object");
    json out = base;
    for (auto& [k, v] : over.items()) {
        const std::string path = where.empty() ? k : where + "." + k;
        if (!base.contains(k)) throw bad("unknown config key: " + path);
        const json& b = base[k];
        out[k] = (b.is_object() && !b.empty()) ? overlay(b, v, path) : v;
    }
    return out;
}

Complex cplx(const json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
    throw bad("complex number must be a number or [re, im]");
}

json cjson(Complex c) { return json::array({c.real(), c.imag()}); }

std::optional<AnnulusRegion> region_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    json r = overlay({{"center", {0.0, 0.0}}, {"r_min", 0.0}, {"r_max", 1.0}}, j, "region");
    AnnulusRegion a{cplx(r["center"]), r["r_min"].get<double>(), r["r_max"].get<double>()};
    if (!(a.r_min >= 0.0 && a.r_max > a.r_min)) throw bad("region needs 0 <= r_min < r_max");
    return a;
}

SingularData singular_data(const json& c) {
    json d{{"genus", c.at("genus")}, {"betas", c.at("betas")}, {"ell", c.at("ell")}};
    if (!c.at("points").is_null()) d["points"] = c["points"];
    if (!c.at("tau").is_null()) d["tau"] = c["tau"];
    return SingularData::from_json(d);
}

LiouvilleOptions solver_options(const json& c) {
    LiouvilleOptions o;
    const auto& g = c.at("grid");
    o.n_rho = g.at("nr");
    o.n_theta = g.at("ntheta");
    o.n_cart = g.at("ncart");
    o.inset = g.at("r_min");
    o.tol = c.at("tol");
    o.max_iter = c.at("max_iter");
    if (o.n_rho < 16 || o.n_theta < 16 || o.n_cart < 16) throw bad("grid sizes must be at least 16");
    if (!(o.inset > 0.0 && o.inset < 0.1)) throw bad("grid.r_min must lie in (0, 0.1)");
    if (!(o.tol > 0.0) || o.max_iter < 1) throw bad("tol must be positive and max_iter at least 1");
    return o;
}

VerifyOptions verify_options(const json& c, const Thresholds& t) {
    VerifyOptions o;
    o.thresholds = t;
    o.region = region_from(c.at("region"));
    o.fit_orders = c.at("fit_orders");
    o.zero_exclusion = c.at("zero_exclusion");
    if (!(o.zero_exclusion >= 0.0)) throw bad("zero_exclusion must be non-negative");
    return o;
}

json data_defaults() {
    return {{"genus", 0}, {"points", nullptr}, {"betas", {-1.0, -1.0, -1.0}}, {"ell", 0}, {"tau", nullptr}};
}

json solver_defaults() {
    return {{"grid", {{"nr", 512}, {"ntheta", 512}, {"ncart", 512}, {"r_min", 1e-3}}},
            {"tol", 1e-8},
            {"max_iter", 50}};
}

json check_defaults() { return {{"region", nullptr}, {"fit_orders", true}, {"zero_exclusion", 0.05}}; }

json merged(std::initializer_list<json> parts) {
    json out = json::object();
    for (const auto& p : parts) out.update(p);
    return out;
}

struct Context {
    std::optional<fs::path> out;
    // Input paths are taken relative to the output directory when one is set.
    fs::path resolve(const std::string& p) const {
        fs::path q(p);
        return (q.is_absolute() || !out) ? q : *out / q;
    }
};

struct Outcome {
    json report;
    int code = kOk;
    std::string summary;
};

std::string verdict(bool pass) { return pass ? "pass" : "FAIL"; }

// ---- models ----

json models_defaults() {
    return {{"kind", "all"},
            {"k", 1},
            {"b", {1.0, 0.0}},
            {"beta", 0.0},
            {"grid", {{"nr", 512}, {"ntheta", 512}, {"r_min", 0.05}, {"r_max", 0.9}}},
            {"region", {0.1, 0.8}},
            {"thresholds", thresholds_to_json({})}};
}

Outcome run_models(const json& c, const Context& ctx) {
    const std::string kind = c.at("kind");
    std::vector<ModelStructure> ms;
    if (kind == "log") {
        ms.push_back(log_model(c.at("k").get<int>(), cplx(c.at("b"))));
    } else if (kind == "cone") {
        ms.push_back(cone_model(c.at("beta").get<double>()));
    } else if (kind == "all") {
        for (int k = -2; k <= 3; ++k)
            for (Complex b : {Complex(1, 0), Complex(0, 1), Complex(2, 1)}) ms.push_back(log_model(k, b));
        for (double beta : {-3.0, -2.0, 0.0, 1.0, 2.0}) ms.push_back(cone_model(beta));
    } else {
        throw bad("kind must be log, cone or all");
    }
    const auto& g = c.at("grid");
    const double r0 = g.at("r_min"), r1 = g.at("r_max");
    const int nr = g.at("nr"), nt = g.at("ntheta");
    if (!(r0 > 0.0 && r1 > r0 && r1 < 1.0) || nr < 16 || nt < 16)
        throw bad("model grid needs 0 < r_min < r_max < 1 and at least 16 nodes per direction");
    const LogPolarGrid lg{{0.0, 0.0}, std::log(r0), std::log(r1), nr, nt};
    const auto& reg = c.at("region");
    if (!reg.is_array() || reg.size() != 2) throw bad("region must be [r_min, r_max]");
    VerifyOptions vo;
    vo.thresholds = thresholds_from_json(c.at("thresholds"));
    vo.region = AnnulusRegion{{0.0, 0.0}, reg[0].get<double>(), reg[1].get<double>()};
    vo.fit_orders = false;

    Outcome o;
    bool all = true;
    json entries = json::array();
    for (size_t i = 0; i < ms.size(); ++i) {
        auto rep = verify(sample_model(ms[i], lg), vo);
        all = all && rep.pass();
        json e{{"model", ms[i].describe()}, {"verification", rep.to_json()}, {"pass", rep.pass()}};
        if (ctx.out) {
            const std::string stem = "model_" + std::to_string(i);
            write_model(ms[i], lg, *ctx.out, stem);
            e["file"] = stem + ".csv";
        }
        entries.push_back(e);
        o.summary += ms[i].describe() + ": " + verdict(rep.pass()) + "\n";
    }
    o.report = {{"models", entries}, {"pass", all}};
    o.code = all ? kOk : kVerifyFailed;
    return o;
}

// ---- solve-hyperbolic ----

json solve_defaults() {
    return merged({solver_defaults(),
                   {{"chart", {{"type", "sphere"}, {"radius", 0.5}}},
                    {"prescriptions",
                     {{{"type", "cusp"}, {"point", {0.0, 0.0}}},
                      {{"type", "cusp"}, {"point", {1.0, 0.0}}},
                      {{"type", "cusp"}, {"point", "inf"}}}},
                    {"area_tol", 0.02}}});
}

Outcome run_solve(const json& c, const Context& ctx) {
    std::vector<SingularityPrescription> ps;
    if (!c.at("prescriptions").is_array()) throw bad("prescriptions must be an array");
    for (const auto& p : c["prescriptions"]) ps.push_back(prescription_from_json(p));
    const std::string type = c.at("chart").at("type");
    ChartSpec spec;
    if (type == "sphere")
        spec = SphereChart{};
    else if (type == "disc")
        spec = DiscChart{c["chart"].at("radius").get<double>()};
    else
        throw bad("chart.type must be sphere or disc");
    const double area_tol = c.at("area_tol");

    HyperbolicMetric m = solve_liouville(ps, spec, solver_options(c));
    const double A = area(m);
    Outcome o;
    json r{{"metric", m.describe()}, {"stats", stats_to_json(m.stats)}, {"area", A}};
    bool pass = true;
    if (type == "sphere") {
        double chi = -2.0;
        for (const auto& p : ps) chi += 1.0 - p.cone_alpha();
        const double gb = 2.0 * kPi * chi;
        const double rel = std::abs(A - gb) / gb;
        pass = rel <= area_tol;
        r["gauss_bonnet"] = gb;
        r["area_relative_error"] = rel;
        o.summary = "area " + fmt17(A) + " vs 2pi chi " + fmt17(gb) + ": " + verdict(pass) + "\n";
    } else {
        // the disc boundary is not geodesic, so no closed-form total
        r["gauss_bonnet"] = nullptr;
        o.summary = "area " + fmt17(A) + "\n";
    }
    r["pass"] = pass;
    if (ctx.out) {
        write_metric(m, *ctx.out, "metric");
        r["file"] = "metric.json";
    }
    o.report = r;
    o.code = pass ? kOk : kVerifyFailed;
    return o;
}

// ---- sample-xi / moduli ----

json sample_defaults() { return merged({data_defaults(), {{"count", 1}}}); }

Outcome run_sample(const json& c, const Context& ctx) {
    const SingularData d = singular_data(c);
    const int count = c.at("count");
    if (count < 1) throw bad("count must be at least 1");
    const std::uint64_t seed = c.at("seed");
    if (!existence_check(d).exists) throw Error(ErrorCode::EmptySpace, "no sections with these singularities");
    Outcome o;
    json sections = json::array();
    for (int i = 0; i < count; ++i) {
        const auto xi = sample_section(d, seed + static_cast<std::uint64_t>(i));
        json div = json::array();
        for (const auto& e : divisor_of(xi).entries) div.push_back({{"point", point_to_json(e.point)}, {"order", e.coeff}});
        sections.push_back({{"seed", seed + static_cast<std::uint64_t>(i)}, {"xi", xi.to_json()}, {"divisor", div}});
    }
    o.report = {{"data", d.to_json()}, {"sections", sections}};
    if (ctx.out) write_json(*ctx.out / "sections.json", sections);
    o.summary = std::to_string(count) + " section(s) sampled\n";
    return o;
}

Outcome run_moduli(const json& c, const Context&) {
    const SingularData d = singular_data(c);
    const ModuliReport m = existence_check(d);
    Outcome o;
    o.report = m.to_json();
    std::ostringstream s;
    s << "exists: " << (m.exists ? "yes" : "no") << " (" << m.to_json()["verdict"].get<std::string>() << ")";
    if (m.N) s << ", N = " << *m.N;
    s << ", deg L = " << m.deg_L << "\n";
    o.summary = s.str();
    return o;
}

// ---- assemble / verify / family ----

json assemble_defaults() {
    return merged({check_defaults(), {{"metric", nullptr}, {"xi", nullptr}, {"thresholds", thresholds_to_json({})}}});
}

json structure_summary(const SpecialKahlerStructure& s) {
    json p = json::array();
    for (const auto& q : s.punctures) p.push_back(point_to_json(q));
    return {{"source", s.source}, {"metric_only", s.metric_only}, {"punctures", p},
            {"a", s.a},           {"xi", s.xi.to_json()},         {"warnings", s.warnings}};
}

Outcome run_assemble(const json& c, const Context& ctx) {
    if (!c.at("metric").is_string()) throw bad("metric must name a metric sidecar");
    if (c.at("xi").is_null()) throw bad("xi is required");
    const Thresholds t = thresholds_from_json(c.at("thresholds"));
    const VerifyOptions vo = verify_options(c, t);
    const HyperbolicMetric g = read_metric(ctx.resolve(c["metric"]));
    const auto s = assemble(g, CubicDifferential::from_json(c["xi"]));
    const auto rep = verify(s, vo);
    Outcome o;
    o.report = {{"structure", structure_summary(s)}, {"verification", rep.to_json()}, {"pass", rep.pass()}};
    if (ctx.out) {
        write_structure(s, t, *ctx.out, "structure");
        o.report["file"] = "structure.json";
    }
    o.summary = "assembled " + std::string(s.metric_only ? "(metric only) " : "") + verdict(rep.pass()) + "\n";
    o.code = rep.pass() ? kOk : kVerifyFailed;
    return o;
}

json verify_defaults() { return merged({check_defaults(), {{"structure", nullptr}, {"thresholds", nullptr}}}); }

SpecialKahlerStructure load_structure(const json& c, const Context& ctx, Thresholds& t) {
    if (!c.at("structure").is_string()) throw bad("structure must name a structure sidecar");
    auto s = read_structure(ctx.resolve(c["structure"]), &t);
    if (!c.at("thresholds").is_null()) t = thresholds_from_json(c["thresholds"], t);
    return s;
}

Outcome run_verify(const json& c, const Context& ctx) {
    Thresholds t;
    const auto s = load_structure(c, ctx, t);
    const auto rep = verify(s, verify_options(c, t));
    Outcome o;
    o.report = {{"structure", structure_summary(s)}, {"verification", rep.to_json()}, {"pass", rep.pass()}};
    for (const auto& ch : rep.checks)
        o.summary += ch.name + ": " + (ch.skipped ? "skipped" : fmt17(ch.residual) + " " + verdict(ch.pass)) + "\n";
    o.code = rep.pass() ? kOk : kVerifyFailed;
    return o;
}

json family_defaults() {
    json d = verify_defaults();
    d["fit_orders"] = false;
    d["lambdas"] = {{0.0, 1.0}, {-1.0, 0.0}, {0.5, std::sqrt(3.0) / 2.0}};
    return d;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

// Largest relative deviation of the rotated cubic form from lambda * xi at the chart nodes.
double xi_scaling_error(const SpecialKahlerStructure& s, const SpecialKahlerStructure& r, Complex lambda) {
    double worst = 0.0;
    for (size_t c = 0; c < s.charts.size(); ++c) {
        const auto& chart = s.charts[c].chart;
        const size_t n = chart.size();
        for (size_t k = 0; k < n; k += std::max<size_t>(1, n / 97)) {
            const Complex z = chart.point(k);
            const Complex want = lambda * s.charts[c].xi.eval(z);
            if (!std::isfinite(std::abs(want))) continue;
            worst = std::max(worst, std::abs(r.charts[c].xi.eval(z) - want) / (1e-300 + std::abs(want)));
        }
    }
    return worst;
}

Outcome run_family(const json& c, const Context& ctx) {
    Thresholds t;
    const auto s = load_structure(c, ctx, t);
    const VerifyOptions vo = verify_options(c, t);
    if (!c.at("lambdas").is_array() || c["lambdas"].empty()) throw bad("lambdas must be a non-empty array");
    Outcome o;
    bool all = true;
    json members = json::array();
    for (size_t i = 0; i < c["lambdas"].size(); ++i) {
        const Complex lambda = cplx(c["lambdas"][i]);
        const auto r = rotate_family(s, lambda);
        bool metric_same = true;
        for (size_t k = 0; k < s.charts.size(); ++k) metric_same = metric_same && same_bits(s.charts[k].u, r.charts[k].u);
        const double xi_err = xi_scaling_error(s, r, lambda);
        const auto rep = verify(r, vo);
        const bool pass = metric_same && xi_err <= 1e-12 && rep.pass();
        all = all && pass;
        json e{{"lambda", cjson(lambda)},         {"metric_identical", metric_same}, {"xi_scaling_error", xi_err},
               {"verification", rep.to_json()}, {"pass", pass}};
        if (ctx.out) {
            const std::string stem = "family_" + std::to_string(i);
            write_structure(r, t, *ctx.out, stem);
            e["file"] = stem + ".json";
        }
        members.push_back(e);
        o.summary += "lambda " + fmt17(lambda.real()) + " + " + fmt17(lambda.imag()) + "i: " + verdict(pass) + "\n";
    }
    o.report = {{"members", members}, {"pass", all}};
    o.code = all ? kOk : kVerifyFailed;
    return o;
}

// ---- pipeline ----

json pipeline_defaults() {
    return merged({data_defaults(), solver_defaults(),
                   {{"thresholds", thresholds_to_json({})},
                    {"separation", 0.35},
                    {"max_resample", 200},
                    {"order_tol", 0.05}}});
}

Outcome run_pipeline_cmd(const json& c, const Context& ctx) {
    const SingularData d = singular_data(c);
    PipelineOptions po;
    po.seed = c.at("seed");
    po.solver = solver_options(c);
    po.thresholds = thresholds_from_json(c.at("thresholds"));
    po.separation = c.at("separation");
    po.max_resample = c.at("max_resample");
    po.order_tol = c.at("order_tol");
    const auto r = run_pipeline(d, po);
    Outcome o;
    o.report = r.to_json();
    if (ctx.out) {
        write_structure(r.structure, po.thresholds, *ctx.out, "structure");
        o.report["file"] = "structure.json";
    }
    std::ostringstream s;
    s << "seed " << r.seed_used << ", " << r.prescriptions.size() << " singular points, area " << fmt17(r.area)
      << " (expected " << fmt17(r.area_expected) << "): " << verdict(r.pass()) << "\n";
    o.summary = s.str();
    o.code = r.pass() ? kOk : kVerifyFailed;
    return o;
}

struct Command {
    const char* name;
    const char* help;
    std::function<json()> defaults;
    std::function<Outcome(const json&, const Context&)> run;
};

const std::vector<Command>& commands() {
    static const std::vector<Command> cs{
        {"models", "emit and verify the local model structures", models_defaults, run_models},
        {"solve-hyperbolic", "solve for a hyperbolic metric and report Gauss-Bonnet", solve_defaults, run_solve},
        {"sample-xi", "sample cubic differentials with prescribed singularities", sample_defaults, run_sample},
        {"moduli", "existence, dimension and strata of the moduli space", data_defaults, run_moduli},
        {"assemble", "fuse a metric dump with a cubic differential", assemble_defaults, run_assemble},
        {"verify", "re-check a dumped structure", verify_defaults, run_verify},
        {"family", "rotate a dumped structure through unit scalars", family_defaults, run_family},
        {"pipeline", "moduli, sample, solve, assemble and verify in one run", pipeline_defaults, run_pipeline_cmd},
    };
    return cs;
}

int exit_code_for(const Error& e) { return e.code() == ErrorCode::NoConvergence ? kNoConvergence : kInvalid; }

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Special Kahler structures with isolated singularities"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, output_dir;
    bool as_json = false;
    std::optional<std::int64_t> seed;
    std::optional<int> threads;
    app.add_option("--config", config_path, "JSON config file");
    app.add_flag("--json", as_json, "print the report as JSON on standard output");
    app.add_option("--output-dir", output_dir, "directory for dumps and report.json");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--threads", threads, "worker threads (0 = all cores; default SPK_THREADS or 1)");

    std::optional<std::string> kind, b;
    std::optional<int> k;
    std::optional<double> beta;
    for (const auto& c : commands()) {
        auto* sc = app.add_subcommand(c.name, c.help);
        if (std::string(c.name) == "models") {
            sc->add_option("--kind", kind, "log, cone or all");
            sc->add_option("--k", k, "log model exponent");
            sc->add_option("--b", b, "log model coefficient, re or re,im");
            sc->add_option("--beta", beta, "cone exponent");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kInvalid;
    }

    const Command* cmd = nullptr;
    for (const auto& c : commands())
        if (app.got_subcommand(c.name)) cmd = &c;

    json cfg;
    auto fail = [&](int code, const std::string& kind_name, const std::string& msg) {
        std::cerr << "spk " << cmd->name << ": " << msg << "\n";
        if (as_json) {
            json r{{"command", cmd->name}, {"error", {{"code", kind_name}, {"message", msg}}}, {"exit_code", code}};
            if (!cfg.is_null()) r["config"] = cfg;
            std::cout << r.dump() << "\n";
        }
        return code;
    };

    try {
        if (threads) set_num_threads(*threads);
        json base = cmd->defaults();
        base["seed"] = 1;
        base["output_dir"] = nullptr;
        cfg = base;
        if (!config_path.empty()) cfg = overlay(base, read_json(config_path), "");
        if (seed) {
            if (*seed < 0) throw bad("seed must be non-negative");
            cfg["seed"] = *seed;
        }
        if (!output_dir.empty()) cfg["output_dir"] = output_dir;
        if (kind) cfg["kind"] = *kind;
        if (k) cfg["k"] = *k;
        if (beta) cfg["beta"] = *beta;
        if (b) {
            const auto comma = b->find(',');
            cfg["b"] = comma == std::string::npos
                           ? json::array({std::stod(*b), 0.0})
                           : json::array({std::stod(b->substr(0, comma)), std::stod(b->substr(comma + 1))});
        }
        if (!cfg["seed"].is_number_unsigned() && !(cfg["seed"].is_number_integer() && cfg["seed"].get<std::int64_t>() >= 0))
            throw bad("seed must be a non-negative integer");

        Context ctx;
        if (!cfg["output_dir"].is_null()) {
            ctx.out = fs::path(cfg["output_dir"].get<std::string>());
            fs::create_directories(*ctx.out);
        }
        Outcome o = cmd->run(cfg, ctx);
        json report = o.report;
        report["command"] = cmd->name;
        report["config"] = cfg;
        report["exit_code"] = o.code;
        if (ctx.out) write_json(*ctx.out / "report.json", report);
        if (as_json)
            std::cout << report.dump() << "\n";
        else
            std::cout << o.summary;
        return o.code;
    } catch (const Error& e) {
        return fail(exit_code_for(e), error_name(e.code()), e.what());
    } catch (const json::exception& e) {
        return fail(kInvalid, "InvalidConfig", e.what());
    } catch (const std::invalid_argument& e) {
        return fail(kInvalid, "InvalidConfig", std::string("bad number: ") + e.what());
    } catch (const fs::filesystem_error& e) {
        return fail(kInvalid, "IoError", e.what());
    }
}

}  // namespace spk
