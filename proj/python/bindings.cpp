#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "spk/cli.hpp"
#include "spk/io.hpp"
#include "spk/moduli.hpp"
#include "spk/pipeline.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

// Values cross the boundary as JSON text; the Python side decodes them.
std::string dump(const json& j) { return j.dump(); }

py::array_t<double> grid_array(const spk::Chart& c, const std::vector<double>& v) {
    py::array_t<double> a({c.n1(), c.n2()});
    auto m = a.mutable_unchecked<2>();
    for (int i = 0; i < c.n1(); ++i)
        for (int j = 0; j < c.n2(); ++j) m(i, j) = v[c.idx(i, j)];
    return a;
}

py::list metric_grids(const spk::HyperbolicMetric& m) {
    py::list out;
    for (const auto& g : m.charts) {
        py::dict d;
        d["chart"] = dump(spk::chart_to_json(g.chart));
        d["v"] = grid_array(g.chart, g.v);
        out.append(d);
    }
    return out;
}

spk::Thresholds thresholds(const std::string& t) {
    return t.empty() ? spk::Thresholds{} : spk::thresholds_from_json(json::parse(t));
}

}  // namespace

PYBIND11_MODULE(_spk, m) {
    m.doc() = "special Kahler structures with isolated singularities";

    py::register_exception<spk::Error>(m, "SpkError");

    m.def("run_cli", [](std::vector<std::string> args) {
        args.insert(args.begin(), "spk");
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        py::gil_scoped_release release;
        return spk::run_cli(static_cast<int>(argv.size()), argv.data());
    });

    m.def("existence_check", [](const std::string& data) {
        return dump(spk::existence_check(spk::SingularData::from_json(json::parse(data))).to_json());
    });
    m.def("h_space_dim",
          [](const std::string& data) { return spk::h_space_dim(spk::SingularData::from_json(json::parse(data))); });
    m.def("sample_section", [](const std::string& data, std::uint64_t seed) {
        return dump(spk::sample_section(spk::SingularData::from_json(json::parse(data)), seed).to_json());
    });

    m.def(
        "verify_model",
        [](const std::string& kind, int k, std::complex<double> b, double beta, int n, double r0, double r1) {
            auto model = kind == "log" ? spk::log_model(k, b) : spk::cone_model(beta);
            spk::LogPolarGrid g{{0.0, 0.0}, std::log(0.05), std::log(0.9), n, n};
            spk::VerifyOptions o;
            o.region = spk::AnnulusRegion{{0.0, 0.0}, r0, r1};
            o.fit_orders = false;
            return dump(spk::verify(spk::sample_model(model, g), o).to_json());
        },
        py::arg("kind"), py::arg("k") = 1, py::arg("b") = std::complex<double>(1.0, 0.0), py::arg("beta") = 0.0,
        py::arg("n") = 256, py::arg("r_min") = 0.1, py::arg("r_max") = 0.8);

    m.def(
        "solve_hyperbolic",
        [](const std::string& prescriptions, double disc_radius, int n, double tol) {
            std::vector<spk::SingularityPrescription> ps;
            for (const auto& p : json::parse(prescriptions)) ps.push_back(spk::prescription_from_json(p));
            spk::ChartSpec spec = spk::SphereChart{};
            if (disc_radius > 0.0) spec = spk::DiscChart{disc_radius};
            spk::LiouvilleOptions o;
            o.n_rho = o.n_theta = o.n_cart = n;
            o.tol = tol;
            spk::HyperbolicMetric metric;
            {
                py::gil_scoped_release release;
                metric = spk::solve_liouville(ps, spec, o);
            }
            py::dict d;
            d["area"] = spk::area(metric);
            d["stats"] = dump(spk::stats_to_json(metric.stats));
            d["grids"] = metric_grids(metric);
            return d;
        },
        py::arg("prescriptions"), py::arg("disc_radius") = 0.0, py::arg("n") = 128, py::arg("tol") = 1e-8);

    m.def(
        "verify_structure",
        [](const std::string& sidecar, const std::string& thr) {
            spk::Thresholds t;
            auto s = spk::read_structure(sidecar, &t);
            if (!thr.empty()) t = spk::thresholds_from_json(json::parse(thr), t);
            spk::VerifyOptions o;
            o.thresholds = t;
            return dump(spk::verify(s, o).to_json());
        },
        py::arg("sidecar"), py::arg("thresholds") = "");

    m.def(
        "load_structure",
        [](const std::string& sidecar) {
            auto s = spk::read_structure(sidecar);
            py::list charts;
            for (const auto& c : s.charts) {
                py::dict d;
                d["chart"] = dump(spk::chart_to_json(c.chart));
                d["u"] = grid_array(c.chart, c.u);
                if (!c.h.empty()) d["h"] = grid_array(c.chart, c.h);
                charts.append(d);
            }
            py::dict out;
            out["xi"] = dump(s.xi.to_json());
            out["metric_only"] = s.metric_only;
            out["charts"] = charts;
            return out;
        },
        py::arg("sidecar"));

    m.def(
        "pipeline",
        [](const std::string& data, std::uint64_t seed, int n, const std::string& thr) {
            spk::PipelineOptions o;
            o.seed = seed;
            o.solver.n_rho = o.solver.n_theta = o.solver.n_cart = n;
            o.thresholds = thresholds(thr);
            auto d = spk::SingularData::from_json(json::parse(data));
            py::gil_scoped_release release;
            return dump(spk::run_pipeline(d, o).to_json());
        },
        py::arg("data"), py::arg("seed") = 1, py::arg("n") = 256, py::arg("thresholds") = "");
}
