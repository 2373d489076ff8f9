#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>

#include "spk/hyperbolic.hpp"
#include "spk/localmodels.hpp"
#include "spk/structure.hpp"

namespace spk {

namespace fs = std::filesystem;

// Shortest-free fixed format used by every CSV: 17 significant digits.
std::string fmt17(double x);

nlohmann::json read_json(const fs::path& p);
// Pretty-printed with a trailing newline; creates parent directories.
void write_json(const fs::path& p, const nlohmann::json& j);

nlohmann::json chart_to_json(const Chart& c);
Chart chart_from_json(const nlohmann::json& j);
nlohmann::json prescription_to_json(const SingularityPrescription& p);
SingularityPrescription prescription_from_json(const nlohmann::json& j);
nlohmann::json point_to_json(const CPoint& p);
CPoint point_from_json(const nlohmann::json& j);
// Solver statistics without wall-clock time, so reports stay reproducible.
nlohmann::json stats_to_json(const SolverStats& s);

// <stem>.json sidecar plus <stem>_g<i>.csv per grid with columns rho,theta,v (or x,y,v).
void write_metric(const HyperbolicMetric& m, const fs::path& dir, const std::string& stem);
HyperbolicMetric read_metric(const fs::path& sidecar);

// Model samples: rho,theta,v,u and the eight omega coefficients.
void write_model(const ModelStructure& m, const LogPolarGrid& g, const fs::path& dir, const std::string& stem);

// <stem>.json sidecar, <stem>_c<i>.csv per chart with columns
// rho,theta,u,h,xi_re,xi_im,w11_rho,w11_theta,w22_rho,w22_theta, and the
// source metric as <stem>_metric.
void write_structure(const SpecialKahlerStructure& s, const Thresholds& t, const fs::path& dir,
                     const std::string& stem);
// Rebuilds omega_12 and omega_21 from the stored diagonal entries and the star.
SpecialKahlerStructure read_structure(const fs::path& sidecar, Thresholds* t = nullptr);

}  // namespace spk
