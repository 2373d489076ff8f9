#pragma once

#include <array>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "spk/differentials.hpp"
#include "spk/hyperbolic.hpp"
#include "spk/localmodels.hpp"

namespace spk {

// Connection matrix fields on one chart: w[i][j][c] is the coefficient of the
// c-th natural coordinate differential (drho/dtheta or dx/dy) in omega_ij.
struct ConnectionFields {
    std::array<std::array<std::array<std::vector<double>, 2>, 2>, 2> w;
    std::vector<uint8_t> ok;
};

struct ChartStructure {
    Chart chart;
    int metric_chart = -1;  // grid index in the source metric
    CubicDifferential xi;   // the cubic form in this chart's frame
    std::vector<double> u;
    std::vector<std::array<double, 2>> du;  // natural components
    std::vector<double> h;                  // empty when metric-only
    std::vector<double> a;                  // per puncture of this chart
    std::vector<Complex> punctures;         // frame coordinates
    Complex base_point{0.0, 0.0};
    ConnectionFields omega;  // empty when metric-only
    std::vector<uint8_t> mask;
};

class SpecialKahlerStructure {
public:
    HyperbolicMetric gtilde;  // the metric it was assembled from
    CubicDifferential xi;     // in the z chart
    std::vector<CPoint> punctures;
    std::vector<double> a;  // per puncture, z chart (a at infinity taken from the w chart)
    std::vector<ChartStructure> charts;
    StarOrientation star = StarOrientation::Plus;
    bool metric_only = false;
    std::string source;  // model name, "assemble", ...
    std::vector<std::string> warnings;

    bool complete() const { return !metric_only; }
    // u at a frame coordinate, interpolated on the owning grid; NaN if not covered.
    double u_at(Frame f, Complex c) const;
};

SpecialKahlerStructure assemble(const HyperbolicMetric& gtilde, const CubicDifferential& xi);

// Connection fields built from a metric potential u, a harmonic h and weights
// a_j; u and h are differentiated numerically. Throws NotCalibrated when no star orientation is supplied.
ConnectionFields connection_form(const Chart& chart, const std::vector<double>& u, const std::vector<double>& h,
                                 const std::vector<double>& a, const std::vector<Complex>& punctures,
                                 std::optional<StarOrientation> star);

// Literal samples of a model structure on a log-polar grid centred at 0.
SpecialKahlerStructure sample_model(const ModelStructure& m, const LogPolarGrid& g);

struct Thresholds {
    double pde = 1e-4;
    double flat = 1e-4;
    double torsion = 1e-4;
    double trace = 1e-4;
    double harmonic = 1e-4;
    double curvature = 1e-3;
};
nlohmann::json thresholds_to_json(const Thresholds& t);
// Overlays the keys present in j on base; unknown keys throw InvalidConfig.
Thresholds thresholds_from_json(const nlohmann::json& j, Thresholds base = {});

struct VerifyOptions {
    Thresholds thresholds;
    // Only nodes with r_min < |z - center| < r_max (z-chart distance) are checked when set.
    std::optional<AnnulusRegion> region;
    bool fit_orders = true;
    // Nodes closer than this (frame distance) to a zero of Xi off the grid centre are skipped.
    double zero_exclusion = 0.05;
};

struct CheckResult {
    std::string name;
    double residual = 0.0;
    double threshold = 0.0;
    bool pass = true;
    bool skipped = false;
    std::string note;
};

enum class SingularityType { Conical, Logarithmic };
const char* singularity_type_name(SingularityType t);

struct OrderFit {
    CPoint point;
    SingularityType type = SingularityType::Conical;
    double order = 0.0;
    double slope = 0.0;     // of exp(f - 2 order rho) against rho, per unit mean
    double residual = 0.0;  // relative misfit of the affine model
};

struct VerificationReport {
    double residual_pde = 0.0;
    double residual_flat = 0.0;
    double residual_torsion = 0.0;
    double residual_trace = 0.0;
    double residual_harmonic = 0.0;
    double curvature_identity = 0.0;
    std::vector<CheckResult> checks;
    std::vector<OrderFit> order_fits;
    bool degenerate_identity = false;  // Xi == 0: the curvature identity reads 0 = 0
    long nodes = 0;

    bool pass() const;
    const CheckResult* check(const std::string& name) const;
    nlohmann::json to_json() const;
};

VerificationReport verify(const SpecialKahlerStructure& s, const VerifyOptions& opts = {});

HyperbolicMetric associated_hyperbolic(const SpecialKahlerStructure& s);

struct ExtractResult {
    CubicDifferential xi;
    double fit_residual = 0.0;
    int samples = 0;
};
ExtractResult extract_cubic_fit(const SpecialKahlerStructure& s);
CubicDifferential extract_cubic(const SpecialKahlerStructure& s);

// Shift-invariant fit of the log density on a log-polar patch centred at p.
OrderFit fit_singularity_order(const SpecialKahlerStructure& s, const CPoint& p);

SpecialKahlerStructure rotate_family(const SpecialKahlerStructure& s, Complex lambda);

}  // namespace spk
