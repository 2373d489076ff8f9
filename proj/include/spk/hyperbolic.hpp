#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "spk/grid.hpp"
#include "spk/types.hpp"

namespace spk {

// Cone angle 2 pi alpha; a cusp is alpha = 0.
struct SingularityPrescription {
    enum class Type { Cusp, Conical };
    CPoint point;
    Type type = Type::Cusp;
    double alpha = 0.0;

    static SingularityPrescription cusp(CPoint p) { return {p, Type::Cusp, 0.0}; }
    static SingularityPrescription conical(CPoint p, double a) { return {p, Type::Conical, a}; }
    double cone_alpha() const { return type == Type::Cusp ? 0.0 : alpha; }
    std::string str() const;
};

struct SolverStats {
    int newton_iterations = 0;
    int linear_iterations = 0;
    int sweeps = 0;
    double final_residual = 0.0;
    double mismatch = 0.0;
    bool monotone = true;
    std::vector<double> residual_history;  // accepted steps of the last Newton solve per grid, concatenated
    double seconds = 0.0;
};

// One grid of a metric. For log-polar patches around a singular point the
// field is still v (not v + log r).
struct ChartField {
    Chart chart;
    std::vector<double> v;
    std::vector<uint8_t> usable;  // nodes carrying a value (unknowns plus donor-filled fringe)
    int singular_index = -1;      // prescription this patch resolves, or -1
    double own_radius = 0.0;      // patch owns |z - center| < own_radius
    double inset_alpha = 0.0;     // cone parameter at the inset (patches only)
    bool has_inset = false;
};

class HyperbolicMetric {
public:
    std::vector<ChartField> charts;
    std::vector<SingularityPrescription> prescriptions;
    std::optional<std::string> closed_form;
    bool sphere = false;
    double chart_radius = 1.25;
    SolverStats stats;

    // Index of the grid that owns the point (frame coordinate c), or -1.
    int owner(Frame f, Complex c) const;
    // v in frame f at c, NaN if not covered.
    double v_at(Frame f, Complex c) const;
    std::string describe() const;
};

enum class ModelKind { Cusp, Conical };

struct ModelGrid {
    int n_rho = 512;
    int n_theta = 512;
    double r_min = 1e-3;
};

// Closed-form hyperbolic metric on the punctured disc of the given radius.
HyperbolicMetric model_metric(ModelKind kind, double alpha, double radius, const ModelGrid& grid = {});
double model_v(ModelKind kind, double alpha, double r);
// Sample an arbitrary closed form v(z) on a chart.
HyperbolicMetric metric_from_function(const Chart& chart, const std::function<double(Complex)>& v,
                                      const std::string& tag);

struct DiscChart {
    double radius = 0.5;
};
struct SphereChart {};
using ChartSpec = std::variant<DiscChart, SphereChart>;

enum class InsetCondition { Asymptotic, ModelDirichlet };

struct LiouvilleOptions {
    double tol = 1e-8;
    int max_iter = 50;
    int n_rho = 512;
    int n_theta = 512;
    int n_cart = 512;
    double inset = 1e-3;
    double chart_radius = 1.25;
    double patch_max_radius = 0.2;
    InsetCondition inset_condition = InsetCondition::Asymptotic;
    int max_sweeps = 400;
    double schwarz_tol = 1e-7;
    bool coarse_start = true;
    bool verbose = false;
};

void check_admissible(const std::vector<SingularityPrescription>& ps);

HyperbolicMetric solve_liouville(const std::vector<SingularityPrescription>& prescriptions, const ChartSpec& chart,
                                 const LiouvilleOptions& opts = {});

// K = -e^{-2v} (Laplacian v) per grid, NaN where the stencil is unavailable.
std::vector<std::vector<double>> gauss_curvature(const HyperbolicMetric& m, int order = 4);

struct AnnulusRegion {
    Complex center{0.0, 0.0};
    double r_min = 0.0, r_max = 0.0;
};
struct WholeRegion {};
using Region = std::variant<WholeRegion, AnnulusRegion>;

double area(const HyperbolicMetric& m, const Region& region = WholeRegion{});

}  // namespace spk
