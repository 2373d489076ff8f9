#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "spk/hyperbolic.hpp"
#include "spk/moduli.hpp"
#include "spk/structure.hpp"

namespace spk {

// Singularities of the associated hyperbolic metric for a section xi of the
// data d: cusps at logarithmic points, cones alpha = ord - beta + 1 at conical
// points, cones alpha = ord + 1 at unmarked zeros. Regular points (alpha = 1)
// are dropped.
std::vector<SingularityPrescription> prescriptions_for(const SingularData& d, const CubicDifferential& xi);

// Expected leading order of the density at a prescription point.
double predicted_order(const SingularityPrescription& p, const CubicDifferential& xi);

// Smallest distance between prescription points, measured in the frame each
// point's patch uses (|z| <= 1: z chart, otherwise w = 1/z).
double min_separation(const std::vector<SingularityPrescription>& ps);

struct PipelineOptions {
    std::uint64_t seed = 1;
    LiouvilleOptions solver;
    Thresholds thresholds;
    // Sections are resampled (seed, seed + 1, ...) until all singular points are this far apart.
    double separation = 0.35;
    int max_resample = 200;
    double order_tol = 0.05;
};

struct OrderCheck {
    SingularityPrescription prescription;
    double predicted = 0.0;
    double fitted = 0.0;
    bool fitted_ok = false;  // false when the fit was impossible (too little radial range)
    bool pass = false;
};

struct PipelineResult {
    ModuliReport moduli;
    std::uint64_t seed_used = 0;
    CubicDifferential xi;
    std::vector<SingularityPrescription> prescriptions;
    SpecialKahlerStructure structure;
    VerificationReport report;
    std::vector<OrderCheck> orders;
    double area = 0.0;
    double area_expected = 0.0;
    std::vector<std::string> warnings;

    bool pass() const;
    nlohmann::json to_json() const;
};

// moduli -> sample -> solve -> assemble -> verify. Throws EmptySpace when no
// structure exists and NoConvergence from the solver.
PipelineResult run_pipeline(const SingularData& d, const PipelineOptions& opts);

}  // namespace spk
