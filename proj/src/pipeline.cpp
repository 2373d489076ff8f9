#include "spk/pipeline.hpp"

#include <cmath>
#include <limits>

#include "spk/io.hpp"

namespace spk {

namespace {

const double kTwoPi = 2.0 * std::acos(-1.0);

bool marked(const SingularData& d, const CPoint& p) {
    for (const auto& q : d.points)
        if (same_point(p, q, 1e-9)) return true;
    return false;
}

// Frame and centre of the patch a solver would place at p.
std::pair<Frame, Complex> patch_frame(const CPoint& p) {
    if (p.is_infinity()) return {Frame::W, 0.0};
    if (std::abs(p.z) <= 1.0) return {Frame::Z, p.z};
    return {Frame::W, 1.0 / p.z};
}

}  // namespace

std::vector<SingularityPrescription> prescriptions_for(const SingularData& d, const CubicDifferential& xi) {
    std::vector<SingularityPrescription> out;
    for (int j = 0; j < d.k(); ++j) {
        const CPoint& p = d.points[j];
        if (!d.conical(j)) {
            out.push_back(SingularityPrescription::cusp(p));
            continue;
        }
        double alpha = ord_at(xi, p) - d.betas[j] + 1.0;
        if (std::abs(alpha - 1.0) > 1e-12) out.push_back(SingularityPrescription::conical(p, alpha));
    }
    for (const auto& f : xi.rational_part().factors()) {
        CPoint p = CPoint::finite(f.root);
        if (f.mult > 0 && !marked(d, p)) out.push_back(SingularityPrescription::conical(p, f.mult + 1.0));
    }
    CPoint inf = CPoint::infinity();
    int oi = ord_at(xi, inf);
    if (oi > 0 && !marked(d, inf)) out.push_back(SingularityPrescription::conical(inf, oi + 1.0));
    return out;
}

double predicted_order(const SingularityPrescription& p, const CubicDifferential& xi) {
    const int n = ord_at(xi, p.point);
    if (p.type == SingularityPrescription::Type::Cusp) return 0.5 * (n + 1);
    return 0.5 * (n - (p.alpha - 1.0));
}

double min_separation(const std::vector<SingularityPrescription>& ps) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < ps.size(); ++i) {
        auto [f, c] = patch_frame(ps[i].point);
        for (size_t j = 0; j < ps.size(); ++j) {
            if (i == j) continue;
            const CPoint& q = ps[j].point;
            Complex loc;
            if (q.is_infinity()) {
                if (f == Frame::Z) continue;
                loc = 0.0;
            } else if (f == Frame::Z) {
                loc = q.z;
            } else {
                if (q.z == Complex(0.0, 0.0)) continue;
                loc = 1.0 / q.z;
            }
            best = std::min(best, std::abs(loc - c));
        }
    }
    return best;
}

bool PipelineResult::pass() const {
    if (!report.pass()) return false;
    for (const auto& o : orders)
        if (o.fitted_ok && !o.pass) return false;
    return true;
}

nlohmann::json PipelineResult::to_json() const {
    nlohmann::json j;
    j["pass"] = pass();
    j["moduli"] = moduli.to_json();
    j["seed_used"] = seed_used;
    j["xi"] = xi.to_json();
    j["prescriptions"] = nlohmann::json::array();
    for (const auto& p : prescriptions) j["prescriptions"].push_back(prescription_to_json(p));
    j["solver"] = stats_to_json(structure.gtilde.stats);
    j["area"] = {{"measured", area}, {"gauss_bonnet", area_expected},
                 {"relative_error", std::abs(area - area_expected) / area_expected}};
    j["verification"] = report.to_json();
    j["orders"] = nlohmann::json::array();
    for (const auto& o : orders) {
        nlohmann::json e{{"prescription", prescription_to_json(o.prescription)},
                         {"predicted", o.predicted},
                         {"fitted_ok", o.fitted_ok},
                         {"pass", o.pass}};
        e["fitted"] = o.fitted_ok ? nlohmann::json(o.fitted) : nlohmann::json(nullptr);
        j["orders"].push_back(e);
    }
    j["warnings"] = warnings;
    return j;
}

PipelineResult run_pipeline(const SingularData& d, const PipelineOptions& opts) {
    if (d.genus != 0) throw Error(ErrorCode::GenusUnsupported, "the pipeline runs on the sphere");
    PipelineResult r;
    r.moduli = existence_check(d);
    if (!r.moduli.exists) throw Error(ErrorCode::EmptySpace, "no structure with these singularities");

    // the marked points alone already bound the separation
    std::vector<SingularityPrescription> marks;
    for (const auto& p : d.points) marks.push_back(SingularityPrescription::cusp(p));
    const double mark_sep = d.k() > 1 ? min_separation(marks) : std::numeric_limits<double>::infinity();
    const bool can_separate = mark_sep >= opts.separation;
    if (!can_separate) r.warnings.push_back("marked points closer than the separation target; order fits may be skipped");

    double best = -1.0;
    for (int a = 0; a < std::max(1, opts.max_resample); ++a) {
        std::uint64_t seed = opts.seed + static_cast<std::uint64_t>(a);
        CubicDifferential xi = sample_section(d, seed);
        auto ps = prescriptions_for(d, xi);
        double sep = ps.size() > 1 ? min_separation(ps) : std::numeric_limits<double>::infinity();
        if (sep > best) {
            best = sep;
            r.seed_used = seed;
            r.xi = xi;
            r.prescriptions = ps;
        }
        if (!can_separate || sep >= opts.separation) break;
    }
    if (can_separate && best < opts.separation)
        r.warnings.push_back("no seed reached the separation target; using the best one");

    HyperbolicMetric g = solve_liouville(r.prescriptions, SphereChart{}, opts.solver);
    r.area = area(g);
    double chi_term = -2.0;
    for (const auto& p : r.prescriptions) chi_term += 1.0 - p.cone_alpha();
    r.area_expected = kTwoPi * chi_term;

    r.structure = assemble(g, r.xi);
    VerifyOptions vo;
    vo.thresholds = opts.thresholds;
    vo.fit_orders = true;
    r.report = verify(r.structure, vo);
    for (const auto& p : r.prescriptions) {
        OrderCheck oc;
        oc.prescription = p;
        oc.predicted = predicted_order(p, r.xi);
        for (const auto& f : r.report.order_fits)
            if (same_point(f.point, p.point, 1e-9)) {
                oc.fitted_ok = true;
                oc.fitted = f.order;
            }
        oc.pass = oc.fitted_ok && std::abs(oc.fitted - oc.predicted) <= opts.order_tol;
        if (!oc.fitted_ok) r.warnings.push_back("no order fit at " + p.point.str());
        r.orders.push_back(oc);
    }
    return r;
}

}  // namespace spk
