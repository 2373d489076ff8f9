#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "spk/differentials.hpp"

namespace spk {

// Singular data (genus, points, betas, ell): the first ell points are conical,
// the rest logarithmic with integer beta.
struct SingularData {
    int genus = 0;
    std::vector<CPoint> points;
    std::vector<double> betas;
    int ell = 0;
    // Lattice Z + tau Z for genus 1 (points are representatives mod the lattice).
    std::optional<Complex> tau;

    int k() const { return static_cast<int>(points.size()); }
    bool conical(int j) const { return j < ell; }
    // Order bound at point j: floor(beta) for conical slots, beta - 1 for logarithmic ones.
    int order(int j) const;
    void validate() const;  // throws InvalidArgument

    nlohmann::json to_json() const;
    static SingularData from_json(const nlohmann::json& j);
};

struct Stratum {
    std::vector<int> m;  // added orders on the logarithmic slots
    int N = 0;
};

struct ModuliReport {
    bool exists = false;
    std::string verdict = "iff";  // or "necessary-only"
    std::optional<int> N;
    int deg_L = 0;
    std::string topology;
    std::vector<Stratum> strata;
    std::uint64_t strata_total = 0;  // may exceed strata.size() when the list is capped
    std::vector<std::string> reasons;

    nlohmann::json to_json() const;
};

// deg L = 6(genus - 1) + (k - ell) - sum floor(beta_j).
int degree_L(const SingularData& d);

ModuliReport existence_check(const SingularData& d);
// dim H^0(L); genus 0 always, genus 1 when the lattice is given.
int h_space_dim(const SingularData& d);
// z^t prod (z - p_j)^{order_j}, t = 0..N; points at infinity enter through the degree bound.
std::vector<CubicDifferential> basis_on_sphere(const SingularData& d);
// Random element of H(p, b) with exact orders at the logarithmic points.
CubicDifferential sample_section(const SingularData& d, std::uint64_t seed);

// Strata m in Z_+^{k - ell} with nonempty H(p, b + (0, m)), top stratum first.
// At most `limit` entries are listed.
std::vector<Stratum> enumerate_strata(const SingularData& d, std::size_t limit = SIZE_MAX);
std::uint64_t count_strata(const SingularData& d);

ModuliReport elliptic_check(Complex tau, const SingularData& d);

// Abel sum of an integral divisor reduced into the fundamental cell, and the
// distance to the nearest lattice point.
double lattice_distance(Complex s, Complex tau);

}  // namespace spk
