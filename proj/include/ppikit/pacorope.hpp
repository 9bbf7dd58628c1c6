#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace ppikit::pacorope {

struct TextSpan {
    std::size_t tokens = 0;
};

// A compressed protein span: L' tokens, token t standing for the residue
// window starting at t*stride (so its spatial coordinate is t).
struct ProteinSpan {
    char side = 'A';  // 'A' or 'B'
    std::size_t compressed_length = 0;
    std::size_t stride = 4;
};

// H x W pooled pair-map patches serialized row-major (A axis outer).
struct PairMapGrid {
    std::size_t h = 0;
    std::size_t w = 0;
    std::size_t lprime_a = 0;
    std::size_t lprime_b = 0;
};

using Segment = std::variant<TextSpan, ProteinSpan, PairMapGrid>;

struct PromptLayout {
    std::vector<Segment> segments;

    // At most one grid, at most one protein span per side, positive
    // dimensions. Throws on violation.
    void validate() const;
};

struct PositionTriplet {
    double p_t = 0.0;
    double p_theta = 0.0;
    double p_phi = 0.0;
    bool operator==(const PositionTriplet&) const = default;
};

struct RotaryConfig {
    int head_dim = 64;              // even
    double base_frequency = 10000;  // omega_0

    // omega_i = omega_0^(2i/head_dim) for pair index i in [0, head_dim/2) —
    // the exponent is positive as specified, so frequencies grow with i.
    double omega(int i) const;
    // Channel selector: pair i reads p_t, p_theta, or p_phi as i mod 3.
    int channel(int i) const { return i % 3; }
};

// One triplet per token in flattened order: text (n,n,n); protein A token t
// -> (n, t, 0); protein B -> (n, 0, t); pair-map patch (m,w) -> (n,
// (m+1/2)*L'_A/H, (w+1/2)*L'_B/W).
std::vector<PositionTriplet> assign_positions(const PromptLayout& layout);

// Rotates each coefficient pair (2i, 2i+1) by omega_i times the triplet
// coordinate selected by channel(i). Norm-preserving. Throws on a dimension
// mismatch or odd head_dim.
std::vector<double> rotate(const std::vector<double>& vec, const PositionTriplet& p,
                           const RotaryConfig& config);

// <rotate(q, p_q), rotate(k, p_k)> — the quantity attention consumes.
double relative_score(const std::vector<double>& q, const std::vector<double>& k,
                      const PositionTriplet& p_q, const PositionTriplet& p_k,
                      const RotaryConfig& config);

struct AlignmentBoundReport {
    double bound_a = 0.0;  // L'_A / (2H)
    double bound_b = 0.0;
    double max_deviation_a = 0.0;
    double max_deviation_b = 0.0;
    bool passed = false;

    nlohmann::json to_json() const;
};

// For every residue-token index r on each protein axis, checks the distance
// to its pair-map bin center against the quantization bound (+1e-9 slack).
// Requires the layout to hold a grid and protein spans matching its L' values.
AlignmentBoundReport check_alignment_bound(const PromptLayout& layout);

// Triplet dump for integration with external stacks.
nlohmann::json positions_json(const PromptLayout& layout);

}  // namespace ppikit::pacorope
