#include "ppikit/pacorope.hpp"

#include <cmath>
#include <stdexcept>

namespace ppikit::pacorope {

void PromptLayout::validate() const {
    int grids = 0;
    int side_a = 0;
    int side_b = 0;
    for (const Segment& seg : segments) {
        if (const auto* p = std::get_if<ProteinSpan>(&seg)) {
            if (p->side != 'A' && p->side != 'B')
                throw std::runtime_error("layout: protein span side must be 'A' or 'B'");
            if (p->compressed_length < 1)
                throw std::runtime_error("layout: protein span needs L' >= 1");
            if (p->stride < 1) throw std::runtime_error("layout: protein span needs stride >= 1");
            ++(p->side == 'A' ? side_a : side_b);
        } else if (const auto* g = std::get_if<PairMapGrid>(&seg)) {
            if (g->h < 1 || g->w < 1) throw std::runtime_error("layout: grid needs H, W >= 1");
            if (g->lprime_a < 1 || g->lprime_b < 1)
                throw std::runtime_error("layout: grid needs L' >= 1 on both axes");
            ++grids;
        }
    }
    if (grids > 1) throw std::runtime_error("layout: more than one pair-map grid");
    if (side_a > 1) throw std::runtime_error("layout: more than one protein span for side A");
    if (side_b > 1) throw std::runtime_error("layout: more than one protein span for side B");
}

std::vector<PositionTriplet> assign_positions(const PromptLayout& layout) {
    layout.validate();
    std::vector<PositionTriplet> out;
    double k = 0.0;
    for (const Segment& seg : layout.segments) {
        if (const auto* t = std::get_if<TextSpan>(&seg)) {
            for (std::size_t n = 0; n < t->tokens; ++n, k += 1.0) out.push_back({k, k, k});
        } else if (const auto* p = std::get_if<ProteinSpan>(&seg)) {
            for (std::size_t n = 0; n < p->compressed_length; ++n, k += 1.0) {
                double spatial = static_cast<double>(n);
                if (p->side == 'A')
                    out.push_back({k, spatial, 0.0});
                else
                    out.push_back({k, 0.0, spatial});
            }
        } else {
            const auto& g = std::get<PairMapGrid>(seg);
            for (std::size_t m = 0; m < g.h; ++m) {
                for (std::size_t w = 0; w < g.w; ++w, k += 1.0) {
                    double theta = (static_cast<double>(m) + 0.5) *
                                   static_cast<double>(g.lprime_a) / static_cast<double>(g.h);
                    double phi = (static_cast<double>(w) + 0.5) *
                                 static_cast<double>(g.lprime_b) / static_cast<double>(g.w);
                    out.push_back({k, theta, phi});
                }
            }
        }
    }
    return out;
}

double RotaryConfig::omega(int i) const {
    return std::pow(base_frequency, 2.0 * i / head_dim);
}

std::vector<double> rotate(const std::vector<double>& vec, const PositionTriplet& p,
                           const RotaryConfig& config) {
    if (config.head_dim < 2 || config.head_dim % 2 != 0)
        throw std::runtime_error("rotate: head_dim must be even and positive");
    if (vec.size() != static_cast<std::size_t>(config.head_dim))
        throw std::runtime_error("rotate: vector length " + std::to_string(vec.size()) +
                                 " != head_dim " + std::to_string(config.head_dim));
    std::vector<double> out(vec.size());
    for (int i = 0; i < config.head_dim / 2; ++i) {
        double coord;
        switch (config.channel(i)) {
            case 0: coord = p.p_t; break;
            case 1: coord = p.p_theta; break;
            default: coord = p.p_phi; break;
        }
        double angle = config.omega(i) * coord;
        double c = std::cos(angle);
        double s = std::sin(angle);
        double x = vec[2 * i];
        double y = vec[2 * i + 1];
        out[2 * i] = x * c - y * s;
        out[2 * i + 1] = x * s + y * c;
    }
    return out;
}

double relative_score(const std::vector<double>& q, const std::vector<double>& k,
                      const PositionTriplet& p_q, const PositionTriplet& p_k,
                      const RotaryConfig& config) {
    std::vector<double> rq = rotate(q, p_q, config);
    std::vector<double> rk = rotate(k, p_k, config);
    double dot = 0.0;
    for (std::size_t i = 0; i < rq.size(); ++i) dot += rq[i] * rk[i];
    return dot;
}

AlignmentBoundReport check_alignment_bound(const PromptLayout& layout) {
    layout.validate();
    const PairMapGrid* grid = nullptr;
    const ProteinSpan* span_a = nullptr;
    const ProteinSpan* span_b = nullptr;
    for (const Segment& seg : layout.segments) {
        if (const auto* g = std::get_if<PairMapGrid>(&seg)) grid = g;
        if (const auto* p = std::get_if<ProteinSpan>(&seg))
            (p->side == 'A' ? span_a : span_b) = p;
    }
    if (!grid) throw std::runtime_error("alignment bound: layout has no pair-map grid");
    if (!span_a || span_a->compressed_length != grid->lprime_a)
        throw std::runtime_error("alignment bound: no protein span matching grid L'_A");
    if (!span_b || span_b->compressed_length != grid->lprime_b)
        throw std::runtime_error("alignment bound: no protein span matching grid L'_B");

    auto scan_axis = [](std::size_t lprime, std::size_t bins, double* max_dev) {
        double width = static_cast<double>(lprime) / static_cast<double>(bins);
        *max_dev = 0.0;
        for (std::size_t r = 0; r < lprime; ++r) {
            std::size_t bin = r * bins / lprime;  // floor(r / (L'/bins))
            double center = (static_cast<double>(bin) + 0.5) * width;
            double dev = std::abs(static_cast<double>(r) - center);
            if (dev > *max_dev) *max_dev = dev;
        }
        return width / 2.0;
    };

    AlignmentBoundReport report;
    report.bound_a = scan_axis(grid->lprime_a, grid->h, &report.max_deviation_a);
    report.bound_b = scan_axis(grid->lprime_b, grid->w, &report.max_deviation_b);
    report.passed = report.max_deviation_a <= report.bound_a + 1e-9 &&
                    report.max_deviation_b <= report.bound_b + 1e-9;
    return report;
}

nlohmann::json AlignmentBoundReport::to_json() const {
    return nlohmann::json{{"bound_a", bound_a},
                          {"bound_b", bound_b},
                          {"max_deviation_a", max_deviation_a},
                          {"max_deviation_b", max_deviation_b},
                          {"passed", passed}};
}

nlohmann::json positions_json(const PromptLayout& layout) {
    nlohmann::json segs = nlohmann::json::array();
    for (const Segment& seg : layout.segments) {
        if (const auto* t = std::get_if<TextSpan>(&seg)) {
            segs.push_back(nlohmann::json{{"kind", "text"}, {"tokens", t->tokens}});
        } else if (const auto* p = std::get_if<ProteinSpan>(&seg)) {
            segs.push_back(nlohmann::json{{"kind", "protein"},
                                          {"side", std::string(1, p->side)},
                                          {"compressed_length", p->compressed_length},
                                          {"stride", p->stride}});
        } else {
            const auto& g = std::get<PairMapGrid>(seg);
            segs.push_back(nlohmann::json{{"kind", "pair_map"},
                                          {"h", g.h},
                                          {"w", g.w},
                                          {"lprime_a", g.lprime_a},
                                          {"lprime_b", g.lprime_b}});
        }
    }
    nlohmann::json triplets = nlohmann::json::array();
    for (const PositionTriplet& t : assign_positions(layout))
        triplets.push_back(nlohmann::json::array({t.p_t, t.p_theta, t.p_phi}));
    return nlohmann::json{{"segments", std::move(segs)}, {"triplets", std::move(triplets)}};
}

}  // namespace ppikit::pacorope
