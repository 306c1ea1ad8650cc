#pragma once

// Rule-based synthetic flow-pattern data. The flow map is a deliberately
// simplified, versioned decision list (not a mechanistic transition model)
// that gives the training pipeline a deterministic, learnable ground truth.

#include <cstdint>
#include <vector>

#include "flowpat/data.hpp"

namespace flowpat {

/// Bump whenever any rule threshold or the sampling recipe changes; written
/// into generated CSVs as "# flowmap-rules <version>".
inline constexpr std::string_view kFlowMapRulesVersion = "v1";

// Flow map v1 thresholds. The label depends only on the superficial
// velocities, the inclination and the pipe diameter; every other feature is
// sampled but carries no label signal. Rules are tried in order:
//   1. near-horizontal, low liquid, moderate gas  -> SS / SW on gas velocity
//   2. gas above the (diameter-dependent) annular cut -> A
//   3. high liquid with low gas -> DB / B on liquid velocity
//   4. everything else -> I
namespace flowmap {
inline constexpr double kStratifiedMaxIncl = 10.0;   // deg
inline constexpr double kStratifiedMaxVsl = 0.25;    // m/s
inline constexpr double kStratifiedMaxVsg = 4.0;     // m/s
inline constexpr double kSmoothWavyVsgSplit = 0.5;   // m/s: below SS, else SW
inline constexpr double kSmallPipeMaxDiameter = 0.04; // m
inline constexpr double kAnnularVsgSmallPipe = 12.0; // m/s
inline constexpr double kAnnularVsgLargePipe = 18.0; // m/s
inline constexpr double kDispersedMinVsl = 1.5;      // m/s
inline constexpr double kDispersedMaxVsg = 8.0;      // m/s
inline constexpr double kBubbleVslSplit = 3.0;       // m/s: above DB, else B
} // namespace flowmap

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

struct GenSpec {
    std::size_t n_samples = 5676;
    std::uint64_t seed = 1;
    double noise_fraction = 0.0; // in [0, 0.5): labels re-drawn uniformly

    // Sampling intervals. Velocities and viscosities draw log-uniformly,
    // everything else uniformly; diameter picks from the finite set.
    Range vsl{0.02, 5.0};
    Range vsg{0.02, 50.0};
    std::vector<double> diameter_choices{0.0254, 0.0508};
    Range inclination{-90.0, 90.0};
    Range rho_l{800.0, 1200.0};
    Range rho_g{0.5, 50.0};
    Range mu_l{1e-4, 1e-1};
    Range mu_g{1e-5, 3e-5};
    Range sigma{0.02, 0.08};
    Range pressure{100.0, 1000.0};
    Range temperature{10.0, 60.0};

    void validate() const; // throws ValidationError
};

/// Applies the v1 decision list. The input must satisfy the raw-feature
/// schema; every valid input receives exactly one of the six base labels.
FlowLabel classify_mechanistic(const FeatureVector& x);

/// Seeded sampling of spec.n_samples feature vectors, each labeled by
/// classify_mechanistic, with optional label noise. Sample i depends only on
/// (spec, i), so generation order is irrelevant. Returns a Test1 dataset
/// carrying kFlowMapRulesVersion.
Dataset generate_dataset(const GenSpec& spec);

} // namespace flowpat
