#include "flowpat/synth.hpp"

#include <cmath>

#include "flowpat/errors.hpp"
#include "flowpat/rng.hpp"

namespace flowpat {

void GenSpec::validate() const {
    if (n_samples == 0) {
        throw ValidationError("n_samples must be a positive integer");
    }
    if (!(noise_fraction >= 0.0 && noise_fraction < 0.5)) {
        throw ValidationError("noise_fraction must lie in [0, 0.5)");
    }
    const struct {
        const char* name;
        Range range;
        bool positive;
    } ranges[] = {
        {"vsl", vsl, true},           {"vsg", vsg, true},
        {"inclination", inclination, false}, {"rho_l", rho_l, true},
        {"rho_g", rho_g, true},       {"mu_l", mu_l, true},
        {"mu_g", mu_g, true},         {"sigma", sigma, true},
        {"pressure", pressure, false}, {"temperature", temperature, false},
    };
    for (const auto& r : ranges) {
        if (!(r.range.lo < r.range.hi)) {
            throw ValidationError(std::string(r.name) + ": degenerate range (min >= max)");
        }
        if (r.positive && !(r.range.lo > 0.0)) {
            throw ValidationError(std::string(r.name) + ": range must be positive");
        }
    }
    if (inclination.lo < -90.0 || inclination.hi > 90.0) {
        throw ValidationError("inclination range must stay within [-90, 90]");
    }
    if (diameter_choices.empty()) {
        throw ValidationError("diameter_choices must not be empty");
    }
    for (const double d : diameter_choices) {
        if (!(d > 0.0)) throw ValidationError("diameters must be > 0");
    }
}

FlowLabel classify_mechanistic(const FeatureVector& x) {
    validate_raw_features(x);
    const double vsl = x[kVsl];
    const double vsg = x[kVsg];
    const double incl = x[kInclination];
    const double diameter = x[kDiameter];

    using namespace flowmap;
    if (std::fabs(incl) < kStratifiedMaxIncl && vsl < kStratifiedMaxVsl &&
        vsg < kStratifiedMaxVsg) {
        return vsg < kSmoothWavyVsgSplit ? FlowLabel::SS : FlowLabel::SW;
    }
    const double annular_cut = diameter < kSmallPipeMaxDiameter ? kAnnularVsgSmallPipe
                                                                : kAnnularVsgLargePipe;
    if (vsg >= annular_cut) {
        return FlowLabel::A;
    }
    if (vsl >= kDispersedMinVsl && vsg < kDispersedMaxVsg) {
        return vsl >= kBubbleVslSplit ? FlowLabel::DB : FlowLabel::B;
    }
    return FlowLabel::I;
}

Dataset generate_dataset(const GenSpec& spec) {
    spec.validate();
    Dataset ds(LabelScheme::test1());
    ds.set_rules_version(std::string(kFlowMapRulesVersion));
    const auto& classes = LabelScheme::test1().classes();
    for (std::size_t i = 0; i < spec.n_samples; ++i) {
        // Per-index stream: sample i is a pure function of (seed, i).
        rng::SplitMix64 g(rng::substream(spec.seed, i));
        FeatureVector x{};
        x[kVsl] = rng::log_uniform(g, spec.vsl.lo, spec.vsl.hi);
        x[kVsg] = rng::log_uniform(g, spec.vsg.lo, spec.vsg.hi);
        x[kDiameter] = spec.diameter_choices[rng::below(g, spec.diameter_choices.size())];
        x[kInclination] = rng::uniform(g, spec.inclination.lo, spec.inclination.hi);
        x[kRhoL] = rng::uniform(g, spec.rho_l.lo, spec.rho_l.hi);
        x[kRhoG] = rng::log_uniform(g, spec.rho_g.lo, spec.rho_g.hi);
        x[kMuL] = rng::log_uniform(g, spec.mu_l.lo, spec.mu_l.hi);
        x[kMuG] = rng::log_uniform(g, spec.mu_g.lo, spec.mu_g.hi);
        x[kSigma] = rng::uniform(g, spec.sigma.lo, spec.sigma.hi);
        x[kPressure] = rng::uniform(g, spec.pressure.lo, spec.pressure.hi);
        x[kTemperature] = rng::uniform(g, spec.temperature.lo, spec.temperature.hi);

        FlowLabel label = classify_mechanistic(x);
        if (spec.noise_fraction > 0.0 && rng::unit(g) < spec.noise_fraction) {
            label = classes[rng::below(g, classes.size())];
        }
        ds.add(x, label);
    }
    return ds;
}

} // namespace flowpat
