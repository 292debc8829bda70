#include "demonsonar/synth_oracle.hpp"

#include "demonsonar/dsp_core.hpp"
#include "demonsonar/errors.hpp"
#include "demonsonar/prng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

namespace demonsonar {

namespace {

constexpr std::size_t kCarrierFilterTaps = 127;

double mean_power(const std::vector<double>& x) {
    double acc = 0.0;
    for (double v : x) {
        acc += v * v;
    }
    return acc / static_cast<double>(x.size());
}

void validate(const VesselParams& p) {
    if (!(p.sample_rate_hz > 0.0) || !(p.duration_s > 0.0)) {
        throw ContractError("synth_vessel_signal: rate and duration must be positive");
    }
    if (p.blade_count < 2 || p.blade_count > 7) {
        throw ContractError("synth_vessel_signal: blade count must be in [2, 7]");
    }
    if (!(p.shaft_hz > 0.0)) {
        throw ContractError("synth_vessel_signal: shaft rate must be positive");
    }
    if (!(p.mod_depth >= 0.0 && p.mod_depth <= 1.0) ||
        !(p.shaft_line_frac >= 0.0 && p.shaft_line_frac <= 1.0)) {
        throw ContractError("synth_vessel_signal: mod_depth and shaft_line_frac must be in [0, 1]");
    }
    // keeps the modulation factor non-negative for all t
    if (p.mod_depth * (p.shaft_line_frac + 1.0) > 1.0 + 1e-12) {
        throw ContractError("synth_vessel_signal: mod_depth * (shaft_line_frac + 1) must be <= 1");
    }
    if (!(0.0 < p.carrier_lo_hz && p.carrier_lo_hz < p.carrier_hi_hz &&
          p.carrier_hi_hz < p.sample_rate_hz / 2.0)) {
        throw ContractError("synth_vessel_signal: carrier band must satisfy 0 < lo < hi < rate/2");
    }
}

} // namespace

SynthParts synth_vessel_parts(const VesselParams& params) {
    validate(params);
    const auto n = static_cast<std::size_t>(std::llround(params.duration_s * params.sample_rate_hz));
    if (n < kCarrierFilterTaps) {
        throw ContractError("synth_vessel_signal: duration too short for the carrier filter");
    }

    // independent noise streams for the carrier and the ambient term
    Xoshiro256ss carrier_rng(derive_seed(params.seed, 0xCA55E77E));
    Xoshiro256ss ambient_rng(derive_seed(params.seed, 0xA3B1E47));

    std::vector<double> raw(n);
    for (double& v : raw) {
        v = carrier_rng.gaussian();
    }
    const FirFilter carrier_filter = design_fir(FilterKind::bandpass, params.carrier_lo_hz,
                                                params.carrier_hi_hz, params.sample_rate_hz,
                                                kCarrierFilterTaps);
    std::vector<double> carrier = filter_apply(carrier_filter, raw);
    const double carrier_rms = std::sqrt(mean_power(carrier));
    if (carrier_rms > 0.0) {
        for (double& v : carrier) {
            v /= carrier_rms;
        }
    }

    const double m = params.mod_depth;
    const double s = params.shaft_line_frac;
    const double f_shaft = params.shaft_hz;
    const double f_blade = params.blade_count * params.shaft_hz;
    const double two_pi = 2.0 * std::numbers::pi;
    SynthParts parts;
    parts.modulated.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / params.sample_rate_hz;
        const double factor =
            1.0 + m * (s * std::cos(two_pi * f_shaft * t) + std::cos(two_pi * f_blade * t)) / (s + 1.0);
        parts.modulated[i] = factor * carrier[i];
    }

    parts.ambient.resize(n);
    for (double& v : parts.ambient) {
        v = ambient_rng.gaussian();
    }
    const double signal_power = mean_power(parts.modulated);
    const double ambient_power = mean_power(parts.ambient);
    const double gain =
        std::sqrt(signal_power / (ambient_power * std::pow(10.0, params.snr_db / 10.0)));
    for (double& v : parts.ambient) {
        v *= gain;
    }
    return parts;
}

SampleBuffer synth_vessel_signal(const VesselParams& params) {
    const SynthParts parts = synth_vessel_parts(params);
    const std::size_t n = parts.modulated.size();

    SampleBuffer buffer;
    buffer.sample_rate_hz = params.sample_rate_hz;
    buffer.samples.resize(n);
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        buffer.samples[i] = parts.modulated[i] + parts.ambient[i];
        peak = std::max(peak, std::abs(buffer.samples[i]));
    }
    if (peak > 0.0) {
        const double scale = 0.9 / peak;
        for (double& v : buffer.samples) {
            v *= scale;
        }
    }
    return buffer;
}

SynthSpec SynthSpec::defaults() {
    SynthSpec spec;
    // Every pair of boxes is disjoint in shaft rate or blade count, with
    // several DEMON bins of margin along whichever axis separates them.
    // Two or three blades keep the blade harmonic inside the comb's +-1-bin
    // windows even when the shaft rate falls between bins.
    spec.coarse_boxes = {
        {7.5, 9.0, 2, 2, 0.5, 0.65, 10.0, 10.0},
        {2.0, 6.8, 2, 3, 0.5, 0.65, 10.0, 10.0},   // refine family, split below
        {10.0, 11.5, 3, 3, 0.5, 0.65, 10.0, 10.0},
        {12.5, 14.5, 2, 2, 0.5, 0.65, 10.0, 10.0},
        {7.5, 9.0, 3, 3, 0.5, 0.65, 10.0, 10.0},
    };
    // 10 fine types: 5 shaft sub-intervals per blade count, the three-blade
    // intervals offset half a step so no two types share a blade rate
    const double sub2_lo[5] = {2.0, 3.0, 4.0, 5.0, 6.0};
    const double sub2_hi[5] = {2.3, 3.3, 4.3, 5.3, 6.3};
    const double sub3_lo[5] = {2.5, 3.5, 4.5, 5.5, 6.5};
    const double sub3_hi[5] = {2.8, 3.8, 4.8, 5.8, 6.8};
    for (int j = 0; j < 5; ++j) {
        spec.fine_boxes.push_back({sub2_lo[j], sub2_hi[j], 2, 2, 0.5, 0.65, 10.0, 10.0});
    }
    for (int j = 0; j < 5; ++j) {
        spec.fine_boxes.push_back({sub3_lo[j], sub3_hi[j], 3, 3, 0.5, 0.65, 10.0, 10.0});
    }
    return spec;
}

SynthSpec SynthSpec::make(int coarse_classes, int fine_types, std::size_t samples_per_class) {
    if (coarse_classes < 2 || coarse_classes > 5) {
        throw ContractError("SynthSpec::make: coarse class count must be in [2, 5]");
    }
    if (fine_types < 0 || fine_types > 10) {
        throw ContractError("SynthSpec::make: fine type count must be in [0, 10]");
    }
    SynthSpec spec = defaults();
    spec.coarse_boxes.resize(static_cast<std::size_t>(coarse_classes));
    spec.fine_boxes.resize(static_cast<std::size_t>(fine_types));
    if (fine_types == 0) {
        spec.refine_category = -1;
    }
    spec.samples_per_class = samples_per_class;
    return spec;
}

DatasetManifest generate_dataset(const SynthSpec& spec, const std::filesystem::path& out_dir) {
    if (spec.coarse_boxes.empty() || spec.samples_per_class == 0) {
        throw ContractError("generate_dataset: need at least one class box and one sample");
    }
    const bool refine_enabled = spec.refine_category >= 0 && !spec.fine_boxes.empty();
    if (refine_enabled &&
        static_cast<std::size_t>(spec.refine_category) >= spec.coarse_boxes.size()) {
        throw ContractError("generate_dataset: refine category " +
                            std::to_string(spec.refine_category) + " is not a coarse class");
    }

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir)) {
        throw IoError("cannot create output directory '" + out_dir.string() + "'");
    }

    const double carrier_lo =
        spec.carrier_lo_hz > 0.0 ? spec.carrier_lo_hz : 0.1 * spec.sample_rate_hz;
    const double carrier_hi =
        spec.carrier_hi_hz > 0.0 ? spec.carrier_hi_hz : 0.45 * spec.sample_rate_hz;

    DatasetManifest manifest;
    manifest.root = out_dir;
    for (std::size_t c = 0; c < spec.coarse_boxes.size(); ++c) {
        const bool is_refine = refine_enabled && c == static_cast<std::size_t>(spec.refine_category);
        for (std::size_t i = 0; i < spec.samples_per_class; ++i) {
            int fine_label = -1;
            const ClassBox* box = &spec.coarse_boxes[c];
            if (is_refine) {
                fine_label = static_cast<int>(i % spec.fine_boxes.size());
                box = &spec.fine_boxes[static_cast<std::size_t>(fine_label)];
            }

            Xoshiro256ss rng(derive_seed(spec.seed, 0xD0A7 + c, i));
            VesselParams params;
            params.shaft_hz = rng.uniform(box->shaft_lo_hz, box->shaft_hi_hz);
            params.blade_count = rng.uniform_int(box->blade_lo, box->blade_hi);
            params.mod_depth = rng.uniform(box->mod_lo, box->mod_hi);
            params.snr_db = rng.uniform(box->snr_lo_db, box->snr_hi_db);
            params.shaft_line_frac = spec.shaft_line_frac;
            params.carrier_lo_hz = carrier_lo;
            params.carrier_hi_hz = carrier_hi;
            params.duration_s = spec.duration_s;
            params.sample_rate_hz = spec.sample_rate_hz;
            params.seed = derive_seed(spec.seed, 0x5EED + c, i);

            char name[64];
            std::snprintf(name, sizeof(name), "c%zu_s%03zu.wav", c, i);
            const SampleBuffer buffer = synth_vessel_signal(params);
            write_wav(buffer, out_dir / name);

            ManifestRow row;
            row.path = name;
            row.label_coarse = static_cast<int>(c);
            row.label_fine = fine_label;
            manifest.rows.push_back(std::move(row));
        }
    }
    write_manifest(manifest, out_dir / "manifest.csv");
    return manifest;
}

} // namespace demonsonar
