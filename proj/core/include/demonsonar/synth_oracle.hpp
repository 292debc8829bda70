#pragma once

#include "demonsonar/audio_io.hpp"
#include "demonsonar/eval_harness.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace demonsonar {

/// Ground-truth parameters of one synthetic propeller signal:
///   x(t) = [1 + m * (s*cos(2*pi*f_shaft*t) + cos(2*pi*B*f_shaft*t)) / (s+1)]
///            * w(t) + a * v(t)
/// with w carrier-bandpassed unit-power noise, v full-band noise, and `a`
/// chosen so the modulated component sits snr_db above the ambient term.
struct VesselParams {
    double shaft_hz = 5.0;
    int blade_count = 3;        // in [2, 7]
    double mod_depth = 0.5;     // m, in [0, 1]
    double shaft_line_frac = 0.5; // s, shaft line strength relative to blade line
    double snr_db = 10.0;
    double carrier_lo_hz = 1600.0;
    double carrier_hi_hz = 7200.0;
    double duration_s = 10.0;
    double sample_rate_hz = 16000.0;
    std::uint64_t seed = 0;
};

SampleBuffer synth_vessel_signal(const VesselParams& params);

/// The two addends of the synthesis model before summation and peak
/// normalization; their power ratio realizes snr_db.
struct SynthParts {
    std::vector<double> modulated; // [1 + modulation] * carrier noise
    std::vector<double> ambient;   // scaled full-band noise
};
SynthParts synth_vessel_parts(const VesselParams& params);

/// Per-class parameter box; samples draw uniformly from each coordinate.
struct ClassBox {
    double shaft_lo_hz = 0.0;
    double shaft_hi_hz = 0.0;
    int blade_lo = 2;
    int blade_hi = 2;
    double mod_lo = 0.5;
    double mod_hi = 0.5;
    double snr_lo_db = 10.0;
    double snr_hi_db = 10.0;
};

/// Dataset recipe: coarse class boxes (disjoint in shaft rate) plus fine
/// sub-boxes inside the refine class. Fine labels cycle through the fine
/// boxes across that class's samples.
struct SynthSpec {
    std::vector<ClassBox> coarse_boxes;
    std::vector<ClassBox> fine_boxes;
    int refine_category = 1;
    std::size_t samples_per_class = 40;
    double duration_s = 10.0;
    double sample_rate_hz = 16000.0;
    double carrier_lo_hz = 0.0; // 0 = 0.1 * sample rate
    double carrier_hi_hz = 0.0; // 0 = 0.45 * sample rate
    double shaft_line_frac = 0.5;
    std::uint64_t seed = 0;

    /// Desk-scale default: 5 coarse classes x 40 samples, 10 fine types
    /// inside coarse class 1, 10 s at 16 kHz, SNR 10 dB.
    static SynthSpec defaults();

    /// The default geometry truncated to `coarse_classes` (2..5) coarse
    /// classes and `fine_types` (0..10) fine boxes; 0 disables refinement.
    static SynthSpec make(int coarse_classes, int fine_types, std::size_t samples_per_class);
};

/// Writes one WAV per sample plus `manifest.csv` into out_dir and returns
/// the manifest (paths relative to out_dir). Same spec + seed reproduce
/// byte-identical outputs.
DatasetManifest generate_dataset(const SynthSpec& spec, const std::filesystem::path& out_dir);

} // namespace demonsonar
