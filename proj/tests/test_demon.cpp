#include "demonsonar/demon.hpp"
#include "demonsonar/errors.hpp"
#include "demonsonar/prng.hpp"
#include "demonsonar/synth_oracle.hpp"

#include <doctest.h>

#include "helpers.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace demonsonar;
using test_helpers::TempDir;

namespace {

VesselParams test_vessel(std::uint64_t seed) {
    VesselParams params;
    params.shaft_hz = 5.0;
    params.blade_count = 3;
    params.mod_depth = 0.5;
    params.snr_db = 10.0;
    params.carrier_lo_hz = 800.0;
    params.carrier_hi_hz = 3600.0;
    params.duration_s = 60.0;
    params.sample_rate_hz = 8000.0;
    params.seed = seed;
    return params;
}

std::size_t argmax_bin(const std::vector<double>& magnitudes) {
    return static_cast<std::size_t>(
        std::max_element(magnitudes.begin(), magnitudes.end()) - magnitudes.begin());
}

double band_median(const DemonSpectrum& spectrum, double max_line_hz) {
    const auto last = static_cast<std::size_t>(max_line_hz / spectrum.bin_hz);
    std::vector<double> band(spectrum.magnitudes.begin() + 1,
                             spectrum.magnitudes.begin() + static_cast<std::ptrdiff_t>(last) + 1);
    std::sort(band.begin(), band.end());
    return 0.5 * (band[band.size() / 2 - 1] + band[band.size() / 2]);
}

} // namespace

TEST_CASE("demon_spectrum of silence is all zero with a zeroed DC bin") {
    SampleBuffer buffer;
    buffer.sample_rate_hz = 4000.0;
    buffer.samples.assign(4000 * 6, 0.0);
    const DemonSpectrum spectrum = demon_spectrum(buffer, DemonConfig{});
    CHECK(spectrum.magnitudes.size() == 513);
    CHECK(spectrum.magnitudes[0] == 0.0);
    for (double m : spectrum.magnitudes) {
        CHECK(m == 0.0);
    }
    CHECK(spectrum.bin_hz == doctest::Approx(200.0 / 1024.0));
}

TEST_CASE("demon_spectrum finds the blade line of a synthetic vessel") {
    const SampleBuffer buffer = synth_vessel_signal(test_vessel(1));
    const DemonSpectrum spectrum = demon_spectrum(buffer, DemonConfig{});

    // strongest non-DC line within one bin of the 15 Hz blade rate
    const std::size_t peak = argmax_bin(spectrum.magnitudes);
    CHECK(std::abs(static_cast<double>(peak) * spectrum.bin_hz - 15.0) <= spectrum.bin_hz);
    CHECK(spectrum.magnitudes[peak] == 1.0);

    // shaft line at 5 Hz stands at least 3x above the band median
    const auto shaft_bin = static_cast<std::size_t>(std::llround(5.0 / spectrum.bin_hz));
    const double shaft_line = std::max({spectrum.magnitudes[shaft_bin - 1],
                                        spectrum.magnitudes[shaft_bin],
                                        spectrum.magnitudes[shaft_bin + 1]});
    CHECK(shaft_line >= 3.0 * band_median(spectrum, 100.0));

    for (double m : spectrum.magnitudes) {
        CHECK(m >= 0.0);
        CHECK(m <= 1.0);
    }
}

TEST_CASE("demon_spectrum is invariant to input gain and deterministic") {
    VesselParams params = test_vessel(7);
    params.duration_s = 20.0;
    const SampleBuffer buffer = synth_vessel_signal(params);
    const DemonSpectrum base = demon_spectrum(buffer, DemonConfig{});

    SampleBuffer scaled = buffer;
    for (double& v : scaled.samples) {
        v *= 3.7;
    }
    const DemonSpectrum gained = demon_spectrum(scaled, DemonConfig{});
    REQUIRE(gained.magnitudes.size() == base.magnitudes.size());
    for (std::size_t k = 0; k < base.magnitudes.size(); ++k) {
        CHECK(std::abs(gained.magnitudes[k] - base.magnitudes[k]) <= 1e-6);
    }

    const DemonSpectrum again = demon_spectrum(buffer, DemonConfig{});
    CHECK(again.magnitudes == base.magnitudes);
}

TEST_CASE("demon_spectrum on modulation-free noise has no dominant line") {
    int quiet = 0;
    for (int seed = 0; seed < 50; ++seed) {
        VesselParams params = test_vessel(static_cast<std::uint64_t>(seed) + 100);
        params.mod_depth = 0.0;
        params.duration_s = 60.0;
        const DemonSpectrum spectrum = demon_spectrum(synth_vessel_signal(params), DemonConfig{});
        const auto last = static_cast<std::size_t>(100.0 / spectrum.bin_hz);
        const double peak = *std::max_element(spectrum.magnitudes.begin() + 1,
                                              spectrum.magnitudes.begin() + static_cast<std::ptrdiff_t>(last) + 1);
        if (peak <= 5.0 * band_median(spectrum, 100.0)) {
            ++quiet;
        }
    }
    CHECK(quiet >= 45); // >= 90% of seeds
}

TEST_CASE("demon_spectrum contract errors") {
    SampleBuffer buffer;
    buffer.sample_rate_hz = 4000.0;
    buffer.samples.assign(2000, 0.0);
    CHECK_THROWS_WITH_AS(demon_spectrum(buffer, DemonConfig{}), doctest::Contains("at least"),
                         ContractError);

    buffer.samples.assign(4000 * 6, 0.0);
    DemonConfig narrow;
    narrow.envelope_rate_hz = 150.0; // Nyquist 75 < default max_line 100
    CHECK_THROWS_AS(demon_spectrum(buffer, narrow), ContractError);

    DemonConfig bad_band;
    bad_band.carrier_lo_hz = 3000.0;
    bad_band.carrier_hi_hz = 1000.0;
    CHECK_THROWS_AS(demon_spectrum(buffer, bad_band), ContractError);

    CHECK_THROWS_AS(demon_spectrum(SampleBuffer{}, DemonConfig{}), ContractError);
}

TEST_CASE("demon_gram slicing and stationarity") {
    const SampleBuffer buffer = synth_vessel_signal(test_vessel(3));
    const DemonGram gram = demon_gram(buffer, DemonConfig{}, 10.0);
    REQUIRE(gram.rows.size() == 6); // 60 s / 10 s
    CHECK(gram.rows.size() * gram.slice_duration_s <= buffer.duration_s() + 1e-9);

    // a stationary vessel keeps its argmax bin across almost all rows
    std::vector<std::size_t> peaks;
    for (const auto& row : gram.rows) {
        peaks.push_back(argmax_bin(row));
    }
    std::size_t agreeing = 0;
    for (std::size_t peak : peaks) {
        if (peak == peaks.front()) {
            ++agreeing;
        }
    }
    CHECK(agreeing >= 5);

    CHECK_THROWS_AS(demon_gram(buffer, DemonConfig{}, 61.0), ContractError);
    CHECK_THROWS_AS(demon_gram(buffer, DemonConfig{}, 1.0), ContractError);
}

TEST_CASE("render_demon_gram quantization and sidecar") {
    TempDir dir("gram");
    DemonGram gram;
    gram.rows = {{0.0, 0.5, 1.0, 0.25}};
    gram.slice_duration_s = 10.0;
    gram.bin_hz = 0.1953125;
    render_demon_gram(gram, dir.file("g.pgm"));

    const std::string bytes = test_helpers::read_bytes(dir.file("g.pgm"));
    const std::string header = "P5\n4 1\n255\n";
    REQUIRE(bytes.size() == header.size() + 4);
    CHECK(bytes.substr(0, header.size()) == header);
    CHECK(static_cast<unsigned char>(bytes[header.size() + 0]) == 0);
    CHECK(static_cast<unsigned char>(bytes[header.size() + 1]) == 128);
    CHECK(static_cast<unsigned char>(bytes[header.size() + 2]) == 255);
    CHECK(static_cast<unsigned char>(bytes[header.size() + 3]) == 64);

    const std::string sidecar = test_helpers::read_bytes(dir.file("g.txt"));
    CHECK(sidecar.find("bin_hz=0.1953125") != std::string::npos);
    CHECK(sidecar.find("slice_duration_s=10") != std::string::npos);

    DemonGram zeros;
    zeros.rows = {{0.0, 0.0}, {0.0, 0.0}};
    zeros.slice_duration_s = 1.0;
    zeros.bin_hz = 1.0;
    render_demon_gram(zeros, dir.file("z.pgm"));
    const std::string zbytes = test_helpers::read_bytes(dir.file("z.pgm"));
    CHECK(zbytes.substr(zbytes.size() - 4) == std::string(4, '\0'));

    CHECK_THROWS_AS(render_demon_gram(DemonGram{}, dir.file("e.pgm")), ContractError);
}

TEST_CASE("the blade-rate column is the brightest column of a vessel gram") {
    const SampleBuffer buffer = synth_vessel_signal(test_vessel(9));
    const DemonGram gram = demon_gram(buffer, DemonConfig{}, 10.0);
    const std::size_t n_bins = gram.rows.front().size();
    std::size_t best_col = 0;
    double best_mean = -1.0;
    for (std::size_t col = 0; col < n_bins; ++col) {
        double mean = 0.0;
        for (const auto& row : gram.rows) {
            mean += row[col];
        }
        if (mean > best_mean) {
            best_mean = mean;
            best_col = col;
        }
    }
    CHECK(std::abs(static_cast<double>(best_col) * gram.bin_hz - 15.0) <= gram.bin_hz);
}
