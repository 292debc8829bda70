#pragma once

#include "demonsonar/demon.hpp"

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace demonsonar {

/// A spectral line: a strict local maximum above the adaptive threshold.
struct Peak {
    double freq_hz = 0.0;
    double magnitude = 0.0;
    std::size_t bin_index = 0;
};

/// The five-dimensional salient feature vector. A zero shaft/blade frequency
/// encodes "no line found" so noise-only recordings stay classifiable.
struct SalientFeatures {
    double blade_freq_hz = 0.0;
    double shaft_freq_hz = 0.0;
    double avg_strength = 0.0;
    double max_shaft_freq_hz = 0.0;
    double max_blade_freq_hz = 0.0;

    std::array<double, 5> as_array() const {
        return {blade_freq_hz, shaft_freq_hz, avg_strength, max_shaft_freq_hz, max_blade_freq_hz};
    }
};

/// Per-dimension mean / population standard deviation over a training set.
struct FeatureStats {
    std::array<double, 5> mean{};
    std::array<double, 5> stddev{};
};

struct FeatureConfig {
    double shaft_min_hz = 1.0;
    double shaft_max_hz = 15.0;
    int comb_harmonics = 5;
    int blade_min = 2;
    int blade_max = 7;
    double peak_threshold_k = 3.0;
    double max_line_hz = 100.0;
};

struct ShaftEstimate {
    double shaft_hz = 0.0;  // 0 = no detection
    double comb_score = 0.0;
};

/// Strict local maxima above k * median of the non-DC analysis band,
/// sorted by frequency.
std::vector<Peak> detect_peaks(const DemonSpectrum& spectrum, double k,
                               double max_line_hz = 100.0);

/// Harmonic-comb search over bin-grid fundamentals in [f_min, f_max]:
/// score(f0) = mean over k of the max magnitude within +-1 bin of k*f0,
/// harmonics above max_line skipped. Ties go to the lower fundamental;
/// returns (0, 0) when the best score is below twice the band median.
ShaftEstimate estimate_shaft_frequency(const DemonSpectrum& spectrum, double f_min_hz,
                                       double f_max_hz, int n_harmonics,
                                       double max_line_hz = 100.0);

/// Blade count maximizing the magnitude within +-1 bin of count * shaft.
/// Ties go to the smaller count; falls back to b_min when nothing stands
/// twice above the median.
int estimate_blade_count(const DemonSpectrum& spectrum, double shaft_freq_hz, int b_min,
                         int b_max, double max_line_hz = 100.0);

SalientFeatures extract_salient_features(const DemonSpectrum& spectrum,
                                         const FeatureConfig& config = {});

FeatureStats fit_feature_stats(std::span<const SalientFeatures> features);

/// Z-score per dimension; a zero stddev is treated as 1.
std::array<double, 5> normalize_features(const SalientFeatures& features,
                                         const FeatureStats& stats);

/// One labeled recording's features. label_fine is -1 when absent.
struct FeatureRow {
    std::string path;
    int label_coarse = -1;
    int label_fine = -1;
    SalientFeatures features;
};

void write_feature_csv(std::span<const FeatureRow> rows, const std::filesystem::path& path);
std::vector<FeatureRow> read_feature_csv(const std::filesystem::path& path);

/// Header of the feature CSV; readers use it to tell feature tables from
/// plain dataset manifests.
inline constexpr const char* kFeatureCsvHeader =
    "path,label_coarse,label_fine,blade_hz,shaft_hz,avg_strength,max_shaft_hz,max_blade_hz";

} // namespace demonsonar
