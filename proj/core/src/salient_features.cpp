#include "demonsonar/salient_features.hpp"

#include "demonsonar/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace demonsonar {

namespace {

std::size_t last_analysis_bin(const DemonSpectrum& spectrum, double max_line_hz) {
    if (spectrum.magnitudes.empty() || spectrum.bin_hz <= 0.0) {
        return 0;
    }
    const auto cap = static_cast<std::size_t>(
        std::floor(max_line_hz / spectrum.bin_hz + 1e-9));
    return std::min(spectrum.magnitudes.size() - 1, cap);
}

/// Median over the non-DC bins first..last (inclusive, clamped); 0 when the
/// range is degenerate.
double bin_range_median(const DemonSpectrum& spectrum, std::size_t first, std::size_t last) {
    first = std::max<std::size_t>(first, 1);
    last = std::min(last, spectrum.magnitudes.empty() ? 0 : spectrum.magnitudes.size() - 1);
    if (last < first) {
        return 0.0;
    }
    std::vector<double> band(spectrum.magnitudes.begin() + static_cast<std::ptrdiff_t>(first),
                             spectrum.magnitudes.begin() + static_cast<std::ptrdiff_t>(last) + 1);
    std::sort(band.begin(), band.end());
    const std::size_t n = band.size();
    return n % 2 == 1 ? band[n / 2] : 0.5 * (band[n / 2 - 1] + band[n / 2]);
}

/// Median over the non-DC bins of the whole analysis band.
double band_median(const DemonSpectrum& spectrum, double max_line_hz) {
    return bin_range_median(spectrum, 1, last_analysis_bin(spectrum, max_line_hz));
}

/// Max magnitude within +-1 bin of `bin`, clamped to the spectrum.
double magnitude_near(const DemonSpectrum& spectrum, std::size_t bin) {
    const std::size_t lo = bin > 0 ? bin - 1 : 0;
    const std::size_t hi = std::min(bin + 1, spectrum.magnitudes.size() - 1);
    double best = 0.0;
    for (std::size_t b = lo; b <= hi && b < spectrum.magnitudes.size(); ++b) {
        best = std::max(best, spectrum.magnitudes[b]);
    }
    return best;
}

} // namespace

std::vector<Peak> detect_peaks(const DemonSpectrum& spectrum, double k, double max_line_hz) {
    if (!(k > 0.0)) {
        throw ContractError("detect_peaks: threshold multiplier must be positive");
    }
    std::vector<Peak> peaks;
    const std::size_t last = last_analysis_bin(spectrum, max_line_hz);
    if (last < 1) {
        return peaks;
    }
    const double threshold = k * band_median(spectrum, max_line_hz);
    for (std::size_t b = 1; b <= last; ++b) {
        const double m = spectrum.magnitudes[b];
        if (!(m > threshold)) {
            continue;
        }
        const double left = spectrum.magnitudes[b - 1];
        const double right = b + 1 < spectrum.magnitudes.size() ? spectrum.magnitudes[b + 1] : 0.0;
        if (m > left && m > right) {
            peaks.push_back({static_cast<double>(b) * spectrum.bin_hz, m, b});
        }
    }
    return peaks;
}

ShaftEstimate estimate_shaft_frequency(const DemonSpectrum& spectrum, double f_min_hz,
                                       double f_max_hz, int n_harmonics, double max_line_hz) {
    if (!(0.0 < f_min_hz && f_min_hz < f_max_hz && f_max_hz <= max_line_hz)) {
        throw ContractError("estimate_shaft_frequency: need 0 < f_min < f_max <= max_line");
    }
    if (n_harmonics < 3) {
        throw ContractError("estimate_shaft_frequency: need at least 3 harmonics");
    }
    const std::size_t last = last_analysis_bin(spectrum, max_line_hz);
    if (last < 1) {
        return {0.0, 0.0};
    }

    const auto first_candidate = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(std::ceil(f_min_hz / spectrum.bin_hz - 1e-9))));
    const auto last_candidate = static_cast<std::size_t>(
        std::floor(f_max_hz / spectrum.bin_hz + 1e-9));

    double best_score = -1.0;
    std::size_t best_bin = 0;
    for (std::size_t b0 = first_candidate;
         b0 <= last_candidate && b0 < spectrum.magnitudes.size(); ++b0) {
        double acc = 0.0;
        int used = 0;
        for (int k = 1; k <= n_harmonics; ++k) {
            const std::size_t harmonic = b0 * static_cast<std::size_t>(k);
            if (static_cast<double>(harmonic) * spectrum.bin_hz > max_line_hz + 1e-9) {
                break; // harmonics above the ceiling are skipped
            }
            acc += magnitude_near(spectrum, harmonic);
            ++used;
        }
        if (used == 0) {
            continue;
        }
        const double score = acc / used;
        if (score > best_score) { // ties keep the earlier, lower fundamental
            best_score = score;
            best_bin = b0;
        }
    }

    // Compare against the floor of the band the comb actually searched; the
    // envelope floor is not flat across the full analysis band.
    if (best_bin == 0 || best_score <= 0.0 ||
        best_score < 2.0 * bin_range_median(spectrum, first_candidate, last_candidate)) {
        return {0.0, 0.0};
    }
    return {static_cast<double>(best_bin) * spectrum.bin_hz, best_score};
}

int estimate_blade_count(const DemonSpectrum& spectrum, double shaft_freq_hz, int b_min,
                         int b_max, double max_line_hz) {
    if (!(shaft_freq_hz > 0.0)) {
        throw ContractError("estimate_blade_count: shaft frequency must be positive");
    }
    if (!(2 <= b_min && b_min <= b_max && b_max <= 7)) {
        throw ContractError("estimate_blade_count: blade range must satisfy 2 <= b_min <= b_max <= 7");
    }
    if (spectrum.magnitudes.empty() || spectrum.bin_hz <= 0.0) {
        return b_min;
    }
    double best_mag = -1.0;
    int best_count = b_min;
    for (int b = b_min; b <= b_max; ++b) {
        const auto bin = static_cast<std::size_t>(
            std::llround(b * shaft_freq_hz / spectrum.bin_hz));
        if (bin >= spectrum.magnitudes.size()) {
            break;
        }
        const double m = magnitude_near(spectrum, bin);
        if (m > best_mag) { // ties keep the smaller count
            best_mag = m;
            best_count = b;
        }
    }
    if (best_mag < 2.0 * band_median(spectrum, max_line_hz)) {
        return b_min;
    }
    return best_count;
}

SalientFeatures extract_salient_features(const DemonSpectrum& spectrum,
                                         const FeatureConfig& config) {
    SalientFeatures features;
    const std::size_t last = last_analysis_bin(spectrum, config.max_line_hz);
    if (last < 1) {
        return features;
    }

    const ShaftEstimate shaft = estimate_shaft_frequency(
        spectrum, config.shaft_min_hz, config.shaft_max_hz, config.comb_harmonics,
        config.max_line_hz);
    features.shaft_freq_hz = shaft.shaft_hz;
    if (shaft.shaft_hz > 0.0) {
        const int blades = estimate_blade_count(spectrum, shaft.shaft_hz, config.blade_min,
                                                config.blade_max, config.max_line_hz);
        features.blade_freq_hz = blades * shaft.shaft_hz;
    }

    double sum = 0.0;
    for (std::size_t b = 1; b <= last; ++b) {
        sum += spectrum.magnitudes[b];
    }
    features.avg_strength = sum / static_cast<double>(last);

    // Strongest bin inside the shaft search band.
    const auto shaft_first = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(std::ceil(config.shaft_min_hz / spectrum.bin_hz - 1e-9))));
    const auto shaft_last = std::min(
        last, static_cast<std::size_t>(std::floor(config.shaft_max_hz / spectrum.bin_hz + 1e-9)));
    double best = 0.0;
    for (std::size_t b = shaft_first; b <= shaft_last; ++b) {
        if (spectrum.magnitudes[b] > best) {
            best = spectrum.magnitudes[b];
            features.max_shaft_freq_hz = static_cast<double>(b) * spectrum.bin_hz;
        }
    }

    // Strongest bin strictly above the shaft band, up to the analysis ceiling.
    best = 0.0;
    for (std::size_t b = shaft_last + 1; b <= last; ++b) {
        if (spectrum.magnitudes[b] > best) {
            best = spectrum.magnitudes[b];
            features.max_blade_freq_hz = static_cast<double>(b) * spectrum.bin_hz;
        }
    }
    return features;
}

FeatureStats fit_feature_stats(std::span<const SalientFeatures> features) {
    if (features.size() < 2) {
        throw ContractError("fit_feature_stats: need at least 2 samples, got " +
                            std::to_string(features.size()));
    }
    FeatureStats stats;
    const double n = static_cast<double>(features.size());
    for (const SalientFeatures& f : features) {
        const auto x = f.as_array();
        for (std::size_t d = 0; d < 5; ++d) {
            stats.mean[d] += x[d];
        }
    }
    for (double& m : stats.mean) {
        m /= n;
    }
    for (const SalientFeatures& f : features) {
        const auto x = f.as_array();
        for (std::size_t d = 0; d < 5; ++d) {
            const double delta = x[d] - stats.mean[d];
            stats.stddev[d] += delta * delta;
        }
    }
    for (double& s : stats.stddev) {
        s = std::sqrt(s / n);
    }
    return stats;
}

std::array<double, 5> normalize_features(const SalientFeatures& features,
                                         const FeatureStats& stats) {
    std::array<double, 5> out{};
    const auto x = features.as_array();
    for (std::size_t d = 0; d < 5; ++d) {
        const double sd = stats.stddev[d] > 0.0 ? stats.stddev[d] : 1.0;
        out[d] = (x[d] - stats.mean[d]) / sd;
    }
    return out;
}

void write_feature_csv(std::span<const FeatureRow> rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out << kFeatureCsvHeader << "\n";
    char buf[64];
    for (const FeatureRow& row : rows) {
        out << row.path << "," << row.label_coarse << "," << row.label_fine;
        for (double v : row.features.as_array()) {
            std::snprintf(buf, sizeof(buf), ",%.17g", v);
            out << buf;
        }
        out << "\n";
    }
    out.flush();
    if (!out) {
        throw IoError("failed while writing '" + path.string() + "'");
    }
}

std::vector<FeatureRow> read_feature_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    std::string line;
    if (!std::getline(in, line) || line != kFeatureCsvHeader) {
        throw FormatError("'" + path.string() + "': missing feature CSV header");
    }
    std::vector<FeatureRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) {
            fields.push_back(field);
        }
        if (fields.size() != 8) {
            throw FormatError("'" + path.string() + "' line " + std::to_string(line_no) +
                              ": expected 8 fields, got " + std::to_string(fields.size()));
        }
        FeatureRow row;
        row.path = fields[0];
        try {
            row.label_coarse = std::stoi(fields[1]);
            row.label_fine = std::stoi(fields[2]);
            row.features.blade_freq_hz = std::stod(fields[3]);
            row.features.shaft_freq_hz = std::stod(fields[4]);
            row.features.avg_strength = std::stod(fields[5]);
            row.features.max_shaft_freq_hz = std::stod(fields[6]);
            row.features.max_blade_freq_hz = std::stod(fields[7]);
        } catch (const std::exception&) {
            throw FormatError("'" + path.string() + "' line " + std::to_string(line_no) +
                              ": unparseable number");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace demonsonar
