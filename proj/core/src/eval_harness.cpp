#include "demonsonar/eval_harness.hpp"

#include "demonsonar/errors.hpp"
#include "demonsonar/pgm.hpp"
#include "demonsonar/prng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace demonsonar {

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    std::string line;
    if (!std::getline(in, line) || line != kManifestCsvHeader) {
        throw FormatError("'" + path.string() + "': missing manifest header '" +
                          std::string(kManifestCsvHeader) + "'");
    }
    DatasetManifest manifest;
    manifest.root = path.parent_path();
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string p, coarse, fine;
        if (!std::getline(ss, p, ',') || !std::getline(ss, coarse, ',') ||
            !std::getline(ss, fine, ',')) {
            throw FormatError("'" + path.string() + "' line " + std::to_string(line_no) +
                              ": expected 3 fields");
        }
        ManifestRow row;
        row.path = p;
        try {
            row.label_coarse = std::stoi(coarse);
            row.label_fine = std::stoi(fine);
        } catch (const std::exception&) {
            throw FormatError("'" + path.string() + "' line " + std::to_string(line_no) +
                              ": unparseable label");
        }
        manifest.rows.push_back(std::move(row));
    }
    return manifest;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out << kManifestCsvHeader << "\n";
    for (const ManifestRow& row : manifest.rows) {
        out << row.path << "," << row.label_coarse << "," << row.label_fine << "\n";
    }
    out.flush();
    if (!out) {
        throw IoError("failed while writing '" + path.string() + "'");
    }
}

SplitIndices split_indices(std::span<const int> labels, double train_ratio, std::uint64_t seed) {
    if (!(train_ratio > 0.0 && train_ratio < 1.0)) {
        throw ContractError("split: train_ratio must be in (0, 1)");
    }
    std::map<int, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        by_label[labels[i]].push_back(i);
    }
    if (by_label.empty()) {
        throw ContractError("split: no rows");
    }
    for (const auto& [label, rows] : by_label) {
        if (rows.size() < 2) {
            throw ContractError("split: class " + std::to_string(label) + " has only " +
                                std::to_string(rows.size()) + " sample(s); need at least 2");
        }
    }

    Xoshiro256ss rng(seed);
    SplitIndices split;
    for (auto& [label, rows] : by_label) {
        rng.shuffle(rows);
        const std::size_t n = rows.size();
        // the epsilon keeps floor() exact when n*(1-ratio) is an integer
        auto n_val = static_cast<std::size_t>(
            std::floor(static_cast<double>(n) * (1.0 - train_ratio) + 1e-9));
        n_val = std::min(n - 1, std::max<std::size_t>(1, n_val));
        split.val.insert(split.val.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_val));
        split.train.insert(split.train.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_val), rows.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.val.begin(), split.val.end());
    return split;
}

SplitIndices split_dataset(std::span<const FeatureRow> rows, double train_ratio,
                           std::uint64_t seed) {
    std::vector<int> labels;
    labels.reserve(rows.size());
    for (const FeatureRow& row : rows) {
        labels.push_back(row.label_coarse);
    }
    return split_indices(labels, train_ratio, seed);
}

SplitIndices split_dataset(const DatasetManifest& manifest, double train_ratio,
                           std::uint64_t seed) {
    std::vector<int> labels;
    labels.reserve(manifest.rows.size());
    for (const ManifestRow& row : manifest.rows) {
        labels.push_back(row.label_coarse);
    }
    return split_indices(labels, train_ratio, seed);
}

std::size_t ConfusionMatrix::total() const {
    std::size_t sum = 0;
    for (const auto& row : counts) {
        for (std::size_t c : row) {
            sum += c;
        }
    }
    return sum;
}

std::size_t ConfusionMatrix::row_sum(std::size_t r) const {
    std::size_t sum = 0;
    for (std::size_t c : counts[r]) {
        sum += c;
    }
    return sum;
}

Metrics compute_metrics(const ConfusionMatrix& confusion) {
    Metrics metrics;
    metrics.confusion = confusion;
    const std::size_t n = confusion.n_true();
    metrics.per_class_accuracy.resize(n, 0.0);
    std::size_t trace = 0;
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t row_total = confusion.row_sum(r);
        const std::size_t diag = r < confusion.n_pred() ? confusion.counts[r][r] : 0;
        trace += diag;
        metrics.per_class_accuracy[r] =
            row_total > 0 ? static_cast<double>(diag) / static_cast<double>(row_total) : 0.0;
    }
    const std::size_t total = confusion.total();
    metrics.overall_accuracy =
        total > 0 ? static_cast<double>(trace) / static_cast<double>(total) : 0.0;
    return metrics;
}

EvalResult evaluate(const CascadeModel& cascade, std::span<const FeatureRow> rows) {
    if (rows.empty()) {
        throw ContractError("evaluate: no rows");
    }
    const std::size_t n_coarse = cascade.coarse.output_dim();
    ConfusionMatrix coarse;
    coarse.counts.assign(n_coarse, std::vector<std::size_t>(n_coarse, 0));

    const bool has_fine = cascade.fine.has_value() && cascade.refine_category >= 0;
    const std::size_t n_fine = has_fine ? cascade.fine->output_dim() : 0;
    ConfusionMatrix fine;
    if (has_fine) {
        // one extra column for refine-category rows the coarse net misroutes
        fine.counts.assign(n_fine, std::vector<std::size_t>(n_fine + 1, 0));
    }

    for (const FeatureRow& row : rows) {
        if (row.label_coarse < 0 || static_cast<std::size_t>(row.label_coarse) >= n_coarse) {
            throw ContractError("evaluate: coarse label " + std::to_string(row.label_coarse) +
                                " out of range ('" + row.path + "')");
        }
        const Prediction prediction = cascade_predict(cascade, row.features);
        coarse.counts[static_cast<std::size_t>(row.label_coarse)]
                     [static_cast<std::size_t>(prediction.coarse_class)] += 1;

        if (has_fine && row.label_coarse == cascade.refine_category && row.label_fine >= 0) {
            if (static_cast<std::size_t>(row.label_fine) >= n_fine) {
                throw ContractError("evaluate: fine label " + std::to_string(row.label_fine) +
                                    " out of range ('" + row.path + "')");
            }
            const std::size_t column = prediction.fine_class.has_value()
                                           ? static_cast<std::size_t>(*prediction.fine_class)
                                           : n_fine; // not routed to the fine net
            fine.counts[static_cast<std::size_t>(row.label_fine)][column] += 1;
        }
    }

    EvalResult result;
    result.coarse = compute_metrics(coarse);
    if (has_fine) {
        result.fine = compute_metrics(fine);
    }
    return result;
}

void write_report(const Metrics& metrics, const std::filesystem::path& prefix) {
    const std::size_t n_true = metrics.confusion.n_true();
    const std::size_t n_pred = metrics.confusion.n_pred();
    const bool has_bucket = n_pred == n_true + 1;

    // confusion counts
    {
        const std::filesystem::path path = prefix.string() + "_confusion.csv";
        std::ofstream out(path, std::ios::trunc);
        if (!out) {
            throw IoError("cannot open '" + path.string() + "' for writing");
        }
        out << "true\\pred";
        for (std::size_t c = 0; c < n_pred; ++c) {
            if (has_bucket && c == n_pred - 1) {
                out << ",not_routed";
            } else {
                out << "," << c;
            }
        }
        out << "\n";
        for (std::size_t r = 0; r < n_true; ++r) {
            out << r;
            for (std::size_t c = 0; c < n_pred; ++c) {
                out << "," << metrics.confusion.counts[r][c];
            }
            out << "\n";
        }
        out.flush();
        if (!out) {
            throw IoError("failed while writing '" + path.string() + "'");
        }
    }

    // per-class and overall accuracy
    {
        const std::filesystem::path path = prefix.string() + "_metrics.csv";
        std::ofstream out(path, std::ios::trunc);
        if (!out) {
            throw IoError("cannot open '" + path.string() + "' for writing");
        }
        out << "class,accuracy\n";
        for (std::size_t r = 0; r < n_true; ++r) {
            out << r << "," << format_double(metrics.per_class_accuracy[r]) << "\n";
        }
        out << "overall," << format_double(metrics.overall_accuracy) << "\n";
        for (std::size_t r = 0; r < n_true; ++r) {
            if (metrics.confusion.row_sum(r) == 0) {
                out << "# class " << r << ": no rows\n";
            }
        }
        out.flush();
        if (!out) {
            throw IoError("failed while writing '" + path.string() + "'");
        }
    }

    // row-normalized heatmap, 255 = row max
    {
        std::vector<std::vector<std::uint8_t>> pixels(n_true, std::vector<std::uint8_t>(n_pred, 0));
        for (std::size_t r = 0; r < n_true; ++r) {
            std::size_t row_max = 0;
            for (std::size_t c = 0; c < n_pred; ++c) {
                row_max = std::max(row_max, metrics.confusion.counts[r][c]);
            }
            if (row_max == 0) {
                continue;
            }
            for (std::size_t c = 0; c < n_pred; ++c) {
                pixels[r][c] = static_cast<std::uint8_t>(std::lround(
                    255.0 * static_cast<double>(metrics.confusion.counts[r][c]) /
                    static_cast<double>(row_max)));
            }
        }
        write_pgm(prefix.string() + "_confusion.pgm", pixels);
    }
}

SweepReport sweep_hidden_widths(std::span<const FeatureRow> rows,
                                std::span<const std::size_t> widths, const TrainConfig& base,
                                const CascadeConfig& cascade_config) {
    if (widths.empty()) {
        throw ContractError("sweep: widths list is empty");
    }
    SweepReport report;
    const SplitIndices split = split_dataset(rows, cascade_config.train_ratio, base.seed);
    report.val_indices = split.val;

    std::vector<FeatureRow> val_rows;
    val_rows.reserve(split.val.size());
    for (std::size_t idx : split.val) {
        val_rows.push_back(rows[idx]);
    }

    for (std::size_t width : widths) {
        TrainConfig config = base;
        config.hidden_width = width;
        const CascadeModel cascade = train_cascade(rows, config, cascade_config);
        SweepEntry entry;
        entry.hidden_width = width;
        entry.result = evaluate(cascade, val_rows);
        report.entries.push_back(std::move(entry));
    }
    return report;
}

void write_sweep_report(const SweepReport& report, const std::filesystem::path& path) {
    if (report.entries.empty()) {
        throw ContractError("write_sweep_report: empty report");
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    const std::size_t n_coarse = report.entries.front().result.coarse.per_class_accuracy.size();
    const std::size_t n_fine = report.entries.front().result.fine
                                   ? report.entries.front().result.fine->per_class_accuracy.size()
                                   : 0;
    out << "hidden_width,coarse_overall";
    for (std::size_t c = 0; c < n_coarse; ++c) {
        out << ",coarse_acc_" << c;
    }
    if (n_fine > 0) {
        out << ",fine_overall";
        for (std::size_t c = 0; c < n_fine; ++c) {
            out << ",fine_acc_" << c;
        }
    }
    out << "\n";
    for (const SweepEntry& entry : report.entries) {
        out << entry.hidden_width << "," << format_double(entry.result.coarse.overall_accuracy);
        for (double acc : entry.result.coarse.per_class_accuracy) {
            out << "," << format_double(acc);
        }
        if (n_fine > 0) {
            if (entry.result.fine) {
                out << "," << format_double(entry.result.fine->overall_accuracy);
                for (double acc : entry.result.fine->per_class_accuracy) {
                    out << "," << format_double(acc);
                }
            } else {
                out << ",";
                for (std::size_t c = 0; c < n_fine; ++c) {
                    out << ",";
                }
            }
        }
        out << "\n";
    }
    out.flush();
    if (!out) {
        throw IoError("failed while writing '" + path.string() + "'");
    }
}

} // namespace demonsonar
