#pragma once

#include "demonsonar/neural_cascade.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace demonsonar {

/// One labeled recording in a dataset. label_fine is -1 when absent.
struct ManifestRow {
    std::string path;
    int label_coarse = -1;
    int label_fine = -1;
};

/// Labeled sample index. Relative row paths resolve against `root`
/// (the directory the manifest CSV lives in).
struct DatasetManifest {
    std::vector<ManifestRow> rows;
    std::filesystem::path root;

    std::filesystem::path resolve(const ManifestRow& row) const {
        const std::filesystem::path p(row.path);
        return p.is_absolute() || root.empty() ? p : root / p;
    }
};

inline constexpr const char* kManifestCsvHeader = "path,label_coarse,label_fine";

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

/// Stratified split: per label, rows are shuffled by a seeded PRNG and
/// floor(n * (1 - train_ratio)) of them (at least 1, at most n - 1) go to
/// val. Every label present in the input appears on both sides.
SplitIndices split_indices(std::span<const int> labels, double train_ratio, std::uint64_t seed);

/// Convenience overloads stratifying rows by their coarse label.
SplitIndices split_dataset(std::span<const FeatureRow> rows, double train_ratio,
                           std::uint64_t seed);
SplitIndices split_dataset(const DatasetManifest& manifest, double train_ratio,
                           std::uint64_t seed);

/// Rows are true classes; columns are predictions. The fine-stage matrix
/// carries one extra trailing column counting samples the cascade failed
/// to route to the refine category.
struct ConfusionMatrix {
    std::vector<std::vector<std::size_t>> counts;

    std::size_t n_true() const { return counts.size(); }
    std::size_t n_pred() const { return counts.empty() ? 0 : counts.front().size(); }
    std::size_t total() const;
    std::size_t row_sum(std::size_t r) const;
};

struct Metrics {
    std::vector<double> per_class_accuracy; // recall per true class, 0 for empty rows
    double overall_accuracy = 0.0;          // trace / total
    ConfusionMatrix confusion;
};

Metrics compute_metrics(const ConfusionMatrix& confusion);

struct EvalResult {
    Metrics coarse;
    std::optional<Metrics> fine;
};

/// Coarse metrics over all rows; fine metrics over rows whose TRUE coarse
/// label is the refine category (misrouted rows land in the extra bucket).
EvalResult evaluate(const CascadeModel& cascade, std::span<const FeatureRow> rows);

/// Writes <prefix>_confusion.csv, <prefix>_metrics.csv and a row-normalized
/// <prefix>_confusion.pgm heatmap.
void write_report(const Metrics& metrics, const std::filesystem::path& prefix);

struct SweepEntry {
    std::size_t hidden_width = 0;
    EvalResult result;
};

struct SweepReport {
    std::vector<SweepEntry> entries;
    std::vector<std::size_t> val_indices; // shared across all widths
};

/// Trains one cascade per hidden width on the identical split (the split
/// depends only on labels and seed) and evaluates each on the shared
/// validation rows.
SweepReport sweep_hidden_widths(std::span<const FeatureRow> rows,
                                std::span<const std::size_t> widths, const TrainConfig& base,
                                const CascadeConfig& cascade_config = {});

/// One CSV row per width: overall and per-class accuracies.
void write_sweep_report(const SweepReport& report, const std::filesystem::path& path);

} // namespace demonsonar
