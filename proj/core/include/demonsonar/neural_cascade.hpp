#pragma once

#include "demonsonar/salient_features.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace demonsonar {

/// Dense feedforward network: ReLU on hidden layers, softmax on the output.
/// weights[l] is row-major (dims[l+1] x dims[l]).
struct MlpModel {
    std::vector<std::size_t> layer_dims;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t output_dim() const { return layer_dims.back(); }
};

/// Parameter gradients with the same shapes as the model they belong to.
struct MlpGradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
};

/// One training sample: an input vector and its class label.
struct Example {
    std::vector<double> x;
    int label = 0;
};

struct TrainConfig {
    double learning_rate = 0.05;
    std::size_t epochs = 500;
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
    std::size_t hidden_width = 12;
};

struct TrainHistory {
    std::vector<double> train_loss;   // per epoch, mean cross-entropy
    std::vector<double> val_accuracy; // per epoch
    std::size_t best_epoch = 0;       // 0-based index into the vectors above
};

/// Coarse categories first; rows whose coarse class equals refine_category
/// are routed to the fine net. refine_category = -1 disables refinement.
struct CascadeConfig {
    int coarse_classes = 5;
    int fine_classes = 10;
    int refine_category = 1;
    double train_ratio = 0.8;
};

struct CascadeModel {
    MlpModel coarse;
    std::optional<MlpModel> fine;
    int refine_category = 1;
    FeatureStats stats;                     // fitted on the coarse training split
    std::optional<FeatureStats> fine_stats; // fitted on the refine training split

    const FeatureStats& stats_for_fine() const { return fine_stats ? *fine_stats : stats; }
};

struct Prediction {
    int coarse_class = 0;
    std::optional<int> fine_class; // present iff coarse_class == refine_category
    std::vector<double> coarse_probs;
    std::optional<std::vector<double>> fine_probs;
};

/// Glorot-uniform weights from a seeded xoshiro stream; zero biases.
MlpModel init_mlp(const std::vector<std::size_t>& layer_dims, std::uint64_t seed);

/// Class probabilities for one (already normalized) input vector.
std::vector<double> forward(const MlpModel& model, std::span<const double> x);

/// Mean cross-entropy over the batch and its exact analytic gradients.
std::pair<double, MlpGradients> loss_and_gradients(const MlpModel& model,
                                                   std::span<const Example> batch);

double accuracy(const MlpModel& model, std::span<const Example> examples);

/// Seeded mini-batch gradient descent; returns the parameter snapshot with
/// the best validation accuracy (earliest epoch on ties).
std::pair<MlpModel, TrainHistory> train(MlpModel model, std::span<const Example> train_set,
                                        std::span<const Example> val_set,
                                        const TrainConfig& config);

Prediction cascade_predict(const CascadeModel& cascade, const SalientFeatures& features);

/// Trains the coarse net on all rows and the fine net on the refine subset,
/// each on its own stratified split derived from config.seed.
CascadeModel train_cascade(std::span<const FeatureRow> rows, const TrainConfig& config,
                           const CascadeConfig& cascade_config = {});

/// Versioned JSON document; round-trip preserves every parameter exactly.
void save_model(const CascadeModel& cascade, const std::filesystem::path& path);
CascadeModel load_model(const std::filesystem::path& path);

} // namespace demonsonar
