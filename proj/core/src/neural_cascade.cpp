#include "demonsonar/neural_cascade.hpp"

#include "demonsonar/errors.hpp"
#include "demonsonar/eval_harness.hpp"
#include "demonsonar/prng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace demonsonar {

namespace {

using nlohmann::json;

constexpr int kModelVersion = 1;

void validate_dims(const std::vector<std::size_t>& dims) {
    if (dims.size() < 2) {
        throw ContractError("init_mlp: need at least input and output dims");
    }
    for (std::size_t d : dims) {
        if (d == 0) {
            throw ContractError("init_mlp: zero-sized layer");
        }
    }
}

std::vector<double> softmax(std::vector<double> z) {
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (double& v : z) {
        v /= sum;
    }
    return z;
}

std::vector<double> affine(const std::vector<double>& w, const std::vector<double>& b,
                           std::span<const double> x) {
    const std::size_t out = b.size();
    const std::size_t in = x.size();
    std::vector<double> z(out);
    for (std::size_t i = 0; i < out; ++i) {
        double acc = b[i];
        const double* row = w.data() + i * in;
        for (std::size_t j = 0; j < in; ++j) {
            acc += row[j] * x[j];
        }
        z[i] = acc;
    }
    return z;
}

int argmax(std::span<const double> v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

MlpGradients zero_gradients(const MlpModel& model) {
    MlpGradients g;
    g.weights.reserve(model.weights.size());
    g.biases.reserve(model.biases.size());
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        g.weights.emplace_back(model.weights[l].size(), 0.0);
        g.biases.emplace_back(model.biases[l].size(), 0.0);
    }
    return g;
}

json net_to_json(const MlpModel& net) {
    json j;
    j["layer_dims"] = net.layer_dims;
    json weights = json::array();
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        const std::size_t out = net.layer_dims[l + 1];
        const std::size_t in = net.layer_dims[l];
        json layer = json::array();
        for (std::size_t i = 0; i < out; ++i) {
            json row = json::array();
            for (std::size_t k = 0; k < in; ++k) {
                row.push_back(net.weights[l][i * in + k]);
            }
            layer.push_back(std::move(row));
        }
        weights.push_back(std::move(layer));
    }
    j["weights"] = std::move(weights);
    j["biases"] = net.biases;
    return j;
}

double finite_number(const json& v, const std::string& where) {
    if (!v.is_number()) {
        throw FormatError(where + ": expected a number");
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
        throw FormatError(where + ": non-finite parameter");
    }
    return d;
}

MlpModel net_from_json(const json& j, const std::string& name) {
    if (!j.is_object() || !j.contains("layer_dims") || !j.contains("weights") ||
        !j.contains("biases")) {
        throw FormatError(name + ": missing layer_dims/weights/biases");
    }
    MlpModel net;
    for (const json& d : j.at("layer_dims")) {
        if (!d.is_number_unsigned() || d.get<std::size_t>() == 0) {
            throw FormatError(name + ".layer_dims: entries must be positive integers");
        }
        net.layer_dims.push_back(d.get<std::size_t>());
    }
    if (net.layer_dims.size() < 2) {
        throw FormatError(name + ".layer_dims: need at least 2 entries");
    }
    const std::size_t n_layers = net.layer_dims.size() - 1;
    const json& weights = j.at("weights");
    const json& biases = j.at("biases");
    if (weights.size() != n_layers || biases.size() != n_layers) {
        throw FormatError(name + ": expected " + std::to_string(n_layers) +
                          " weight/bias layers, got " + std::to_string(weights.size()) + "/" +
                          std::to_string(biases.size()));
    }
    for (std::size_t l = 0; l < n_layers; ++l) {
        const std::size_t out = net.layer_dims[l + 1];
        const std::size_t in = net.layer_dims[l];
        const std::string wname = name + ".weights[" + std::to_string(l) + "]";
        const json& layer = weights.at(l);
        if (!layer.is_array() || layer.size() != out) {
            throw FormatError(wname + ": expected " + std::to_string(out) + " rows, got " +
                              std::to_string(layer.size()));
        }
        std::vector<double> flat;
        flat.reserve(out * in);
        for (std::size_t i = 0; i < out; ++i) {
            const json& row = layer.at(i);
            if (!row.is_array() || row.size() != in) {
                throw FormatError(wname + ": row " + std::to_string(i) + " expected " +
                                  std::to_string(in) + " columns, got " +
                                  std::to_string(row.size()));
            }
            for (std::size_t k = 0; k < in; ++k) {
                flat.push_back(finite_number(row.at(k), wname));
            }
        }
        net.weights.push_back(std::move(flat));

        const std::string bname = name + ".biases[" + std::to_string(l) + "]";
        const json& brow = biases.at(l);
        if (!brow.is_array() || brow.size() != out) {
            throw FormatError(bname + ": expected " + std::to_string(out) + " entries, got " +
                              std::to_string(brow.size()));
        }
        std::vector<double> b;
        b.reserve(out);
        for (std::size_t i = 0; i < out; ++i) {
            b.push_back(finite_number(brow.at(i), bname));
        }
        net.biases.push_back(std::move(b));
    }
    return net;
}

} // namespace

MlpModel init_mlp(const std::vector<std::size_t>& layer_dims, std::uint64_t seed) {
    validate_dims(layer_dims);
    MlpModel model;
    model.layer_dims = layer_dims;
    Xoshiro256ss rng(seed);
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const std::size_t in = layer_dims[l];
        const std::size_t out = layer_dims[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        std::vector<double> w(out * in);
        for (double& v : w) {
            v = limit * (2.0 * rng.uniform01() - 1.0);
        }
        model.weights.push_back(std::move(w));
        model.biases.emplace_back(out, 0.0);
    }
    return model;
}

std::vector<double> forward(const MlpModel& model, std::span<const double> x) {
    if (x.size() != model.input_dim()) {
        throw ContractError("forward: input has " + std::to_string(x.size()) +
                            " dims, model expects " + std::to_string(model.input_dim()));
    }
    for (double v : x) {
        if (!std::isfinite(v)) {
            throw ValidationError("forward: non-finite input");
        }
    }
    std::vector<double> a(x.begin(), x.end());
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        std::vector<double> z = affine(model.weights[l], model.biases[l], a);
        if (l + 1 == model.weights.size()) {
            a = softmax(std::move(z));
        } else {
            for (double& v : z) {
                v = v > 0.0 ? v : 0.0;
            }
            a = std::move(z);
        }
    }
    return a;
}

std::pair<double, MlpGradients> loss_and_gradients(const MlpModel& model,
                                                   std::span<const Example> batch) {
    if (batch.empty()) {
        throw ContractError("loss_and_gradients: batch is empty");
    }
    const std::size_t n_layers = model.weights.size();
    MlpGradients grads = zero_gradients(model);
    double loss = 0.0;

    std::vector<std::vector<double>> activations(n_layers + 1);
    std::vector<std::vector<double>> pre_acts(n_layers);
    for (const Example& example : batch) {
        if (example.label < 0 || static_cast<std::size_t>(example.label) >= model.output_dim()) {
            throw ContractError("loss_and_gradients: label " + std::to_string(example.label) +
                                " out of range for " + std::to_string(model.output_dim()) +
                                " classes");
        }
        if (example.x.size() != model.input_dim()) {
            throw ContractError("loss_and_gradients: input dim mismatch");
        }

        activations[0].assign(example.x.begin(), example.x.end());
        for (std::size_t l = 0; l < n_layers; ++l) {
            pre_acts[l] = affine(model.weights[l], model.biases[l], activations[l]);
            if (l + 1 == n_layers) {
                activations[l + 1] = softmax(pre_acts[l]);
            } else {
                activations[l + 1] = pre_acts[l];
                for (double& v : activations[l + 1]) {
                    v = v > 0.0 ? v : 0.0;
                }
            }
        }

        const std::vector<double>& probs = activations[n_layers];
        loss -= std::log(probs[static_cast<std::size_t>(example.label)]);

        // softmax + cross-entropy: d(loss)/d(logits) = p - onehot(y)
        std::vector<double> delta = probs;
        delta[static_cast<std::size_t>(example.label)] -= 1.0;
        for (std::size_t l = n_layers; l-- > 0;) {
            const std::vector<double>& a_in = activations[l];
            const std::size_t out = model.layer_dims[l + 1];
            const std::size_t in = model.layer_dims[l];
            for (std::size_t i = 0; i < out; ++i) {
                double* grow = grads.weights[l].data() + i * in;
                for (std::size_t k = 0; k < in; ++k) {
                    grow[k] += delta[i] * a_in[k];
                }
                grads.biases[l][i] += delta[i];
            }
            if (l > 0) {
                std::vector<double> prev(in, 0.0);
                for (std::size_t i = 0; i < out; ++i) {
                    const double* row = model.weights[l].data() + i * in;
                    for (std::size_t k = 0; k < in; ++k) {
                        prev[k] += row[k] * delta[i];
                    }
                }
                for (std::size_t k = 0; k < in; ++k) {
                    prev[k] = pre_acts[l - 1][k] > 0.0 ? prev[k] : 0.0;
                }
                delta = std::move(prev);
            }
        }
    }

    const double inv_n = 1.0 / static_cast<double>(batch.size());
    loss *= inv_n;
    for (std::size_t l = 0; l < n_layers; ++l) {
        for (double& g : grads.weights[l]) {
            g *= inv_n;
        }
        for (double& g : grads.biases[l]) {
            g *= inv_n;
        }
    }
    return {loss, std::move(grads)};
}

double accuracy(const MlpModel& model, std::span<const Example> examples) {
    if (examples.empty()) {
        return 0.0;
    }
    std::size_t hits = 0;
    for (const Example& example : examples) {
        if (argmax(forward(model, example.x)) == example.label) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(examples.size());
}

std::pair<MlpModel, TrainHistory> train(MlpModel model, std::span<const Example> train_set,
                                        std::span<const Example> val_set,
                                        const TrainConfig& config) {
    if (train_set.empty() || val_set.empty()) {
        throw ContractError("train: training and validation sets must be non-empty");
    }
    if (!(config.learning_rate > 0.0) || config.epochs < 1 || config.batch_size < 1) {
        throw ContractError("train: need learning_rate > 0, epochs >= 1, batch_size >= 1");
    }

    Xoshiro256ss rng(config.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    TrainHistory history;
    MlpModel best = model;
    double best_accuracy = -1.0;

    std::vector<Example> batch;
    batch.reserve(config.batch_size);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) {
                batch.push_back(train_set[order[i]]);
            }
            auto [loss, grads] = loss_and_gradients(model, batch);
            epoch_loss += loss * static_cast<double>(batch.size());
            for (std::size_t l = 0; l < model.weights.size(); ++l) {
                for (std::size_t i = 0; i < model.weights[l].size(); ++i) {
                    model.weights[l][i] -= config.learning_rate * grads.weights[l][i];
                }
                for (std::size_t i = 0; i < model.biases[l].size(); ++i) {
                    model.biases[l][i] -= config.learning_rate * grads.biases[l][i];
                }
            }
        }
        history.train_loss.push_back(epoch_loss / static_cast<double>(train_set.size()));
        const double val_acc = accuracy(model, val_set);
        history.val_accuracy.push_back(val_acc);
        if (val_acc > best_accuracy) { // ties keep the earliest epoch
            best_accuracy = val_acc;
            best = model;
            history.best_epoch = epoch;
        }
    }
    return {std::move(best), std::move(history)};
}

Prediction cascade_predict(const CascadeModel& cascade, const SalientFeatures& features) {
    const std::array<double, 5> x = normalize_features(features, cascade.stats);
    Prediction prediction;
    prediction.coarse_probs = forward(cascade.coarse, x);
    prediction.coarse_class = argmax(prediction.coarse_probs);
    if (cascade.fine.has_value() && prediction.coarse_class == cascade.refine_category) {
        // the fine net is trained in its own normalization frame
        const std::array<double, 5> xf = normalize_features(features, cascade.stats_for_fine());
        prediction.fine_probs = forward(*cascade.fine, xf);
        prediction.fine_class = argmax(*prediction.fine_probs);
    }
    return prediction;
}

CascadeModel train_cascade(std::span<const FeatureRow> rows, const TrainConfig& config,
                           const CascadeConfig& cascade_config) {
    if (rows.empty()) {
        throw ContractError("train_cascade: no rows");
    }
    if (cascade_config.coarse_classes < 2) {
        throw ContractError("train_cascade: need at least 2 coarse classes");
    }
    std::vector<int> coarse_labels;
    coarse_labels.reserve(rows.size());
    for (const FeatureRow& row : rows) {
        if (row.label_coarse < 0 || row.label_coarse >= cascade_config.coarse_classes) {
            throw ContractError("train_cascade: coarse label " + std::to_string(row.label_coarse) +
                                " out of range ('" + row.path + "')");
        }
        coarse_labels.push_back(row.label_coarse);
    }

    const SplitIndices split =
        split_indices(coarse_labels, cascade_config.train_ratio, config.seed);

    std::vector<SalientFeatures> train_features;
    train_features.reserve(split.train.size());
    for (std::size_t idx : split.train) {
        train_features.push_back(rows[idx].features);
    }
    CascadeModel cascade;
    cascade.stats = fit_feature_stats(train_features);

    const auto to_examples = [](std::span<const FeatureRow> all,
                                const std::vector<std::size_t>& indices,
                                const FeatureStats& stats, bool fine) {
        std::vector<Example> examples;
        examples.reserve(indices.size());
        for (std::size_t idx : indices) {
            const std::array<double, 5> x = normalize_features(all[idx].features, stats);
            examples.push_back({{x.begin(), x.end()},
                                fine ? all[idx].label_fine : all[idx].label_coarse});
        }
        return examples;
    };

    const std::vector<Example> coarse_train = to_examples(rows, split.train, cascade.stats, false);
    const std::vector<Example> coarse_val = to_examples(rows, split.val, cascade.stats, false);

    TrainConfig coarse_config = config;
    coarse_config.seed = derive_seed(config.seed, 2);
    MlpModel coarse_init = init_mlp(
        {5, config.hidden_width, static_cast<std::size_t>(cascade_config.coarse_classes)},
        derive_seed(config.seed, 1));
    auto [coarse_best, coarse_history] =
        train(std::move(coarse_init), coarse_train, coarse_val, coarse_config);
    cascade.coarse = std::move(coarse_best);

    const bool refine_enabled =
        cascade_config.refine_category >= 0 && cascade_config.fine_classes > 0;
    cascade.refine_category = refine_enabled ? cascade_config.refine_category : -1;
    if (!refine_enabled) {
        return cascade;
    }
    if (cascade_config.refine_category >= cascade_config.coarse_classes) {
        throw ContractError("train_cascade: refine category " +
                            std::to_string(cascade_config.refine_category) +
                            " is not a coarse class");
    }

    std::vector<FeatureRow> refine_rows;
    for (const FeatureRow& row : rows) {
        if (row.label_coarse != cascade_config.refine_category) {
            continue;
        }
        if (row.label_fine < 0) {
            throw ContractError("train_cascade: row '" + row.path +
                                "' is in the refine category but has no fine label");
        }
        if (row.label_fine >= cascade_config.fine_classes) {
            throw ContractError("train_cascade: fine label " + std::to_string(row.label_fine) +
                                " out of range ('" + row.path + "')");
        }
        refine_rows.push_back(row);
    }
    if (refine_rows.empty()) {
        throw ContractError("train_cascade: refinement is enabled but no rows carry coarse label " +
                            std::to_string(cascade_config.refine_category));
    }

    std::vector<std::size_t> fine_counts(static_cast<std::size_t>(cascade_config.fine_classes), 0);
    std::vector<int> fine_labels;
    fine_labels.reserve(refine_rows.size());
    for (const FeatureRow& row : refine_rows) {
        ++fine_counts[static_cast<std::size_t>(row.label_fine)];
        fine_labels.push_back(row.label_fine);
    }
    std::string deficient;
    for (std::size_t c = 0; c < fine_counts.size(); ++c) {
        if (fine_counts[c] < 2) {
            deficient += (deficient.empty() ? "" : ", ") + std::to_string(c);
        }
    }
    if (!deficient.empty()) {
        throw ContractError("train_cascade: fine classes with fewer than 2 samples: " + deficient);
    }

    const SplitIndices fine_split =
        split_indices(fine_labels, cascade_config.train_ratio, derive_seed(config.seed, 3));

    std::vector<SalientFeatures> fine_train_features;
    fine_train_features.reserve(fine_split.train.size());
    for (std::size_t idx : fine_split.train) {
        fine_train_features.push_back(refine_rows[idx].features);
    }
    cascade.fine_stats = fit_feature_stats(fine_train_features);

    const std::vector<Example> fine_train =
        to_examples(refine_rows, fine_split.train, *cascade.fine_stats, true);
    const std::vector<Example> fine_val =
        to_examples(refine_rows, fine_split.val, *cascade.fine_stats, true);

    TrainConfig fine_config = config;
    fine_config.seed = derive_seed(config.seed, 5);
    MlpModel fine_init = init_mlp(
        {5, config.hidden_width, static_cast<std::size_t>(cascade_config.fine_classes)},
        derive_seed(config.seed, 4));
    auto [fine_best, fine_history] = train(std::move(fine_init), fine_train, fine_val, fine_config);
    cascade.fine = std::move(fine_best);
    return cascade;
}

void save_model(const CascadeModel& cascade, const std::filesystem::path& path) {
    const auto check_finite = [](const MlpModel& net, const std::string& name) {
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            for (double w : net.weights[l]) {
                if (!std::isfinite(w)) {
                    throw ValidationError("save_model: non-finite value in " + name + ".weights[" +
                                          std::to_string(l) + "]");
                }
            }
            for (double b : net.biases[l]) {
                if (!std::isfinite(b)) {
                    throw ValidationError("save_model: non-finite value in " + name + ".biases[" +
                                          std::to_string(l) + "]");
                }
            }
        }
    };
    check_finite(cascade.coarse, "coarse");
    if (cascade.fine) {
        check_finite(*cascade.fine, "fine");
    }

    json j;
    j["version"] = kModelVersion;
    j["refine_category"] = cascade.refine_category;
    j["feature_stats"] = {{"means", cascade.stats.mean}, {"stds", cascade.stats.stddev}};
    j["coarse"] = net_to_json(cascade.coarse);
    if (cascade.fine) {
        json fine = net_to_json(*cascade.fine);
        if (cascade.fine_stats) {
            fine["feature_stats"] = {{"means", cascade.fine_stats->mean},
                                     {"stds", cascade.fine_stats->stddev}};
        }
        j["fine"] = std::move(fine);
    } else {
        j["fine"] = json(nullptr);
    }

    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out << j.dump(2) << "\n";
    out.flush();
    if (!out) {
        throw IoError("failed while writing '" + path.string() + "'");
    }
}

CascadeModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError("'" + path.string() + "': " + e.what());
    }

    if (!j.contains("version") || !j.at("version").is_number_integer()) {
        throw FormatError("'" + path.string() + "': missing version field");
    }
    if (j.at("version").get<int>() != kModelVersion) {
        throw FormatError("'" + path.string() + "': unsupported version " +
                          j.at("version").dump() + ", expected " + std::to_string(kModelVersion));
    }

    CascadeModel cascade;
    if (!j.contains("refine_category") || !j.at("refine_category").is_number_integer()) {
        throw FormatError("'" + path.string() + "': missing refine_category field");
    }
    cascade.refine_category = j.at("refine_category").get<int>();

    const auto stats_from_json = [&](const json& stats, const std::string& where) {
        if (!stats.contains("means") || !stats.contains("stds") || stats.at("means").size() != 5 ||
            stats.at("stds").size() != 5) {
            throw FormatError("'" + path.string() + "': " + where + " needs 5 means and 5 stds");
        }
        FeatureStats out;
        for (std::size_t d = 0; d < 5; ++d) {
            out.mean[d] = finite_number(stats.at("means").at(d), where + ".means");
            out.stddev[d] = finite_number(stats.at("stds").at(d), where + ".stds");
        }
        return out;
    };
    if (!j.contains("feature_stats")) {
        throw FormatError("'" + path.string() + "': missing feature_stats field");
    }
    cascade.stats = stats_from_json(j.at("feature_stats"), "feature_stats");

    if (!j.contains("coarse")) {
        throw FormatError("'" + path.string() + "': missing coarse net");
    }
    cascade.coarse = net_from_json(j.at("coarse"), "coarse");
    if (j.contains("fine") && !j.at("fine").is_null()) {
        cascade.fine = net_from_json(j.at("fine"), "fine");
        if (j.at("fine").contains("feature_stats")) {
            cascade.fine_stats = stats_from_json(j.at("fine").at("feature_stats"),
                                                 "fine.feature_stats");
        }
    }
    if (cascade.refine_category >= 0 && !cascade.fine) {
        throw FormatError("'" + path.string() +
                          "': refine_category is set but the fine net is missing");
    }
    return cascade;
}

} // namespace demonsonar
