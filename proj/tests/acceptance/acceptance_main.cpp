// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Each criterion pins its seeds so a passing build stays
// passing.

#include "demonsonar/audio_io.hpp"
#include "demonsonar/demon.hpp"
#include "demonsonar/dsp_core.hpp"
#include "demonsonar/eval_harness.hpp"
#include "demonsonar/neural_cascade.hpp"
#include "demonsonar/prng.hpp"
#include "demonsonar/salient_features.hpp"
#include "demonsonar/synth_oracle.hpp"

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

using namespace demonsonar;

namespace {

int g_failures = 0;

void report(const std::string& name, bool passed, double seconds, const std::string& detail) {
    std::printf("[%s] %-28s (%6.1f s)  %s\n", passed ? "PASS" : "FAIL", name.c_str(), seconds,
                detail.c_str());
    std::fflush(stdout);
    if (!passed) {
        ++g_failures;
    }
}

void run_criterion(const std::string& name, double time_limit_s,
                   const std::function<std::pair<bool, std::string>()>& body) {
    const auto start = std::chrono::steady_clock::now();
    bool passed = false;
    std::string detail;
    try {
        auto [ok, text] = body();
        passed = ok;
        detail = text;
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - start).count();
    if (time_limit_s > 0.0 && seconds > time_limit_s) {
        passed = false;
        detail += " [exceeded " + std::to_string(time_limit_s) + " s budget]";
    }
    report(name, passed, seconds, detail);
}

std::filesystem::path scratch_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("demonsonar_acceptance_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string read_file(const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (f == nullptr) {
        return {};
    }
    std::string bytes;
    char buf[4096];
    std::size_t n = 0;
    while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) {
        bytes.append(buf, n);
    }
    std::fclose(f);
    return bytes;
}

// ---------------------------------------------------------------------------

std::pair<bool, std::string> dsp_correctness() {
    Xoshiro256ss rng(20240001);
    double worst_fft = 0.0;
    for (std::size_t n = 8; n <= 1024; n *= 2) {
        std::vector<double> signal(n);
        for (double& v : signal) {
            v = rng.uniform(-1.0, 1.0);
        }
        const ComplexSpectrum fast = fft(signal);
        const ComplexSpectrum slow = dft_naive(signal);
        double num = 0.0;
        double den = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            num += std::norm(fast.bins[k] - slow.bins[k]);
            den += std::norm(slow.bins[k]);
        }
        worst_fft = std::max(worst_fft, std::sqrt(num / den));
    }

    double worst_parseval = 0.0;
    for (std::size_t n : {16u, 128u, 1024u}) {
        std::vector<double> signal(n);
        double time_energy = 0.0;
        for (double& v : signal) {
            v = rng.uniform(-1.0, 1.0);
            time_energy += v * v;
        }
        double freq_energy = 0.0;
        for (const auto& bin : fft(signal).bins) {
            freq_energy += std::norm(bin);
        }
        freq_energy /= static_cast<double>(n);
        worst_parseval = std::max(worst_parseval,
                                  std::abs(time_energy - freq_energy) / time_energy);
    }

    // direct-convolution oracle for filter_apply
    const FirFilter filter = design_fir(FilterKind::bandpass, 500.0, 1500.0, 8000.0, 61);
    std::vector<double> signal(4000);
    for (double& v : signal) {
        v = rng.uniform(-1.0, 1.0);
    }
    const std::vector<double> out = filter_apply(filter, signal);
    const std::size_t center = (filter.taps.size() - 1) / 2;
    double worst_conv = 0.0;
    for (std::size_t i = 0; i < signal.size(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < filter.taps.size(); ++j) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i + center) -
                                       static_cast<std::ptrdiff_t>(j);
            if (src >= 0 && src < static_cast<std::ptrdiff_t>(signal.size())) {
                acc += filter.taps[j] * signal[static_cast<std::size_t>(src)];
            }
        }
        worst_conv = std::max(worst_conv, std::abs(out[i] - acc));
    }

    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "fft rel err %.2e (<=1e-9), parseval %.2e (<=1e-9), conv %.2e (<=1e-12)",
                  worst_fft, worst_parseval, worst_conv);
    return {worst_fft <= 1e-9 && worst_parseval <= 1e-9 && worst_conv <= 1e-12, detail};
}

std::pair<bool, std::string> demon_line_recovery() {
    const DemonConfig config;
    const double bin_hz = 200.0 / 1024.0;
    int shaft_hits = 0;
    int blade_hits = 0;
    const int trials = 100;
    for (int trial = 0; trial < trials; ++trial) {
        Xoshiro256ss rng(derive_seed(20240002, trial));
        // shaft uniform on the bin grid inside [3, 10] Hz
        const std::size_t grid_lo = 16, grid_hi = 51;
        const std::size_t shaft_bin = grid_lo + rng.below(grid_hi - grid_lo + 1);
        const double shaft_hz = static_cast<double>(shaft_bin) * bin_hz;
        const int blades = 2 + static_cast<int>(rng.below(4));

        VesselParams params;
        params.shaft_hz = shaft_hz;
        params.blade_count = blades;
        params.mod_depth = 0.5;
        params.snr_db = 10.0;
        params.carrier_lo_hz = 800.0;
        params.carrier_hi_hz = 3600.0;
        params.duration_s = 30.0;
        params.sample_rate_hz = 8000.0;
        params.seed = derive_seed(20240003, trial);

        const DemonSpectrum spectrum = demon_spectrum(synth_vessel_signal(params), config);
        const ShaftEstimate estimate = estimate_shaft_frequency(spectrum, 1.0, 15.0, 5);
        if (std::abs(estimate.shaft_hz - shaft_hz) <= bin_hz + 1e-9) {
            ++shaft_hits;
        }
        if (estimate.shaft_hz > 0.0 &&
            estimate_blade_count(spectrum, estimate.shaft_hz, 2, 7) == blades) {
            ++blade_hits;
        }
    }
    char detail[120];
    std::snprintf(detail, sizeof(detail), "shaft within 1 bin: %d/100 (>=95), blade exact: %d/100 (>=90)",
                  shaft_hits, blade_hits);
    return {shaft_hits >= 95 && blade_hits >= 90, detail};
}

std::pair<bool, std::string> noise_rejection() {
    int sentinels = 0;
    for (int trial = 0; trial < 50; ++trial) {
        VesselParams params;
        params.shaft_hz = 5.0;
        params.blade_count = 3;
        params.mod_depth = 0.0; // no modulation: pure noise
        params.snr_db = 10.0;
        params.carrier_lo_hz = 800.0;
        params.carrier_hi_hz = 3600.0;
        params.duration_s = 30.0;
        params.sample_rate_hz = 8000.0;
        params.seed = derive_seed(20240004, trial);
        const DemonSpectrum spectrum =
            demon_spectrum(synth_vessel_signal(params), DemonConfig{});
        const ShaftEstimate estimate = estimate_shaft_frequency(spectrum, 1.0, 15.0, 5);
        if (estimate.shaft_hz == 0.0 && estimate.comb_score == 0.0) {
            ++sentinels;
        }
    }
    char detail[80];
    std::snprintf(detail, sizeof(detail), "no-detection sentinel in %d/50 (>=45)", sentinels);
    return {sentinels >= 45, detail};
}

std::pair<bool, std::string> gradient_check() {
    double worst = 0.0;
    const std::vector<std::vector<std::size_t>> dim_sets = {{5, 12, 5}, {5, 28, 10}};
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        for (const auto& dims : dim_sets) {
            MlpModel model = init_mlp(dims, seed);
            std::vector<Example> batch;
            Xoshiro256ss rng(derive_seed(20240005, seed));
            for (int i = 0; i < 8; ++i) {
                Example example;
                example.x.resize(dims.front());
                for (double& v : example.x) {
                    v = rng.uniform(-1.5, 1.5);
                }
                example.label = static_cast<int>(rng.below(dims.back()));
                batch.push_back(std::move(example));
            }
            const auto [loss, grads] = loss_and_gradients(model, batch);
            const double eps = 1e-5;
            for (std::size_t l = 0; l < model.weights.size(); ++l) {
                for (std::size_t i = 0; i < model.weights[l].size(); ++i) {
                    const double saved = model.weights[l][i];
                    model.weights[l][i] = saved + eps;
                    const double up = loss_and_gradients(model, batch).first;
                    model.weights[l][i] = saved - eps;
                    const double down = loss_and_gradients(model, batch).first;
                    model.weights[l][i] = saved;
                    const double numeric = (up - down) / (2.0 * eps);
                    const double denom =
                        std::max({std::abs(numeric), std::abs(grads.weights[l][i]), 1e-8});
                    worst = std::max(worst, std::abs(numeric - grads.weights[l][i]) / denom);
                }
                for (std::size_t i = 0; i < model.biases[l].size(); ++i) {
                    const double saved = model.biases[l][i];
                    model.biases[l][i] = saved + eps;
                    const double up = loss_and_gradients(model, batch).first;
                    model.biases[l][i] = saved - eps;
                    const double down = loss_and_gradients(model, batch).first;
                    model.biases[l][i] = saved;
                    const double numeric = (up - down) / (2.0 * eps);
                    const double denom =
                        std::max({std::abs(numeric), std::abs(grads.biases[l][i]), 1e-8});
                    worst = std::max(worst, std::abs(numeric - grads.biases[l][i]) / denom);
                }
            }
        }
    }
    char detail[100];
    std::snprintf(detail, sizeof(detail),
                  "max relative error %.2e (<=1e-4) over 3 seeds x {5-12-5, 5-28-10}", worst);
    return {worst <= 1e-4, detail};
}

std::pair<bool, std::string> training_sanity() {
    // separable 5-class blobs, 40 per class, in the 5-dim feature space
    Xoshiro256ss rng(20240006);
    std::vector<Example> all;
    std::vector<int> labels;
    for (int c = 0; c < 5; ++c) {
        for (int i = 0; i < 40; ++i) {
            Example example;
            example.label = c;
            example.x.resize(5);
            for (std::size_t d = 0; d < 5; ++d) {
                example.x[d] = (static_cast<int>(d) == c ? 4.0 : 0.0) + rng.gaussian();
            }
            all.push_back(std::move(example));
            labels.push_back(c);
        }
    }
    const SplitIndices split = split_indices(labels, 0.8, 20240006);
    std::vector<Example> train_set, val_set;
    for (std::size_t idx : split.train) {
        train_set.push_back(all[idx]);
    }
    for (std::size_t idx : split.val) {
        val_set.push_back(all[idx]);
    }

    TrainConfig config;
    config.learning_rate = 0.05;
    config.epochs = 500;
    config.seed = 20240006;
    const auto [best, history] = train(init_mlp({5, 12, 5}, 20240006), train_set, val_set, config);

    const double recorded = history.val_accuracy[history.best_epoch];
    const double reevaluated = accuracy(best, val_set);
    char detail[120];
    std::snprintf(detail, sizeof(detail),
                  "best val accuracy %.3f (>=0.95), recorded==re-evaluated: %s", recorded,
                  recorded == reevaluated ? "yes" : "NO");
    return {recorded >= 0.95 && recorded == reevaluated, detail};
}

std::pair<bool, std::string> end_to_end_cascade() {
    const auto dir = scratch_dir("e2e");
    SynthSpec spec = SynthSpec::defaults(); // 5 x 40, 10 fine types, 10 s @ 16 kHz, SNR 10
    spec.seed = 20240007;
    const DatasetManifest manifest = generate_dataset(spec, dir);

    const DemonConfig demon_config;
    const FeatureConfig feature_config;
    std::vector<FeatureRow> rows;
    rows.reserve(manifest.rows.size());
    for (const ManifestRow& entry : manifest.rows) {
        const SampleBuffer buffer = read_wav(manifest.resolve(entry));
        const DemonSpectrum spectrum = demon_spectrum(buffer, demon_config);
        FeatureRow row;
        row.path = entry.path;
        row.label_coarse = entry.label_coarse;
        row.label_fine = entry.label_fine;
        row.features = extract_salient_features(spectrum, feature_config);
        rows.push_back(std::move(row));
    }

    TrainConfig config;
    config.seed = 20240007;
    const CascadeModel cascade = train_cascade(rows, config, CascadeConfig{});

    const SplitIndices split = split_dataset(rows, 0.8, config.seed);
    std::vector<FeatureRow> val_rows;
    for (std::size_t idx : split.val) {
        val_rows.push_back(rows[idx]);
    }
    const EvalResult result = evaluate(cascade, val_rows);
    std::filesystem::remove_all(dir);

    const double coarse = result.coarse.overall_accuracy;
    const double fine = result.fine ? result.fine->overall_accuracy : 0.0;
    char detail[100];
    std::snprintf(detail, sizeof(detail), "coarse %.3f (>=0.90), fine %.3f (>=0.80) on %zu held-out rows",
                  coarse, fine, val_rows.size());
    return {coarse >= 0.90 && fine >= 0.80, detail};
}

std::pair<bool, std::string> protocol_fidelity() {
    // 300 rows, 5 classes x 60 -> exactly 240/60 with 12 per class in val
    std::vector<int> labels;
    for (int c = 0; c < 5; ++c) {
        for (int i = 0; i < 60; ++i) {
            labels.push_back(c);
        }
    }
    const SplitIndices split = split_indices(labels, 0.8, 20240008);
    bool split_ok = split.train.size() == 240 && split.val.size() == 60;
    std::vector<int> val_counts(5, 0);
    for (std::size_t idx : split.val) {
        val_counts[static_cast<std::size_t>(labels[idx])] += 1;
    }
    for (int count : val_counts) {
        split_ok = split_ok && count == 12;
    }

    // the default width sweep shares one val set and emits 4 rows
    Xoshiro256ss rng(20240009);
    std::vector<FeatureRow> rows;
    for (int c = 0; c < 5; ++c) {
        for (int i = 0; i < 60; ++i) {
            FeatureRow row;
            row.path = "r" + std::to_string(c) + "_" + std::to_string(i);
            row.label_coarse = c;
            row.label_fine = c == 1 ? i % 10 : -1;
            row.features.shaft_freq_hz = 2.0 + 2.5 * c + rng.gaussian() * 0.1;
            if (c == 1) {
                row.features.shaft_freq_hz += 0.001 * (i % 10);
                row.features.blade_freq_hz = 30.0 + 5.0 * (i % 10) + rng.gaussian() * 0.3;
            } else {
                row.features.blade_freq_hz = 3.0 * row.features.shaft_freq_hz;
            }
            row.features.avg_strength = 0.005;
            row.features.max_shaft_freq_hz = row.features.shaft_freq_hz;
            row.features.max_blade_freq_hz = row.features.blade_freq_hz;
            rows.push_back(std::move(row));
        }
    }
    TrainConfig base;
    base.epochs = 60;
    base.seed = 20240009;
    const std::vector<std::size_t> widths = {12, 16, 20, 28};
    const SweepReport report = sweep_hidden_widths(rows, widths, base, CascadeConfig{});

    const bool rows_ok = report.entries.size() == 4;
    const bool val_shared = report.val_indices == split_dataset(rows, 0.8, base.seed).val;

    const auto dir = scratch_dir("sweep");
    write_sweep_report(report, dir / "sweep.csv");
    std::size_t csv_rows = 0;
    std::string line;
    std::FILE* f = std::fopen((dir / "sweep.csv").c_str(), "r");
    char buf[4096];
    while (std::fgets(buf, sizeof(buf), f) != nullptr) {
        ++csv_rows;
    }
    std::fclose(f);
    std::filesystem::remove_all(dir);
    const bool csv_ok = csv_rows == 5; // header + 4 width rows

    char detail[140];
    std::snprintf(detail, sizeof(detail),
                  "240/60 split 12/class: %s; 4-row sweep: %s; shared val ids: %s",
                  split_ok ? "yes" : "NO", rows_ok && csv_ok ? "yes" : "NO",
                  val_shared ? "yes" : "NO");
    return {split_ok && rows_ok && csv_ok && val_shared, detail};
}

std::pair<bool, std::string> algorithm1_conformance() {
    const auto forced_net = [](std::size_t classes, int winner) {
        MlpModel net = init_mlp({5, 4, classes}, 0);
        for (auto& layer : net.weights) {
            std::fill(layer.begin(), layer.end(), 0.0);
        }
        for (auto& layer : net.biases) {
            std::fill(layer.begin(), layer.end(), 0.0);
        }
        net.biases.back()[static_cast<std::size_t>(winner)] = 4.0;
        return net;
    };

    CascadeModel cascade;
    cascade.refine_category = 1;
    cascade.fine = forced_net(10, 7);

    bool ok = true;
    std::string detail;
    for (int forced : {0, 2, 3, 4}) {
        cascade.coarse = forced_net(5, forced);
        const Prediction p = cascade_predict(cascade, SalientFeatures{});
        const bool branch_ok = p.coarse_class == forced && !p.fine_class.has_value();
        ok = ok && branch_ok;
        detail += std::to_string(forced) + (branch_ok ? ":final " : ":BAD ");
    }
    cascade.coarse = forced_net(5, 1);
    const Prediction refined = cascade_predict(cascade, SalientFeatures{});
    const bool refine_ok =
        refined.coarse_class == 1 && refined.fine_class.has_value() && *refined.fine_class == 7;
    ok = ok && refine_ok;
    detail += refine_ok ? "1:refined(fine=7)" : "1:BAD";
    return {ok, detail};
}

std::pair<bool, std::string> determinism_and_persistence() {
    const auto dir = scratch_dir("det");

    // dataset generation is byte-stable
    SynthSpec spec = SynthSpec::make(3, 0, 4);
    spec.duration_s = 2.0;
    spec.sample_rate_hz = 8000.0;
    spec.seed = 20240010;
    generate_dataset(spec, dir / "a");
    generate_dataset(spec, dir / "b");
    bool manifests_equal =
        read_file(dir / "a" / "manifest.csv") == read_file(dir / "b" / "manifest.csv");
    bool audio_equal = true;
    for (const auto& entry : std::filesystem::directory_iterator(dir / "a")) {
        if (entry.path().extension() == ".wav") {
            audio_equal = audio_equal &&
                          read_file(entry.path()) == read_file(dir / "b" / entry.path().filename());
        }
    }

    // training and report writing are byte-stable under one seed
    Xoshiro256ss rng(20240011);
    std::vector<FeatureRow> rows;
    for (int c = 0; c < 5; ++c) {
        for (int i = 0; i < 10; ++i) {
            FeatureRow row;
            row.path = "d" + std::to_string(c * 10 + i);
            row.label_coarse = c;
            row.label_fine = c == 1 ? i % 2 : -1;
            row.features.shaft_freq_hz = 2.0 + 2.0 * c + rng.uniform(-0.1, 0.1);
            row.features.blade_freq_hz = row.features.shaft_freq_hz * (c == 1 ? 2 + i % 2 : 3);
            row.features.avg_strength = 0.004;
            row.features.max_shaft_freq_hz = row.features.shaft_freq_hz;
            row.features.max_blade_freq_hz = row.features.blade_freq_hz;
            rows.push_back(std::move(row));
        }
    }
    TrainConfig config;
    config.epochs = 50;
    config.seed = 20240011;
    CascadeConfig cc;
    cc.fine_classes = 2;
    const CascadeModel model_a = train_cascade(rows, config, cc);
    const CascadeModel model_b = train_cascade(rows, config, cc);
    save_model(model_a, dir / "a.json");
    save_model(model_b, dir / "b.json");
    const bool models_equal = read_file(dir / "a.json") == read_file(dir / "b.json");

    std::vector<FeatureRow> val_rows(rows.begin(), rows.begin() + 20);
    write_report(evaluate(model_a, val_rows).coarse, (dir / "ra").string());
    write_report(evaluate(model_b, val_rows).coarse, (dir / "rb").string());
    const bool reports_equal =
        read_file(dir / "ra_confusion.csv") == read_file(dir / "rb_confusion.csv") &&
        read_file(dir / "ra_metrics.csv") == read_file(dir / "rb_metrics.csv");

    // persistence: loading back reproduces every prediction exactly
    const CascadeModel loaded = load_model(dir / "a.json");
    bool predictions_equal = true;
    Xoshiro256ss probe(20240012);
    for (int trial = 0; trial < 200; ++trial) {
        SalientFeatures features;
        features.blade_freq_hz = probe.uniform(0.0, 35.0);
        features.shaft_freq_hz = probe.uniform(0.0, 15.0);
        features.avg_strength = probe.uniform01() * 0.02;
        features.max_shaft_freq_hz = probe.uniform(0.0, 15.0);
        features.max_blade_freq_hz = probe.uniform(0.0, 100.0);
        const Prediction x = cascade_predict(model_a, features);
        const Prediction y = cascade_predict(loaded, features);
        predictions_equal = predictions_equal && x.coarse_class == y.coarse_class &&
                            x.coarse_probs == y.coarse_probs && x.fine_class == y.fine_class;
    }
    std::filesystem::remove_all(dir);

    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "manifests:%s audio:%s models:%s reports:%s save/load predictions:%s",
                  manifests_equal ? "ok" : "DIFF", audio_equal ? "ok" : "DIFF",
                  models_equal ? "ok" : "DIFF", reports_equal ? "ok" : "DIFF",
                  predictions_equal ? "ok" : "DIFF");
    return {manifests_equal && audio_equal && models_equal && reports_equal && predictions_equal,
            detail};
}

} // namespace

int main() {
    std::printf("demonsonar acceptance suite\n");
    run_criterion("dsp-correctness", 10.0, dsp_correctness);
    run_criterion("demon-line-recovery", 120.0, demon_line_recovery);
    run_criterion("noise-rejection", 0.0, noise_rejection);
    run_criterion("gradient-check", 0.0, gradient_check);
    run_criterion("training-sanity", 0.0, training_sanity);
    run_criterion("end-to-end-cascade", 600.0, end_to_end_cascade);
    run_criterion("protocol-fidelity", 0.0, protocol_fidelity);
    run_criterion("algorithm1-conformance", 0.0, algorithm1_conformance);
    run_criterion("determinism-persistence", 0.0, determinism_and_persistence);

    if (g_failures > 0) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
