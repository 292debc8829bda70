// demonsonar: synthesize propeller signals, run DEMON analysis, extract
// salient features, and train/evaluate the cascaded vessel classifier.
//
// Commands: synth, analyze, train, predict, evaluate, sweep.
// Exit codes: 0 success, 2 contract/format error, 3 I/O error.

#include "demonsonar/demon.hpp"
#include "demonsonar/errors.hpp"
#include "demonsonar/eval_harness.hpp"
#include "demonsonar/neural_cascade.hpp"
#include "demonsonar/salient_features.hpp"
#include "demonsonar/synth_oracle.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace demonsonar;

constexpr int kExitOk = 0;
constexpr int kExitContract = 2;
constexpr int kExitIo = 3;

std::uint64_t seed_from_env() {
    if (const char* env = std::getenv("DEMONSONAR_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0') {
            return static_cast<std::uint64_t>(v);
        }
        std::cerr << "warning: ignoring unparseable DEMONSONAR_SEED='" << env << "'\n";
    }
    return 0;
}

struct DemonFlags {
    DemonConfig config;
    FeatureConfig features;

    void attach(CLI::App* cmd) {
        cmd->add_option("--carrier-lo", config.carrier_lo_hz,
                        "Carrier band low edge in Hz (0 = 0.1 * sample rate)");
        cmd->add_option("--carrier-hi", config.carrier_hi_hz,
                        "Carrier band high edge in Hz (0 = 0.45 * sample rate)");
        cmd->add_option("--env-rate", config.envelope_rate_hz, "Envelope rate in Hz");
        cmd->add_option("--frame-len", config.frame_len, "Welch frame length (power of two)");
        cmd->add_option("--overlap", config.overlap_frac, "Welch overlap fraction in [0,1)");
        cmd->add_option("--max-line", config.max_line_hz, "Line-analysis ceiling in Hz");
        cmd->add_option("--bandpass-taps", config.bandpass_taps, "Carrier bandpass tap count");
        cmd->add_option("--shaft-min", features.shaft_min_hz, "Shaft search band low edge in Hz");
        cmd->add_option("--shaft-max", features.shaft_max_hz, "Shaft search band high edge in Hz");
        cmd->add_option("--harmonics", features.comb_harmonics, "Harmonics scored by the comb");
        cmd->add_option("--blade-min", features.blade_min, "Smallest blade count considered");
        cmd->add_option("--blade-max", features.blade_max, "Largest blade count considered");
        cmd->add_option("--peak-k", features.peak_threshold_k, "Peak threshold (multiple of median)");
    }

    void sync() { features.max_line_hz = config.max_line_hz; }
};

struct TrainFlags {
    TrainConfig train;
    CascadeConfig cascade;

    void attach(CLI::App* cmd) {
        cmd->add_option("--hidden", train.hidden_width, "Hidden layer width");
        cmd->add_option("--lr", train.learning_rate, "Learning rate");
        cmd->add_option("--epochs", train.epochs, "Training epochs");
        cmd->add_option("--batch", train.batch_size, "Mini-batch size");
        cmd->add_option("--coarse-classes", cascade.coarse_classes, "Coarse class count");
        cmd->add_option("--fine-classes", cascade.fine_classes, "Fine class count");
        cmd->add_option("--refine-category", cascade.refine_category,
                        "Coarse class routed to the fine net (-1 disables)");
        cmd->add_option("--ratio", cascade.train_ratio, "Training fraction of the split");
    }
};

/// Loads feature rows either from a feature CSV or by running the DEMON
/// pipeline over every WAV named in a dataset manifest.
std::vector<FeatureRow> load_rows(const std::filesystem::path& path, const DemonFlags& flags) {
    std::ifstream probe(path);
    if (!probe) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    std::string header;
    std::getline(probe, header);
    probe.close();

    if (header == kFeatureCsvHeader) {
        return read_feature_csv(path);
    }
    if (header != kManifestCsvHeader) {
        throw FormatError("'" + path.string() + "': expected a dataset manifest or feature CSV");
    }
    const DatasetManifest manifest = read_manifest(path);
    std::vector<FeatureRow> rows;
    rows.reserve(manifest.rows.size());
    for (const ManifestRow& entry : manifest.rows) {
        const SampleBuffer buffer = read_wav(manifest.resolve(entry));
        const DemonSpectrum spectrum = demon_spectrum(buffer, flags.config);
        FeatureRow row;
        row.path = entry.path;
        row.label_coarse = entry.label_coarse;
        row.label_fine = entry.label_fine;
        row.features = extract_salient_features(spectrum, flags.features);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string prediction_line(const Prediction& p) {
    std::string line = "coarse=" + std::to_string(p.coarse_class) + " fine=";
    line += p.fine_class ? std::to_string(*p.fine_class) : "-";
    return line;
}

int run(int argc, char** argv) {
    CLI::App app{"DEMON spectrum analysis and cascaded vessel classification"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.set_config("--config", "", "Read defaults from a key=value config file");

    std::uint64_t seed = seed_from_env();
    app.add_option("--seed", seed, "PRNG seed (lowest priority source: DEMONSONAR_SEED)");

    // ---- synth ----------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic dataset");
    int synth_classes = 5;
    int synth_fine = 10;
    std::size_t synth_per_class = 40;
    double synth_duration = 10.0;
    double synth_rate = 16000.0;
    std::string synth_out;
    synth->add_option("--classes", synth_classes, "Coarse class count (2-5)");
    synth->add_option("--fine-types", synth_fine, "Fine types inside the refine class (0 disables)");
    synth->add_option("--per-class", synth_per_class, "Samples per coarse class");
    synth->add_option("--duration", synth_duration, "Seconds of audio per sample");
    synth->add_option("--rate", synth_rate, "Sample rate in Hz");
    synth->add_option("--out", synth_out, "Output directory")->required();

    // ---- analyze --------------------------------------------------------
    auto* analyze = app.add_subcommand("analyze", "DEMON spectrum, gram and features for one WAV");
    std::string analyze_wav;
    std::string analyze_prefix = "demon";
    double analyze_slice = 10.0;
    DemonFlags analyze_flags;
    analyze->add_option("wav", analyze_wav, "Input WAV file")->required();
    analyze->add_option("--out-prefix", analyze_prefix, "Prefix for the output files");
    analyze->add_option("--slice", analyze_slice, "DEMON-gram slice length in seconds");
    analyze_flags.attach(analyze);

    // ---- train ----------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "Train the cascaded classifier");
    std::string train_input;
    std::string train_model = "cascade.json";
    DemonFlags train_demon;
    TrainFlags train_flags;
    train_cmd->add_option("manifest", train_input, "Dataset manifest or feature CSV")->required();
    train_cmd->add_option("--model", train_model, "Model file to write");
    train_flags.attach(train_cmd);
    train_demon.attach(train_cmd);

    // ---- predict --------------------------------------------------------
    auto* predict = app.add_subcommand("predict", "Classify a WAV or every row of a feature CSV");
    std::string predict_model;
    std::string predict_input;
    DemonFlags predict_flags;
    predict->add_option("--model", predict_model, "Model file")->required();
    predict->add_option("input", predict_input, "WAV file or feature CSV")->required();
    predict_flags.attach(predict);

    // ---- evaluate -------------------------------------------------------
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluate a model on a labeled dataset");
    std::string eval_input;
    std::string eval_model;
    std::string eval_prefix = "report";
    DemonFlags eval_flags;
    evaluate_cmd->add_option("manifest", eval_input, "Dataset manifest or feature CSV")->required();
    evaluate_cmd->add_option("--model", eval_model, "Model file")->required();
    evaluate_cmd->add_option("--report", eval_prefix, "Prefix for the report files");
    eval_flags.attach(evaluate_cmd);

    // ---- sweep ----------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep", "Hidden-width sweep on a shared split");
    std::string sweep_input;
    std::string sweep_out = "sweep.csv";
    std::vector<std::size_t> sweep_widths = {12, 16, 20, 28};
    DemonFlags sweep_demon;
    TrainFlags sweep_flags;
    sweep->add_option("manifest", sweep_input, "Dataset manifest or feature CSV")->required();
    sweep->add_option("--widths", sweep_widths, "Hidden widths to compare")->delimiter(',');
    sweep->add_option("--report", sweep_out, "Sweep report CSV to write");
    sweep_flags.attach(sweep);
    sweep_demon.attach(sweep);

    // lets global flags like --seed appear after the subcommand name
    for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; })) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e); // prints the usage message
        return kExitContract;
    }

    if (synth->parsed()) {
        SynthSpec spec = SynthSpec::make(synth_classes, synth_fine, synth_per_class);
        spec.duration_s = synth_duration;
        spec.sample_rate_hz = synth_rate;
        spec.seed = seed;
        const DatasetManifest manifest = generate_dataset(spec, synth_out);
        std::cout << (std::filesystem::path(synth_out) / "manifest.csv").string() << "\n";
        std::cout << manifest.rows.size() << " samples in " << spec.coarse_boxes.size()
                  << " classes\n";
    } else if (analyze->parsed()) {
        analyze_flags.sync();
        const SampleBuffer buffer = read_wav(analyze_wav);
        const DemonSpectrum spectrum = demon_spectrum(buffer, analyze_flags.config);

        const std::string spectrum_path = analyze_prefix + "_spectrum.csv";
        std::ofstream out(spectrum_path, std::ios::trunc);
        if (!out) {
            throw IoError("cannot open '" + spectrum_path + "' for writing");
        }
        out << "freq_hz,magnitude\n";
        char buf[80];
        for (std::size_t b = 0; b < spectrum.magnitudes.size(); ++b) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", b * spectrum.bin_hz,
                          spectrum.magnitudes[b]);
            out << buf;
        }
        out.flush();
        if (!out) {
            throw IoError("failed while writing '" + spectrum_path + "'");
        }

        const double slice = std::min(analyze_slice, buffer.duration_s());
        render_demon_gram(demon_gram(buffer, analyze_flags.config, slice),
                          analyze_prefix + "_gram.pgm");

        FeatureRow row;
        row.path = analyze_wav;
        row.features = extract_salient_features(spectrum, analyze_flags.features);
        write_feature_csv({&row, 1}, analyze_prefix + "_features.csv");
        std::cout << analyze_prefix << "_spectrum.csv " << analyze_prefix << "_gram.pgm "
                  << analyze_prefix << "_features.csv\n";
    } else if (train_cmd->parsed()) {
        train_demon.sync();
        train_flags.train.seed = seed;
        const std::vector<FeatureRow> rows = load_rows(train_input, train_demon);
        const CascadeModel cascade = train_cascade(rows, train_flags.train, train_flags.cascade);
        save_model(cascade, train_model);
        std::cout << train_model << "\n";
    } else if (predict->parsed()) {
        predict_flags.sync();
        const CascadeModel cascade = load_model(predict_model);
        std::ifstream probe(predict_input);
        if (!probe) {
            throw IoError("cannot open '" + predict_input + "' for reading");
        }
        std::string header;
        std::getline(probe, header);
        probe.close();
        if (header == kFeatureCsvHeader) {
            for (const FeatureRow& row : read_feature_csv(predict_input)) {
                std::cout << prediction_line(cascade_predict(cascade, row.features)) << " path="
                          << row.path << "\n";
            }
        } else {
            const SampleBuffer buffer = read_wav(predict_input);
            const DemonSpectrum spectrum = demon_spectrum(buffer, predict_flags.config);
            const SalientFeatures features =
                extract_salient_features(spectrum, predict_flags.features);
            std::cout << prediction_line(cascade_predict(cascade, features)) << "\n";
        }
    } else if (evaluate_cmd->parsed()) {
        eval_flags.sync();
        const CascadeModel cascade = load_model(eval_model);
        const std::vector<FeatureRow> rows = load_rows(eval_input, eval_flags);
        const EvalResult result = evaluate(cascade, rows);
        write_report(result.coarse, eval_prefix + "_coarse");
        char buf[64];
        std::snprintf(buf, sizeof(buf), "coarse_overall=%.6f\n", result.coarse.overall_accuracy);
        std::cout << buf;
        if (result.fine) {
            write_report(*result.fine, eval_prefix + "_fine");
            std::snprintf(buf, sizeof(buf), "fine_overall=%.6f\n", result.fine->overall_accuracy);
            std::cout << buf;
        }
    } else if (sweep->parsed()) {
        sweep_demon.sync();
        sweep_flags.train.seed = seed;
        const std::vector<FeatureRow> rows = load_rows(sweep_input, sweep_demon);
        const SweepReport report =
            sweep_hidden_widths(rows, sweep_widths, sweep_flags.train, sweep_flags.cascade);
        write_sweep_report(report, sweep_out);
        std::cout << sweep_out << "\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitContract;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitContract;
    }
}
