// confdetect: command-line front end over the C API.
//
//   synth   generate a synthetic corpus (recording CSV + annotation JSON per subject)
//   label   sessions -> labeled CSV
//   train   labeled CSV -> forest JSON (--cv selects the tree count by k-fold validation)
//   eval    repeated participant-wise evaluation -> report.json + CSVs
//   stream  recording rows on stdin -> one JSON decision per line
//   bench   mean delta-sample + predict latency
//   split   participant-wise split manifest
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "confdetect/confdetect.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct CliError {
    int code;
    std::string message;
};

void check(cd_status status, const std::string& context) {
    if (status == CD_OK) return;
    const int code = status == CD_ERR_INVALID_ARGUMENT ? kExitUsage : kExitData;
    throw CliError{code, context + ": " + cd_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Handle {
    T* ptr = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    ~Handle() { Free(ptr); }
    T** out() { return &ptr; }
    T* get() const { return ptr; }
};

using Corpus = Handle<cd_corpus, cd_corpus_free>;
using Labeled = Handle<cd_labeled, cd_labeled_free>;
using Forest = Handle<cd_forest, cd_forest_free>;
using Stream = Handle<cd_stream, cd_stream_free>;
using ReportHandle = Handle<cd_report, cd_report_free>;

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw CliError{kExitData, "cannot create " + dir + ": " + ec.message()};
}

void write_atomic(const fs::path& path, const std::string& text) {
    check(cd_write_file_atomic(path.string().c_str(), text.data(), text.size()), path.string());
}

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct SynthOptions {
    cd_synth_config config{};
    bool null_effect = false;

    SynthOptions() { cd_synth_config_default(&config); }

    void add_to(CLI::App* app) {
        app->add_option("--subjects", config.n_subjects, "Number of subjects");
        app->add_option("--duration", config.duration, "Seconds per session");
        app->add_option("--events", config.events_per_session, "Confusion events per session");
        app->add_option("--pupil-delta", config.pupil_diam_delta, "Pupil diameter shift inside event windows (mm)");
        app->add_option("--scatter-gain", config.por_scatter_gain, "Point-of-regard noise gain inside event windows");
        app->add_option("--motion-gain", config.head_motion_gain, "Gyro/accel noise gain inside event windows");
        app->add_option("--subject-variation", config.subject_variation, "Per-subject offset sd (channel sds)");
        app->add_option("--drift", config.drift, "Slow drift sd (channel sds), 0 = off");
        app->add_option("--dropout", config.dropout_rate, "Probability of an invalid frame");
        app->add_flag("--null-effect", null_effect, "Zero effect sizes (chance-level control)");
    }

    cd_synth_config resolved(std::uint64_t seed, double half_width) const {
        cd_synth_config c = config;
        if (null_effect) cd_synth_config_null_effect(&c);
        c.seed = seed;
        c.half_width = half_width;
        return c;
    }
};

struct ForestOptions {
    cd_forest_params params{};

    ForestOptions() { cd_forest_params_default(&params); }

    void add_to(CLI::App* app) {
        app->add_option("--trees", params.n_trees, "Number of trees")->check(CLI::PositiveNumber);
        app->add_option("--max-depth", params.max_depth, "Maximum tree depth, 0 = unlimited");
        app->add_option("--min-leaf", params.min_leaf, "Minimum samples per leaf")->check(CLI::PositiveNumber);
        app->add_option("--features-per-split", params.features_per_split, "Candidate channels per split, 0 = ceil(sqrt(d))");
        app->add_option("--threads", params.threads, "Training threads, 0 = all cores");
    }
};

/// Sessions directory -> labels; a file is read as labeled CSV.
void load_labeled(const std::string& input, const std::string& layout, double half_width, Labeled& out) {
    if (fs::is_directory(input)) {
        Corpus corpus;
        check(cd_corpus_load_dir(input.c_str(), corpus.out()), input);
        check(cd_corpus_label(corpus.get(), layout.c_str(), half_width, out.out()), "label");
    } else {
        check(cd_labeled_read_csv(input.c_str(), out.out()), input);
    }
}

std::vector<cd_sample> read_recording(std::istream& in, const std::string& name) {
    std::vector<cd_sample> samples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        if (line_no == 1 && cd_is_recording_header(line.c_str())) continue;
        cd_sample s{};
        check(cd_parse_recording_row(line.c_str(), &s), name + " line " + std::to_string(line_no));
        samples.push_back(s);
    }
    return samples;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Confusion-state detection from eye and head tracking"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.set_version_flag("--version", cd_version());

    std::uint64_t seed = CD_DEFAULT_SEED;
    double half_width = 1.0;
    std::string layout = CD_DEFAULT_LAYOUT;
    std::string out_dir;
    std::string input;
    std::string model;

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
    SynthOptions synth_opts;
    synth_opts.add_to(synth);
    synth->add_option("--rate", synth_opts.config.rate, "Sampling rate (Hz)");
    synth->add_option("--seed", seed, "Master seed");
    synth->add_option("--window-halfwidth", half_width, "Event window half width (s)");
    synth->add_option("--out", out_dir, "Output directory")->required();

    // label
    auto* label = app.add_subcommand("label", "Label sessions into a labeled CSV");
    label->add_option("--input", input, "Directory of <id>.csv + <id>.json pairs")->required();
    label->add_option("--layout", layout, "Comma-separated feature channels");
    label->add_option("--window-halfwidth", half_width, "Event window half width (s)");
    label->add_option("--out", out_dir, "Output directory (labeled.csv)")->required();

    // train
    auto* train = app.add_subcommand("train", "Train a forest on a labeled corpus");
    ForestOptions train_forest;
    train_forest.add_to(train);
    bool use_cv = false;
    std::size_t train_folds = 5;
    train->add_option("--input", input, "Labeled CSV or sessions directory")->required();
    train->add_option("--layout", layout, "Feature channels when --input is a sessions directory");
    train->add_option("--window-halfwidth", half_width, "Event window half width (s)");
    train->add_option("--seed", seed, "Master seed");
    train->add_flag("--cv", use_cv, "Select the tree count by k-fold cross-validation");
    train->add_option("--cv-folds", train_folds, "Folds for --cv")->check(CLI::Range(2, 1000));
    train->add_option("--out", out_dir, "Output directory (forest.json)")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "Run the repeated evaluation protocol");
    cd_experiment_config exp{};
    cd_experiment_config_default(&exp);
    ForestOptions eval_forest;
    eval_forest.add_to(eval);
    SynthOptions eval_synth;
    eval_synth.add_to(eval);
    bool sample_split = false;
    eval->add_option("--input", input, "Labeled CSV or sessions directory (default: synthetic corpus)");
    eval->add_option("--layout", layout, "Feature channels");
    eval->add_option("--window-halfwidth", half_width, "Event window half width (s)");
    eval->add_option("--runs", exp.n_runs, "Randomized runs")->check(CLI::PositiveNumber);
    eval->add_option("--test-picks", exp.test_picks_per_class, "Held-out picks per class per run")
        ->check(CLI::PositiveNumber);
    eval->add_option("--train-fraction", exp.train_fraction, "Share of subjects used for training");
    eval->add_option("--cv-folds", exp.cv_folds, "Cross-validation folds, 0 = off");
    eval->add_flag("--sample-split", sample_split, "Split pooled samples instead of subjects (leaky control)");
    eval->add_option("--seed", seed, "Master seed");
    eval->add_option("--out", out_dir, "Output directory")->required();

    // stream
    auto* stream = app.add_subcommand("stream", "Classify recording rows from stdin, one JSON line per row");
    std::size_t capacity = CD_DEFAULT_QUEUE_CAPACITY;
    double rate = 0.0;
    stream->add_option("--model", model, "Forest JSON")->required();
    stream->add_option("--input", input, "Recording CSV (default: stdin)");
    stream->add_option("--queue-capacity", capacity, "Samples in the sliding queue")->check(CLI::PositiveNumber);
    stream->add_option("--rate", rate, "Throttle to this many rows per second, 0 = file pace");

    // bench
    auto* benchcmd = app.add_subcommand("bench", "Measure per-step classification latency");
    std::size_t bench_runs = 100;
    ForestOptions bench_forest;
    bench_forest.add_to(benchcmd);
    benchcmd->add_option("--model", model, "Forest JSON (default: train one on a synthetic corpus)");
    benchcmd->add_option("--input", input, "Recording CSV to stream (default: synthetic session)");
    benchcmd->add_option("--runs", bench_runs, "Timed steps")->check(CLI::PositiveNumber);
    benchcmd->add_option("--queue-capacity", capacity, "Samples in the sliding queue")->check(CLI::PositiveNumber);
    benchcmd->add_option("--seed", seed, "Master seed");
    benchcmd->add_option("--out", out_dir, "Optional output directory (bench.json)");

    // split
    auto* splitcmd = app.add_subcommand("split", "Write a participant-wise split manifest");
    double train_fraction = 2.0 / 3.0;
    splitcmd->add_option("--input", input, "Labeled CSV or sessions directory")->required();
    splitcmd->add_option("--train-fraction", train_fraction, "Share of subjects used for training");
    splitcmd->add_option("--seed", seed, "Split seed");
    splitcmd->add_option("--out", out_dir, "Output directory (split.json)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (*synth) {
            Corpus corpus;
            const cd_synth_config config = synth_opts.resolved(seed, half_width);
            check(cd_corpus_synthesize(&config, corpus.out()), "synth");
            ensure_dir(out_dir);
            check(cd_corpus_export_dir(corpus.get(), out_dir.c_str()), "export");
            std::cout << "wrote " << cd_corpus_session_count(corpus.get()) << " sessions to " << out_dir << "\n";
        } else if (*label) {
            Labeled labeled;
            load_labeled(input, layout, half_width, labeled);
            ensure_dir(out_dir);
            const auto path = (fs::path(out_dir) / "labeled.csv").string();
            check(cd_labeled_write_csv(labeled.get(), path.c_str()), path);
            std::size_t n_event = 0, n_noevent = 0;
            check(cd_labeled_counts(labeled.get(), &n_event, &n_noevent), "counts");
            std::cout << "event=" << n_event << " no_event=" << n_noevent << " -> " << path << "\n";
        } else if (*train) {
            Labeled labeled;
            load_labeled(input, layout, half_width, labeled);
            cd_forest_params params = train_forest.params;
            params.seed = seed;
            Forest forest;
            std::size_t selected = 0;
            std::vector<double> curve(params.n_trees, 0.0);
            check(cd_forest_train(labeled.get(), &params, use_cv ? train_folds : 0, forest.out(), &selected,
                                  curve.data()),
                  "train");
            ensure_dir(out_dir);
            const auto path = fs::path(out_dir) / "forest.json";
            check(cd_forest_save(forest.get(), path.string().c_str()), path.string());
            if (use_cv) {
                std::string csv = "n_trees,mean_cost\n";
                for (std::size_t i = 0; i < curve.size(); ++i) csv += std::to_string(i + 1) + "," + fmt(curve[i]) + "\n";
                write_atomic(fs::path(out_dir) / "cv_curve.csv", csv);
            }
            std::cout << "trained " << selected << " trees -> " << path.string() << "\n";
        } else if (*eval) {
            Labeled labeled;
            if (input.empty()) {
                Corpus corpus;
                const cd_synth_config config = eval_synth.resolved(seed, half_width);
                check(cd_corpus_synthesize(&config, corpus.out()), "synth");
                check(cd_corpus_label(corpus.get(), layout.c_str(), half_width, labeled.out()), "label");
            } else {
                load_labeled(input, layout, half_width, labeled);
            }
            exp.forest = eval_forest.params;
            exp.seed = seed;
            exp.sample_level_split = sample_split ? 1 : 0;
            ReportHandle report;
            check(cd_experiment_run(labeled.get(), &exp, report.out()), "eval");
            ensure_dir(out_dir);
            check(cd_report_write(report.get(), out_dir.c_str()), out_dir);
            cd_report_summary s{};
            check(cd_report_summary_get(report.get(), &s), "summary");
            std::cout << "runs=" << s.n_runs << " mean_accuracy=" << fmt(s.mean_accuracy)
                      << " mean_cost=" << fmt(s.mean_cost) << " tn=" << s.tn << " fp=" << s.fp << " fn=" << s.fn
                      << " tp=" << s.tp << " -> " << out_dir << "\n";
        } else if (*stream) {
            Forest forest;
            check(cd_forest_load(model.c_str(), forest.out()), model);
            Stream online;
            check(cd_stream_create(forest.get(), capacity, online.out()), "stream");

            std::ifstream file;
            if (!input.empty() && input != "-") {
                file.open(input);
                if (!file) throw CliError{kExitData, "cannot open " + input};
            }
            std::istream& in = file.is_open() ? static_cast<std::istream&>(file) : std::cin;
            const auto start = std::chrono::steady_clock::now();
            std::string line;
            std::size_t line_no = 0;
            std::uint64_t rows = 0;
            std::vector<char> buf(256);
            while (std::getline(in, line)) {
                ++line_no;
                if (line.empty() || line == "\r") continue;
                if (line_no == 1 && cd_is_recording_header(line.c_str())) continue;
                cd_sample sample{};
                check(cd_parse_recording_row(line.c_str(), &sample), "line " + std::to_string(line_no));
                if (rate > 0.0) {
                    std::this_thread::sleep_until(start + std::chrono::duration<double>(static_cast<double>(rows) / rate));
                }
                ++rows;
                cd_decision d{};
                check(cd_stream_step(online.get(), &sample, &d), "line " + std::to_string(line_no));
                std::size_t needed = 0;
                check(cd_decision_json(&d, buf.data(), buf.size(), &needed), "decision");
                std::cout << buf.data() << '\n';
            }
            std::cout.flush();
        } else if (*benchcmd) {
            Forest forest;
            if (!model.empty()) {
                check(cd_forest_load(model.c_str(), forest.out()), model);
            } else {
                cd_synth_config config;
                cd_synth_config_default(&config);
                config.seed = seed;
                Corpus corpus;
                check(cd_corpus_synthesize(&config, corpus.out()), "synth");
                Labeled labeled;
                check(cd_corpus_label(corpus.get(), nullptr, 1.0, labeled.out()), "label");
                cd_forest_params params = bench_forest.params;
                params.seed = seed;
                check(cd_forest_train(labeled.get(), &params, 0, forest.out(), nullptr, nullptr), "train");
            }
            std::vector<cd_sample> samples;
            if (!input.empty()) {
                std::ifstream file(input);
                if (!file) throw CliError{kExitData, "cannot open " + input};
                samples = read_recording(file, input);
            } else {
                cd_synth_config config;
                cd_synth_config_default(&config);
                config.seed = seed ^ 0x5eedULL;
                config.n_subjects = 2;
                config.duration = static_cast<double>(capacity + bench_runs) / config.rate + 1.0;
                Corpus corpus;
                check(cd_corpus_synthesize(&config, corpus.out()), "synth");
                samples.resize(cd_corpus_sample_count(corpus.get(), 0));
                for (std::size_t i = 0; i < samples.size(); ++i) {
                    check(cd_corpus_get_sample(corpus.get(), 0, i, &samples[i]), "sample");
                }
            }
            cd_bench_result r{};
            check(cd_bench(forest.get(), samples.data(), samples.size(), bench_runs, capacity, &r), "bench");
            std::ostringstream js;
            js << "{\"n_runs\":" << r.n_runs << ",\"queue_capacity\":" << r.capacity << ",\"trees\":"
               << cd_forest_tree_count(forest.get()) << ",\"channels\":" << cd_forest_channel_count(forest.get())
               << ",\"mean_latency_s\":" << fmt(r.mean_latency_s) << ",\"frame_rate\":" << fmt(r.frame_rate)
               << "}";
            std::cout << js.str() << "\n";
            std::cerr << "mean latency " << r.mean_latency_s << " s (~" << static_cast<long long>(r.frame_rate)
                      << " fps)\n";
            if (!out_dir.empty()) {
                ensure_dir(out_dir);
                write_atomic(fs::path(out_dir) / "bench.json", js.str() + "\n");
            }
        } else if (*splitcmd) {
            Labeled labeled;
            load_labeled(input, layout, half_width, labeled);
            ensure_dir(out_dir);
            const auto path = (fs::path(out_dir) / "split.json").string();
            check(cd_labeled_write_split(labeled.get(), train_fraction, seed, path.c_str()), path);
            std::cout << "wrote " << path << "\n";
        }
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    }
    return 0;
}
