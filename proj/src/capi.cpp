#include "confdetect/confdetect.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "confdetect/dataset.hpp"
#include "confdetect/error.hpp"
#include "confdetect/eval.hpp"
#include "confdetect/forest.hpp"
#include "confdetect/ingest.hpp"
#include "confdetect/io.hpp"
#include "confdetect/labeling.hpp"
#include "confdetect/stream.hpp"
#include "confdetect/synth.hpp"

using namespace confdetect;

struct cd_corpus {
    std::vector<Session> sessions;
};

struct cd_labeled {
    LabeledCorpus corpus;
};

struct cd_forest {
    std::shared_ptr<const RandomForest> forest;
};

struct cd_stream {
    OnlineClassifier online;
};

struct cd_report {
    Report report;
    ExperimentConfig config;
    FeatureLayout layout;
};

namespace {

thread_local std::string g_last_error;

cd_status status_of(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return CD_ERR_INVALID_ARGUMENT;
        case ErrorKind::Data: return CD_ERR_DATA;
        case ErrorKind::Io: return CD_ERR_IO;
        case ErrorKind::VersionMismatch: return CD_ERR_VERSION;
        case ErrorKind::CorruptPayload: return CD_ERR_CORRUPT;
        case ErrorKind::Insufficient: return CD_ERR_INSUFFICIENT;
    }
    return CD_ERR_INTERNAL;
}

template <typename F>
cd_status guarded(F&& body) {
    try {
        g_last_error.clear();
        body();
        return CD_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return CD_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return CD_ERR_INTERNAL;
    }
}

void require(const void* p, const char* what) {
    if (!p) fail(ErrorKind::InvalidArgument, std::string(what) + " must not be null");
}

GazeSample from_c(const cd_sample& c) {
    GazeSample s;
    s.timestamp = c.timestamp;
    s.por_x = c.por_x;
    s.por_y = c.por_y;
    s.pupil_pos_x = c.pupil_pos_x;
    s.pupil_pos_y = c.pupil_pos_y;
    s.pupil_diam = c.pupil_diam;
    s.gyro_x = c.gyro_x;
    s.gyro_y = c.gyro_y;
    s.gyro_z = c.gyro_z;
    s.acc_x = c.acc_x;
    s.acc_y = c.acc_y;
    s.acc_z = c.acc_z;
    s.valid = c.valid != 0;
    return s;
}

cd_sample to_c(const GazeSample& s) {
    return {s.timestamp, s.por_x,  s.por_y,  s.pupil_pos_x, s.pupil_pos_y, s.pupil_diam, s.gyro_x,
            s.gyro_y,    s.gyro_z, s.acc_x,  s.acc_y,       s.acc_z,       s.valid ? 1 : 0};
}

SynthConfig from_c(const cd_synth_config& c) {
    SynthConfig s;
    s.n_subjects = c.n_subjects;
    s.duration = c.duration;
    s.rate = c.rate;
    s.events_per_session = c.events_per_session;
    s.half_width = c.half_width;
    s.effect = {c.pupil_diam_delta, c.por_scatter_gain, c.head_motion_gain};
    s.subject_variation = c.subject_variation;
    s.drift = c.drift;
    s.drift_time_constant = c.drift_time_constant;
    s.dropout_rate = c.dropout_rate;
    s.seed = c.seed;
    return s;
}

ForestParams from_c(const cd_forest_params& c) {
    ForestParams p;
    p.n_trees = c.n_trees;
    if (c.max_depth > 0) p.max_depth = c.max_depth;
    p.min_leaf = c.min_leaf;
    if (c.features_per_split > 0) p.features_per_split = c.features_per_split;
    p.bootstrap = c.bootstrap != 0;
    p.seed = c.seed;
    return p;
}

void copy_out(const std::string& text, char* buf, size_t capacity, size_t* needed) {
    if (needed) *needed = text.size() + 1;
    if (!buf || capacity == 0) return;
    if (capacity < text.size() + 1) {
        fail(ErrorKind::InvalidArgument, "buffer of " + std::to_string(capacity) + " bytes is too small, need " +
                                             std::to_string(text.size() + 1));
    }
    std::memcpy(buf, text.c_str(), text.size() + 1);
}

}  // namespace

extern "C" {

const char* cd_version(void) { return "1.0.0"; }

const char* cd_status_name(cd_status status) {
    switch (status) {
        case CD_OK: return "ok";
        case CD_ERR_INVALID_ARGUMENT: return "invalid argument";
        case CD_ERR_DATA: return "data error";
        case CD_ERR_IO: return "io error";
        case CD_ERR_VERSION: return "version mismatch";
        case CD_ERR_CORRUPT: return "corrupt payload";
        case CD_ERR_INSUFFICIENT: return "insufficient data";
        case CD_ERR_INTERNAL: return "internal error";
    }
    return "unknown";
}

const char* cd_last_error(void) { return g_last_error.c_str(); }

void cd_synth_config_default(cd_synth_config* config) {
    if (!config) return;
    const SynthConfig d;
    *config = {d.n_subjects,
               d.duration,
               d.rate,
               d.events_per_session,
               d.half_width,
               d.effect.pupil_diam_delta,
               d.effect.por_scatter_gain,
               d.effect.head_motion_gain,
               d.subject_variation,
               d.drift,
               d.drift_time_constant,
               d.dropout_rate,
               d.seed};
}

void cd_synth_config_null_effect(cd_synth_config* config) {
    if (!config) return;
    const EffectSizes none = EffectSizes::none();
    config->pupil_diam_delta = none.pupil_diam_delta;
    config->por_scatter_gain = none.por_scatter_gain;
    config->head_motion_gain = none.head_motion_gain;
}

cd_status cd_corpus_synthesize(const cd_synth_config* config, cd_corpus** out) {
    return guarded([&] {
        require(config, "config");
        require(out, "out");
        *out = new cd_corpus{generate_corpus(from_c(*config))};
    });
}

cd_status cd_corpus_load_dir(const char* dir, cd_corpus** out) {
    return guarded([&] {
        require(dir, "dir");
        require(out, "out");
        *out = new cd_corpus{load_session_dir(dir)};
    });
}

cd_status cd_corpus_export_dir(const cd_corpus* corpus, const char* dir) {
    return guarded([&] {
        require(corpus, "corpus");
        require(dir, "dir");
        export_session_dir(corpus->sessions, dir);
    });
}

size_t cd_corpus_session_count(const cd_corpus* corpus) { return corpus ? corpus->sessions.size() : 0; }

size_t cd_corpus_sample_count(const cd_corpus* corpus, size_t session) {
    if (!corpus || session >= corpus->sessions.size()) return 0;
    return corpus->sessions[session].samples.size();
}

cd_status cd_corpus_get_sample(const cd_corpus* corpus, size_t session, size_t index, cd_sample* out) {
    return guarded([&] {
        require(corpus, "corpus");
        require(out, "out");
        if (session >= corpus->sessions.size() || index >= corpus->sessions[session].samples.size()) {
            fail(ErrorKind::InvalidArgument, "sample index out of range");
        }
        *out = to_c(corpus->sessions[session].samples[index]);
    });
}

void cd_corpus_free(cd_corpus* corpus) { delete corpus; }

cd_status cd_corpus_label(const cd_corpus* corpus, const char* layout, double half_width, cd_labeled** out) {
    return guarded([&] {
        require(corpus, "corpus");
        require(out, "out");
        const FeatureLayout fl = layout ? FeatureLayout::parse(layout) : FeatureLayout();
        auto labeled = std::make_unique<cd_labeled>(cd_labeled{{fl, {}}});
        for (const auto& s : corpus->sessions) {
            auto part = label_session(s, fl, half_width);
            labeled->corpus.samples.insert(labeled->corpus.samples.end(), std::make_move_iterator(part.begin()),
                                           std::make_move_iterator(part.end()));
        }
        *out = labeled.release();
    });
}

cd_status cd_labeled_read_csv(const char* path, cd_labeled** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        std::ifstream in(path);
        if (!in) fail(ErrorKind::Io, std::string("cannot open ") + path);
        *out = new cd_labeled{read_labeled_csv(in)};
    });
}

cd_status cd_labeled_write_csv(const cd_labeled* labeled, const char* path) {
    return guarded([&] {
        require(labeled, "labeled");
        require(path, "path");
        std::ostringstream os;
        write_labeled_csv(os, labeled->corpus.samples, labeled->corpus.layout);
        io::write_file_atomic(path, os.str());
    });
}

cd_status cd_labeled_counts(const cd_labeled* labeled, size_t* n_event, size_t* n_noevent) {
    return guarded([&] {
        require(labeled, "labeled");
        const ClassCounts c = corpus_counts(labeled->corpus.samples);
        if (n_event) *n_event = c.n_event;
        if (n_noevent) *n_noevent = c.n_noevent;
    });
}

cd_status cd_labeled_write_split(const cd_labeled* labeled, double train_fraction, uint64_t seed, const char* path) {
    return guarded([&] {
        require(labeled, "labeled");
        require(path, "path");
        std::vector<std::string> subjects;
        for (const auto& s : labeled->corpus.samples) {
            if (subjects.empty() || subjects.back() != s.subject_id) subjects.push_back(s.subject_id);
        }
        std::sort(subjects.begin(), subjects.end());
        subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
        io::write_file_atomic(path, split_to_json(participant_split(subjects, train_fraction, seed)) + "\n");
    });
}

void cd_labeled_free(cd_labeled* labeled) { delete labeled; }

void cd_forest_params_default(cd_forest_params* params) {
    if (!params) return;
    *params = {kDefaultTrees, 0, 1, 0, 1, CD_DEFAULT_SEED, 0};
}

cd_status cd_forest_train(const cd_labeled* labeled, const cd_forest_params* params, size_t cv_folds, cd_forest** out,
                          size_t* selected_trees, double* cv_curve) {
    return guarded([&] {
        require(labeled, "labeled");
        require(params, "params");
        require(out, "out");
        TrainedModel model =
            train_model(labeled->corpus.samples, labeled->corpus.layout, from_c(*params), cv_folds, params->threads);
        if (selected_trees) *selected_trees = model.forest.size();
        if (cv_curve) {
            for (const auto& p : model.cv_curve) cv_curve[p.n_trees - 1] = p.cost;
        }
        *out = new cd_forest{std::make_shared<const RandomForest>(std::move(model.forest))};
    });
}

cd_status cd_forest_load(const char* path, cd_forest** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new cd_forest{std::make_shared<const RandomForest>(deserialize_forest(io::read_file(path)))};
    });
}

cd_status cd_forest_from_json(const char* json, size_t length, cd_forest** out) {
    return guarded([&] {
        require(json, "json");
        require(out, "out");
        *out = new cd_forest{std::make_shared<const RandomForest>(deserialize_forest(std::string_view(json, length)))};
    });
}

cd_status cd_forest_save(const cd_forest* forest, const char* path) {
    return guarded([&] {
        require(forest, "forest");
        require(path, "path");
        io::write_file_atomic(path, serialize_forest(*forest->forest) + "\n");
    });
}

size_t cd_forest_tree_count(const cd_forest* forest) { return forest ? forest->forest->size() : 0; }

size_t cd_forest_channel_count(const cd_forest* forest) { return forest ? forest->forest->layout().size() : 0; }

cd_status cd_forest_layout(const cd_forest* forest, char* buf, size_t capacity, size_t* needed) {
    return guarded([&] {
        require(forest, "forest");
        copy_out(forest->forest->layout().to_string(), buf, capacity, needed);
    });
}

cd_status cd_forest_predict(const cd_forest* forest, const double* features, size_t n_features, int* is_event,
                            double* vote_fraction) {
    return guarded([&] {
        require(forest, "forest");
        require(features, "features");
        const Prediction p = forest->forest->predict(std::span<const double>(features, n_features));
        if (is_event) *is_event = p.label == Label::ConfusionEvent ? 1 : 0;
        if (vote_fraction) *vote_fraction = p.vote_fraction;
    });
}

void cd_forest_free(cd_forest* forest) { delete forest; }

int cd_is_recording_header(const char* line) { return line && is_recording_header(line) ? 1 : 0; }

cd_status cd_parse_recording_row(const char* line, cd_sample* out) {
    return guarded([&] {
        require(line, "line");
        require(out, "out");
        *out = to_c(parse_recording_row(line, 0));
    });
}

cd_status cd_stream_create(const cd_forest* forest, size_t capacity, cd_stream** out) {
    return guarded([&] {
        require(forest, "forest");
        require(out, "out");
        *out = new cd_stream{OnlineClassifier(forest->forest, capacity)};
    });
}

cd_status cd_stream_step(cd_stream* stream, const cd_sample* sample, cd_decision* out) {
    return guarded([&] {
        require(stream, "stream");
        require(sample, "sample");
        const StreamDecision d = stream->online.step(from_c(*sample));
        if (out) {
            out->step = d.step;
            out->outcome = d.outcome == Outcome::Warmup    ? CD_OUTCOME_WARMUP
                           : d.outcome == Outcome::NoEvent ? CD_OUTCOME_NO_EVENT
                                                           : CD_OUTCOME_EVENT;
            out->vote_fraction = d.vote_fraction;
            out->latency_s = d.latency_s;
        }
    });
}

cd_status cd_decision_json(const cd_decision* decision, char* buf, size_t capacity, size_t* needed) {
    return guarded([&] {
        require(decision, "decision");
        const char* label = decision->outcome == CD_OUTCOME_EVENT      ? "event"
                            : decision->outcome == CD_OUTCOME_NO_EVENT ? "no_event"
                                                                       : "warmup";
        nlohmann::ordered_json j;
        j["step"] = decision->step;
        j["label"] = label;
        j["vote"] = decision->vote_fraction;
        j["latency_s"] = decision->latency_s;
        copy_out(j.dump(), buf, capacity, needed);
    });
}

size_t cd_stream_occupancy(const cd_stream* stream) { return stream ? stream->online.queue().occupancy() : 0; }

void cd_stream_free(cd_stream* stream) { delete stream; }

cd_status cd_bench(const cd_forest* forest, const cd_sample* samples, size_t n_samples, size_t n_runs, size_t capacity,
                   cd_bench_result* out) {
    return guarded([&] {
        require(forest, "forest");
        require(samples, "samples");
        require(out, "out");
        std::vector<GazeSample> stream;
        stream.reserve(n_samples);
        for (size_t i = 0; i < n_samples; ++i) stream.push_back(from_c(samples[i]));
        const BenchResult r = bench(forest->forest, stream, n_runs, capacity);
        *out = {r.n_runs, r.capacity, r.mean_latency_s, r.frame_rate};
    });
}

void cd_experiment_config_default(cd_experiment_config* config) {
    if (!config) return;
    config->n_runs = kDefaultRuns;
    config->test_picks_per_class = kDefaultTestPicks;
    config->train_fraction = kDefaultTrainFraction;
    config->cv_folds = kDefaultFolds;
    config->sample_level_split = 0;
    config->seed = CD_DEFAULT_SEED;
    cd_forest_params_default(&config->forest);
}

cd_status cd_experiment_run(const cd_labeled* labeled, const cd_experiment_config* config, cd_report** out) {
    return guarded([&] {
        require(labeled, "labeled");
        require(config, "config");
        require(out, "out");
        ExperimentConfig ec;
        ec.n_runs = config->n_runs;
        ec.test_picks_per_class = config->test_picks_per_class;
        ec.train_fraction = config->train_fraction;
        ec.cv_folds = config->cv_folds;
        ec.split_mode = config->sample_level_split ? SplitMode::Sample : SplitMode::Participant;
        ec.seed = config->seed;
        ec.forest = from_c(config->forest);
        ec.threads = config->forest.threads;
        Report report = run_experiment(labeled->corpus.samples, labeled->corpus.layout, ec);
        *out = new cd_report{std::move(report), ec, labeled->corpus.layout};
    });
}

cd_status cd_report_write(const cd_report* report, const char* dir) {
    return guarded([&] {
        require(report, "report");
        require(dir, "dir");
        write_report(report->report, report->config, report->layout, dir);
    });
}

cd_status cd_report_summary_get(const cd_report* report, cd_report_summary* out) {
    return guarded([&] {
        require(report, "report");
        require(out, "out");
        const Report& r = report->report;
        *out = {r.aggregate.tn,   r.aggregate.fp,  r.aggregate.fn,     r.aggregate.tp,
                r.mean_accuracy, r.mean_cost,     r.cv_mean_accuracy, r.runs.size()};
    });
}

void cd_report_free(cd_report* report) { delete report; }

cd_status cd_accuracy(uint64_t tn, uint64_t fp, uint64_t fn, uint64_t tp, double* out) {
    return guarded([&] {
        require(out, "out");
        *out = accuracy(ConfusionMatrix{tn, fp, fn, tp});
    });
}

cd_status cd_write_file_atomic(const char* path, const char* text, size_t length) {
    return guarded([&] {
        require(path, "path");
        require(text, "text");
        io::write_file_atomic(path, std::string_view(text, length));
    });
}

}  // extern "C"
