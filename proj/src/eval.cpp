#include "confdetect/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "confdetect/error.hpp"
#include "confdetect/io.hpp"
#include "confdetect/random.hpp"

namespace confdetect {

void ConfusionMatrix::add(Label truth, Label predicted) noexcept {
    if (truth == Label::ConfusionEvent) {
        (predicted == Label::ConfusionEvent ? tp : fn) += 1;
    } else {
        (predicted == Label::ConfusionEvent ? fp : tn) += 1;
    }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) noexcept {
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    tp += o.tp;
    return *this;
}

double accuracy(const ConfusionMatrix& m) {
    if (m.total() == 0) fail(ErrorKind::InvalidArgument, "accuracy of an empty confusion matrix");
    return static_cast<double>(m.tp + m.tn) / static_cast<double>(m.total());
}

double misclassification_cost(const ConfusionMatrix& m) {
    if (m.total() == 0) fail(ErrorKind::InvalidArgument, "cost of an empty confusion matrix");
    return static_cast<double>(m.fp + m.fn) / static_cast<double>(m.total());
}

void ExperimentConfig::validate() const {
    if (n_runs == 0) fail(ErrorKind::InvalidArgument, "n_runs must be at least 1");
    if (test_picks_per_class == 0) fail(ErrorKind::InvalidArgument, "test picks per class must be at least 1");
    if (cv_folds == 1) fail(ErrorKind::InvalidArgument, "cv folds must be 0 (off) or >= 2");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        fail(ErrorKind::InvalidArgument, "train fraction must lie in (0, 1)");
    }
    if (forest.n_trees == 0) fail(ErrorKind::InvalidArgument, "n_trees must be at least 1");
}

std::uint64_t run_seed(std::uint64_t master_seed, std::size_t index) noexcept {
    return derive_seed(derive_seed(master_seed, "run"), index);
}

namespace {

std::vector<LabeledSample> gather(std::span<const LabeledSample> corpus, std::span<const std::size_t> idx) {
    std::vector<LabeledSample> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(corpus[i]);
    return out;
}

std::vector<std::size_t> pick_class(std::span<const LabeledSample> pool, Label label, std::size_t n, Rng& rng) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool[i].label == label) candidates.push_back(i);
    }
    if (candidates.size() < n) {
        fail(ErrorKind::Insufficient, "held-out pool has " + std::to_string(candidates.size()) + " " +
                                          std::string(label_name(label)) + " samples, " + std::to_string(n) +
                                          " requested");
    }
    std::vector<std::size_t> out;
    out.reserve(n);
    for (std::size_t k : rng.sample_without_replacement(candidates.size(), n)) out.push_back(candidates[k]);
    return out;
}

ConfusionMatrix tally(const RandomForest& forest, std::span<const LabeledSample> picks) {
    ConfusionMatrix m;
    for (const auto& s : picks) m.add(s.label, forest.predict(s.features).label);
    return m;
}

}  // namespace

std::vector<LossPoint> cv_loss_curve(const BalancedSet& balanced, const FeatureLayout& layout,
                                     const ForestParams& params, std::size_t folds, std::uint64_t seed,
                                     unsigned threads) {
    const auto parts = kfold(balanced, folds, derive_seed(seed, "folds"));
    std::vector<double> mean_cost(params.n_trees, 0.0);
    for (std::size_t f = 0; f < parts.size(); ++f) {
        const auto fold_train = gather(balanced.samples, parts[f].train);
        const auto fold_val = gather(balanced.samples, parts[f].validation);
        ForestParams fold_params = params;
        fold_params.seed = derive_seed(derive_seed(seed, "fold-forest"), f);
        const RandomForest fold_forest = train_forest(fold_train, layout, fold_params, threads);
        const auto curve = loss_curve(fold_forest, fold_val);
        for (std::size_t t = 0; t < curve.size(); ++t) mean_cost[t] += curve[t].cost;
    }
    std::vector<LossPoint> out;
    for (std::size_t t = 0; t < mean_cost.size(); ++t) {
        out.push_back({t + 1, mean_cost[t] / static_cast<double>(parts.size())});
    }
    return out;
}

std::size_t best_tree_count(const std::vector<LossPoint>& curve) {
    if (curve.empty()) fail(ErrorKind::InvalidArgument, "empty loss curve");
    std::size_t best = 0;
    for (std::size_t t = 1; t < curve.size(); ++t) {
        if (curve[t].cost < curve[best].cost) best = t;
    }
    return curve[best].n_trees;
}

TrainedModel train_model(std::span<const LabeledSample> labeled, const FeatureLayout& layout,
                         const ForestParams& params, std::size_t cv_folds, unsigned threads) {
    if (cv_folds == 1) fail(ErrorKind::InvalidArgument, "cv folds must be 0 (off) or >= 2");
    const BalancedSet balanced = balance(labeled, derive_seed(params.seed, "balance"));
    if (balanced.samples.empty()) fail(ErrorKind::Insufficient, "training corpus has no event samples");
    RandomForest forest = train_forest(balanced.samples, layout, params, threads);
    TrainedModel model{std::move(forest), balanced.samples.size(), {}};
    if (cv_folds > 0) {
        model.cv_curve = cv_loss_curve(balanced, layout, params, cv_folds, derive_seed(params.seed, "cv"), threads);
        model.forest = model.forest.prefix(best_tree_count(model.cv_curve));
    }
    return model;
}

RunRecord run_once(std::span<const LabeledSample> corpus, const FeatureLayout& layout,
                   const ExperimentConfig& config, std::uint64_t seed, std::size_t run_index) {
    config.validate();
    RunRecord rec;
    rec.run = run_index;
    rec.seed = seed;

    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;
    Split split;
    if (config.split_mode == SplitMode::Participant) {
        std::set<std::string> subjects;
        for (const auto& s : corpus) subjects.insert(s.subject_id);
        split = participant_split({subjects.begin(), subjects.end()}, config.train_fraction,
                                  derive_seed(seed, "split"));
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            (split.is_train(corpus[i].subject_id) ? train_idx : test_idx).push_back(i);
        }
        rec.train_subjects = split.train_subjects;
        rec.test_subjects = split.test_subjects;
    } else {
        std::vector<std::size_t> all(corpus.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        Rng rng(derive_seed(seed, "sample-split"));
        rng.shuffle(all);
        const auto n_train = static_cast<std::size_t>(std::round(config.train_fraction * static_cast<double>(all.size())));
        train_idx.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
        test_idx.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train), all.end());
        std::sort(train_idx.begin(), train_idx.end());
        std::sort(test_idx.begin(), test_idx.end());
        std::set<std::string> train_ids, test_ids;
        for (std::size_t i : train_idx) train_ids.insert(corpus[i].subject_id);
        for (std::size_t i : test_idx) test_ids.insert(corpus[i].subject_id);
        rec.train_subjects.assign(train_ids.begin(), train_ids.end());
        rec.test_subjects.assign(test_ids.begin(), test_ids.end());
    }

    const std::vector<LabeledSample> train_pool = gather(corpus, train_idx);
    const std::vector<LabeledSample> test_pool = gather(corpus, test_idx);

    BalancedSet balanced = balance(train_pool, derive_seed(seed, "balance"));
    if (balanced.samples.empty()) fail(ErrorKind::Insufficient, "training subjects have no event samples");
    rec.balanced_size = balanced.samples.size();

    Rng pick_rng(derive_seed(seed, "picks"));
    std::vector<LabeledSample> picks;
    for (Label l : {Label::NoEvent, Label::ConfusionEvent}) {
        for (std::size_t i : pick_class(test_pool, l, config.test_picks_per_class, pick_rng)) {
            picks.push_back(test_pool[i]);
        }
    }
    if (config.split_mode == SplitMode::Participant) {
        for (const auto& p : picks) {
            if (!split.is_test(p.subject_id) || split.is_train(p.subject_id)) {
                throw std::logic_error("prediction drawn from training subject " + p.subject_id);
            }
            ++rec.audited_predictions;
        }
    }

    ForestParams params = config.forest;
    params.seed = derive_seed(seed, "forest");
    const RandomForest forest = train_forest(balanced.samples, layout, params, config.threads);

    rec.matrix = tally(forest, picks);
    rec.accuracy = accuracy(rec.matrix);
    rec.cost = misclassification_cost(rec.matrix);
    rec.test_curve = loss_curve(forest, picks);

    if (config.cv_folds > 0) {
        rec.cv_curve = cv_loss_curve(balanced, layout, params, config.cv_folds, derive_seed(seed, "cv"), config.threads);
        rec.cv_best_trees = best_tree_count(rec.cv_curve);
        // Retraining on the full balanced set with the selected tree count
        // reproduces exactly the first cv_best_trees trees of `forest`.
        rec.cv_matrix = tally(forest.prefix(*rec.cv_best_trees), picks);
    }
    return rec;
}

Report run_experiment(std::span<const LabeledSample> corpus, const FeatureLayout& layout,
                      const ExperimentConfig& config) {
    config.validate();
    Report report;
    const std::size_t n_trees = config.forest.n_trees;
    std::vector<double> test_curve(n_trees, 0.0);
    std::vector<double> cv_curve(n_trees, 0.0);
    double cv_acc_sum = 0.0;
    double acc_sum = 0.0;
    double cost_sum = 0.0;

    for (std::size_t r = 0; r < config.n_runs; ++r) {
        RunRecord rec = run_once(corpus, layout, config, run_seed(config.seed, r), r);
        report.aggregate += rec.matrix;
        acc_sum += rec.accuracy;
        cost_sum += rec.cost;
        for (const auto& p : rec.test_curve) test_curve[p.n_trees - 1] += p.cost;
        for (const auto& p : rec.cv_curve) cv_curve[p.n_trees - 1] += p.cost;
        if (rec.cv_matrix) {
            if (!report.cv_aggregate) report.cv_aggregate = ConfusionMatrix{};
            *report.cv_aggregate += *rec.cv_matrix;
            cv_acc_sum += accuracy(*rec.cv_matrix);
        }
        report.runs.push_back(std::move(rec));
    }

    const double runs = static_cast<double>(config.n_runs);
    report.mean_accuracy = acc_sum / runs;
    report.mean_cost = cost_sum / runs;
    for (std::size_t t = 0; t < n_trees; ++t) report.test_curve.push_back({t + 1, test_curve[t] / runs});
    if (config.cv_folds > 0) {
        for (std::size_t t = 0; t < n_trees; ++t) report.cv_curve.push_back({t + 1, cv_curve[t] / runs});
        report.cv_mean_accuracy = cv_acc_sum / runs;
    }
    return report;
}

namespace {

using nlohmann::json;

json matrix_json(const ConfusionMatrix& m) { return json{{"tn", m.tn}, {"fp", m.fp}, {"fn", m.fn}, {"tp", m.tp}}; }

json curve_json(const std::vector<LossPoint>& curve) {
    json out = json::array();
    for (const auto& p : curve) out.push_back(json{{"n_trees", p.n_trees}, {"cost", p.cost}});
    return out;
}

}  // namespace

std::string report_to_json(const Report& report, const ExperimentConfig& config, const FeatureLayout& layout) {
    json runs = json::array();
    for (const auto& r : report.runs) {
        json jr{{"run", r.run},
                {"seed", r.seed},
                {"train_subjects", r.train_subjects},
                {"test_subjects", r.test_subjects},
                {"balanced_size", r.balanced_size},
                {"matrix", matrix_json(r.matrix)},
                {"accuracy", r.accuracy},
                {"cost", r.cost}};
        if (r.cv_best_trees) {
            jr["cv_best_trees"] = *r.cv_best_trees;
            jr["cv_matrix"] = matrix_json(*r.cv_matrix);
        }
        runs.push_back(std::move(jr));
    }
    const auto& fp = config.forest;
    json jconfig{{"n_runs", config.n_runs},
                 {"test_picks_per_class", config.test_picks_per_class},
                 {"train_fraction", config.train_fraction},
                 {"cv_folds", config.cv_folds},
                 {"seed", config.seed},
                 {"split_mode", config.split_mode == SplitMode::Participant ? "participant" : "sample"},
                 {"layout", layout.to_string()},
                 {"n_trees", fp.n_trees},
                 {"min_leaf", fp.min_leaf},
                 {"bootstrap", fp.bootstrap},
                 {"max_depth", fp.max_depth ? json(*fp.max_depth) : json(nullptr)},
                 {"features_per_split", fp.resolved_features(layout.size())}};
    json j{{"config", jconfig},
           {"aggregate", matrix_json(report.aggregate)},
           {"aggregate_accuracy", accuracy(report.aggregate)},
           {"mean_accuracy", report.mean_accuracy},
           {"mean_cost", report.mean_cost},
           {"loss_vs_trees", json{{"test", curve_json(report.test_curve)}, {"cv", curve_json(report.cv_curve)}}},
           {"runs", runs}};
    if (report.cv_aggregate) {
        j["cv"] = json{{"aggregate", matrix_json(*report.cv_aggregate)}, {"mean_accuracy", report.cv_mean_accuracy}};
    }
    return j.dump(2) + "\n";
}

std::string confusion_matrix_csv(const ConfusionMatrix& m) {
    std::ostringstream os;
    os << "tn,fp,fn,tp\n" << m.tn << ',' << m.fp << ',' << m.fn << ',' << m.tp << '\n';
    return os.str();
}

std::string loss_vs_trees_csv(const Report& report) {
    std::ostringstream os;
    os << "mode,n_trees,mean_cost\n";
    for (const auto& p : report.test_curve) os << "test," << p.n_trees << ',' << io::format_double(p.cost) << '\n';
    for (const auto& p : report.cv_curve) os << "cv," << p.n_trees << ',' << io::format_double(p.cost) << '\n';
    return os.str();
}

void write_report(const Report& report, const ExperimentConfig& config, const FeatureLayout& layout,
                  const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::Io, "cannot create " + dir + ": " + ec.message());
    io::write_file_atomic(fs::path(dir) / "report.json", report_to_json(report, config, layout));
    io::write_file_atomic(fs::path(dir) / "confusion_matrix.csv", confusion_matrix_csv(report.aggregate));
    io::write_file_atomic(fs::path(dir) / "loss_vs_trees.csv", loss_vs_trees_csv(report));
}

}  // namespace confdetect
