#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "confdetect/dataset.hpp"
#include "confdetect/forest.hpp"
#include "confdetect/labeling.hpp"

namespace confdetect {

/// NoEvent is the negative class (0), ConfusionEvent the positive class (1).
struct ConfusionMatrix {
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tp = 0;

    std::uint64_t total() const noexcept { return tn + fp + fn + tp; }
    void add(Label truth, Label predicted) noexcept;
    ConfusionMatrix& operator+=(const ConfusionMatrix& o) noexcept;

    bool operator==(const ConfusionMatrix&) const = default;
};

/// (tp + tn) / total. Error(InvalidArgument) on an empty matrix.
double accuracy(const ConfusionMatrix& m);
double misclassification_cost(const ConfusionMatrix& m);

enum class SplitMode {
    Participant,  // whole subjects go to train or test
    Sample,       // pooled samples split at random; leaks subject identity
};

inline constexpr std::size_t kDefaultRuns = 100;
inline constexpr std::size_t kDefaultTestPicks = 1000;

struct ExperimentConfig {
    std::size_t n_runs = kDefaultRuns;
    std::size_t test_picks_per_class = kDefaultTestPicks;
    ForestParams forest;
    double train_fraction = kDefaultTrainFraction;
    std::size_t cv_folds = kDefaultFolds;  // 0 disables the cross-validation approach
    std::uint64_t seed = 0;
    SplitMode split_mode = SplitMode::Participant;
    unsigned threads = 0;

    void validate() const;
};

struct RunRecord {
    std::size_t run = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> train_subjects;
    std::vector<std::string> test_subjects;
    std::size_t balanced_size = 0;
    ConfusionMatrix matrix;
    double accuracy = 0.0;
    double cost = 0.0;
    std::vector<LossPoint> test_curve;
    /// Number of predictions checked to come from held-out subjects.
    std::size_t audited_predictions = 0;

    // Cross-validation approach, present when cv_folds > 0.
    std::optional<std::size_t> cv_best_trees;
    std::optional<ConfusionMatrix> cv_matrix;
    std::vector<LossPoint> cv_curve;  // mean fold validation cost
};

struct Report {
    ConfusionMatrix aggregate;
    double mean_accuracy = 0.0;
    double mean_cost = 0.0;
    std::vector<RunRecord> runs;
    std::vector<LossPoint> test_curve;  // run-averaged
    std::vector<LossPoint> cv_curve;    // run-averaged, empty without CV
    std::optional<ConfusionMatrix> cv_aggregate;
    double cv_mean_accuracy = 0.0;
};

/// Mean k-fold validation cost for every tree prefix 1..params.n_trees.
/// Fold forests are seeded from derive_seed(seed, fold).
std::vector<LossPoint> cv_loss_curve(const BalancedSet& balanced, const FeatureLayout& layout,
                                     const ForestParams& params, std::size_t folds, std::uint64_t seed,
                                     unsigned threads = 0);

/// Smallest tree count reaching the minimum of the curve.
std::size_t best_tree_count(const std::vector<LossPoint>& curve);

struct TrainedModel {
    RandomForest forest;
    std::size_t balanced_size = 0;
    std::vector<LossPoint> cv_curve;  // empty without CV
};

/// Model training outside the experiment protocol: balances the whole
/// corpus, trains params.n_trees trees and, with cv_folds > 0, keeps the
/// prefix whose tree count minimizes the k-fold validation cost.
TrainedModel train_model(std::span<const LabeledSample> labeled, const FeatureLayout& layout,
                         const ForestParams& params, std::size_t cv_folds = 0, unsigned threads = 0);

/// split -> balance -> train -> pick test_picks_per_class held-out samples per
/// class without replacement -> predict -> tally. With cv_folds > 0 the tree
/// count is also selected by k-fold validation on the balanced set.
/// Error(Insufficient) when the held-out pool lacks samples of either class.
RunRecord run_once(std::span<const LabeledSample> corpus, const FeatureLayout& layout,
                   const ExperimentConfig& config, std::uint64_t run_seed, std::size_t run_index = 0);

/// Seed of run `index` under `master_seed`.
std::uint64_t run_seed(std::uint64_t master_seed, std::size_t index) noexcept;

Report run_experiment(std::span<const LabeledSample> corpus, const FeatureLayout& layout,
                      const ExperimentConfig& config);

std::string report_to_json(const Report& report, const ExperimentConfig& config, const FeatureLayout& layout);
std::string confusion_matrix_csv(const ConfusionMatrix& m);
std::string loss_vs_trees_csv(const Report& report);

/// report.json, confusion_matrix.csv and loss_vs_trees.csv in dir.
void write_report(const Report& report, const ExperimentConfig& config, const FeatureLayout& layout,
                  const std::string& dir);

}  // namespace confdetect
