#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "confdetect/domain.hpp"
#include "confdetect/labeling.hpp"

namespace confdetect {

inline constexpr std::size_t kDefaultTrees = 50;

struct ForestParams {
    std::size_t n_trees = kDefaultTrees;
    std::optional<std::size_t> max_depth;           // unlimited when empty
    std::size_t min_leaf = 1;
    std::optional<std::size_t> features_per_split;  // ceil(sqrt(d)) when empty
    bool bootstrap = true;
    std::uint64_t seed = 0;

    std::size_t resolved_features(std::size_t dims) const;
    /// Throws Error(InvalidArgument) on n_trees == 0, min_leaf == 0 or a
    /// features_per_split outside [1, dims].
    void validate(std::size_t dims) const;

    bool operator==(const ForestParams&) const = default;
};

/// Flat tree node. channel < 0 marks a leaf; internal nodes route x[channel]
/// <= threshold to `left`, everything else to `right`.
struct TreeNode {
    std::int32_t channel = -1;
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::uint32_t n_event = 0;
    std::uint32_t n_noevent = 0;

    bool is_leaf() const noexcept { return channel < 0; }
    /// Majority class; ties go to NoEvent.
    Label leaf_label() const noexcept { return n_event > n_noevent ? Label::ConfusionEvent : Label::NoEvent; }

    bool operator==(const TreeNode&) const = default;
};

class DecisionTree {
public:
    DecisionTree() = default;
    explicit DecisionTree(std::vector<TreeNode> nodes);

    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    const TreeNode& root() const { return nodes_.front(); }
    const TreeNode& leaf_for(std::span<const double> x) const;
    Label predict(std::span<const double> x) const { return leaf_for(x).leaf_label(); }
    std::size_t depth() const;

    bool operator==(const DecisionTree&) const = default;

private:
    std::vector<TreeNode> nodes_;
};

/// Seed of tree `index` within a forest seeded with `forest_seed`.
std::uint64_t tree_seed(std::uint64_t forest_seed, std::size_t index) noexcept;

/// CART on Gini impurity over a random feature subset per node. Splits only
/// where the weighted child impurity is strictly lower than the parent's.
DecisionTree train_tree(std::span<const LabeledSample> samples, const ForestParams& params, std::uint64_t seed);

struct Prediction {
    Label label = Label::NoEvent;
    double vote_fraction = 0.0;  // share of trees voting ConfusionEvent
    std::size_t event_votes = 0;
};

class RandomForest {
public:
    /// params.n_trees is overwritten with the number of trees given.
    RandomForest(FeatureLayout layout, ForestParams params, std::vector<DecisionTree> trees);

    const FeatureLayout& layout() const noexcept { return layout_; }
    const ForestParams& params() const noexcept { return params_; }
    const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
    std::size_t size() const noexcept { return trees_.size(); }

    /// Majority vote; an exact tie is NoEvent. Error(InvalidArgument) on a
    /// width mismatch.
    Prediction predict(std::span<const double> x) const;

    /// Forest made of the first n trees, identical to retraining with
    /// n_trees = n on the same data and seed.
    RandomForest prefix(std::size_t n) const;

private:
    FeatureLayout layout_;
    ForestParams params_;
    std::vector<DecisionTree> trees_;
};

/// Each tree sees its own bootstrap resample (size |samples|) drawn from its
/// derived seed. threads = 0 uses the hardware concurrency. Tree order and the
/// result are independent of the thread count.
RandomForest train_forest(std::span<const LabeledSample> samples, const FeatureLayout& layout,
                          const ForestParams& params, unsigned threads = 0);

struct LossPoint {
    std::size_t n_trees = 0;
    double cost = 0.0;  // misclassified fraction

    bool operator==(const LossPoint&) const = default;
};

/// Misclassification cost of the majority vote over each requested tree
/// prefix. An empty request evaluates every prefix 1..size().
std::vector<LossPoint> loss_curve(const RandomForest& forest, std::span<const LabeledSample> eval_samples,
                                  std::span<const std::size_t> at_tree_counts = {});

inline constexpr int kForestFormatVersion = 1;

std::string serialize_forest(const RandomForest& forest);
/// Error(VersionMismatch) or Error(CorruptPayload).
RandomForest deserialize_forest(std::string_view payload);

}  // namespace confdetect
