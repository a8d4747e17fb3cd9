#include "confdetect/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

#include <json.hpp>

#include "confdetect/error.hpp"
#include "confdetect/random.hpp"

namespace confdetect {

namespace {

/// Column-major copy of the training features.
struct TrainingMatrix {
    std::size_t rows = 0;
    std::size_t dims = 0;
    std::vector<double> columns;
    std::vector<std::uint8_t> is_event;

    TrainingMatrix(std::span<const LabeledSample> samples, std::size_t expected_dims) {
        rows = samples.size();
        dims = expected_dims;
        columns.resize(rows * dims);
        is_event.resize(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            const auto& s = samples[i];
            if (s.features.size() != dims) {
                fail(ErrorKind::InvalidArgument, "training sample " + std::to_string(i) + " has width " +
                                                     std::to_string(s.features.size()) + ", expected " +
                                                     std::to_string(dims));
            }
            for (std::size_t f = 0; f < dims; ++f) {
                const double v = s.features[f];
                if (!std::isfinite(v)) fail(ErrorKind::Data, "non-finite training feature");
                columns[f * rows + i] = v;
            }
            is_event[i] = s.label == Label::ConfusionEvent ? 1 : 0;
        }
    }

    double at(std::size_t row, std::size_t f) const { return columns[f * rows + row]; }

    /// Row indices ordered by value, per feature; ties by row index.
    void presort() {
        sorted_rows.assign(dims, std::vector<std::uint32_t>(rows));
        for (std::size_t f = 0; f < dims; ++f) {
            auto& ord = sorted_rows[f];
            for (std::size_t r = 0; r < rows; ++r) ord[r] = static_cast<std::uint32_t>(r);
            const double* col = &columns[f * rows];
            std::sort(ord.begin(), ord.end(), [col](std::uint32_t a, std::uint32_t b) {
                return col[a] < col[b] || (col[a] == col[b] && a < b);
            });
        }
    }

    std::vector<std::vector<std::uint32_t>> sorted_rows;
};

struct SplitChoice {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double score = 0.0;
};

// Sum of squared class counts over size, per side. Maximizing it is the same
// as minimizing the size-weighted Gini impurity of the two children.
inline double purity_score(double e, double o, double n) { return (e * e + o * o) / n; }

/// Grows one tree over a list of row positions (a bootstrap resample may
/// repeat rows). Every feature keeps its own ordering of the positions, and
/// each node owns the same [begin, end) slice in all orderings. Splitting
/// stable-partitions every ordering, so no node ever re-sorts.
class TreeBuilder {
public:
    TreeBuilder(const TrainingMatrix& data, const ForestParams& params, Rng& rng)
        : data_(data), params_(params), rng_(rng), n_features_(params.resolved_features(data.dims)) {}

    DecisionTree build(const std::vector<std::size_t>& rows) {
        const std::size_t n = rows.size();
        const std::size_t dims = data_.dims;
        values_.assign(dims, std::vector<double>(n));
        is_event_.resize(n);
        for (std::size_t p = 0; p < n; ++p) {
            is_event_[p] = data_.is_event[rows[p]];
            for (std::size_t f = 0; f < dims; ++f) values_[f][p] = data_.at(rows[p], f);
        }
        // Expand the presorted row orders into position orders: each row
        // contributes its bootstrap copies in increasing position.
        std::vector<std::uint32_t> first(data_.rows + 1, 0);
        for (std::size_t r : rows) ++first[r + 1];
        for (std::size_t r = 0; r < data_.rows; ++r) first[r + 1] += first[r];
        std::vector<std::uint32_t> by_row(n);
        {
            std::vector<std::uint32_t> fill(first.begin(), first.end() - 1);
            for (std::size_t p = 0; p < n; ++p) by_row[fill[rows[p]]++] = static_cast<std::uint32_t>(p);
        }
        order_.assign(dims, std::vector<std::uint32_t>(n));
        for (std::size_t f = 0; f < dims; ++f) {
            auto& ord = order_[f];
            std::size_t k = 0;
            for (std::uint32_t r : data_.sorted_rows[f]) {
                for (std::uint32_t i = first[r]; i < first[r + 1]; ++i) ord[k++] = by_row[i];
            }
        }
        goes_left_.resize(n);
        buffer_.resize(n);

        nodes_.clear();
        nodes_.emplace_back();
        struct Work {
            std::size_t begin, end, depth, node;
        };
        std::vector<Work> stack{{0, n, 0, 0}};
        while (!stack.empty()) {
            const Work w = stack.back();
            stack.pop_back();

            std::uint32_t n_event = 0;
            for (std::size_t i = w.begin; i < w.end; ++i) n_event += is_event_[order_[0][i]];
            const auto count = static_cast<std::uint32_t>(w.end - w.begin);
            nodes_[w.node].n_event = n_event;
            nodes_[w.node].n_noevent = count - n_event;

            const bool pure = n_event == 0 || n_event == count;
            const bool depth_capped = params_.max_depth && w.depth >= *params_.max_depth;
            if (pure || depth_capped || count < 2 * params_.min_leaf) continue;

            const SplitChoice choice = best_split(w.begin, w.end, n_event);
            if (!choice.found) continue;
            const std::size_t mid = partition(w.begin, w.end, choice);

            const auto left = static_cast<std::uint32_t>(nodes_.size());
            nodes_.emplace_back();
            nodes_.emplace_back();
            TreeNode& node = nodes_[w.node];
            node.channel = static_cast<std::int32_t>(choice.feature);
            node.threshold = choice.threshold;
            node.left = left;
            node.right = left + 1;
            // Right pushed first so the left subtree is laid out first.
            stack.push_back({mid, w.end, w.depth + 1, left + 1});
            stack.push_back({w.begin, mid, w.depth + 1, left});
        }
        return DecisionTree(std::move(nodes_));
    }

private:
    SplitChoice best_split(std::size_t begin, std::size_t end, std::uint32_t n_event) {
        const std::size_t n = end - begin;
        const auto total = static_cast<double>(n);
        const double parent = purity_score(n_event, total - n_event, total);
        SplitChoice best;
        best.score = parent + parent * 1e-12;

        for (std::size_t f : rng_.sample_without_replacement(data_.dims, n_features_)) {
            const auto& ord = order_[f];
            const auto& v = values_[f];
            double left_event = 0.0;
            for (std::size_t i = begin; i + 1 < end; ++i) {
                left_event += is_event_[ord[i]];
                const double a = v[ord[i]];
                const double b = v[ord[i + 1]];
                if (!(a < b)) continue;
                const std::size_t n_left = i + 1 - begin;
                if (n_left < params_.min_leaf || n - n_left < params_.min_leaf) continue;
                const double nl = static_cast<double>(n_left);
                const double nr = total - nl;
                const double right_event = n_event - left_event;
                const double score =
                    purity_score(left_event, nl - left_event, nl) + purity_score(right_event, nr - right_event, nr);
                if (score > best.score) {
                    double t = a + (b - a) / 2.0;
                    if (!(t < b)) t = a;
                    best = {true, f, t, score};
                }
            }
        }
        return best;
    }

    std::size_t partition(std::size_t begin, std::size_t end, const SplitChoice& choice) {
        const auto& v = values_[choice.feature];
        std::size_t n_left = 0;
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint32_t p = order_[0][i];
            goes_left_[p] = v[p] <= choice.threshold ? 1 : 0;
            n_left += goes_left_[p];
        }
        for (auto& ord : order_) {
            std::size_t l = begin;
            std::size_t r = 0;
            for (std::size_t i = begin; i < end; ++i) {
                const std::uint32_t p = ord[i];
                if (goes_left_[p]) {
                    ord[l++] = p;
                } else {
                    buffer_[r++] = p;
                }
            }
            std::copy(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(r),
                      ord.begin() + static_cast<std::ptrdiff_t>(l));
        }
        return begin + n_left;
    }

    const TrainingMatrix& data_;
    const ForestParams& params_;
    Rng& rng_;
    std::size_t n_features_;
    std::vector<std::vector<double>> values_;         // per feature, by position
    std::vector<std::uint8_t> is_event_;              // by position
    std::vector<std::vector<std::uint32_t>> order_;   // per feature, positions sorted by value
    std::vector<std::uint8_t> goes_left_;
    std::vector<std::uint32_t> buffer_;
    std::vector<TreeNode> nodes_;
};

DecisionTree grow(const TrainingMatrix& data, const ForestParams& params, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::size_t> rows(data.rows);
    if (params.bootstrap) {
        for (auto& r : rows) r = rng.below(data.rows);
    } else {
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    }
    TreeBuilder builder(data, params, rng);
    return builder.build(rows);
}

}  // namespace

std::size_t ForestParams::resolved_features(std::size_t dims) const {
    if (features_per_split) return *features_per_split;
    return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(dims))));
}

void ForestParams::validate(std::size_t dims) const {
    if (n_trees == 0) fail(ErrorKind::InvalidArgument, "n_trees must be at least 1");
    if (min_leaf == 0) fail(ErrorKind::InvalidArgument, "min_leaf must be at least 1");
    const std::size_t m = resolved_features(dims);
    if (m < 1 || m > dims) {
        fail(ErrorKind::InvalidArgument,
             "features_per_split must lie in [1, " + std::to_string(dims) + "], got " + std::to_string(m));
    }
}

DecisionTree::DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) fail(ErrorKind::InvalidArgument, "tree without nodes");
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
    const TreeNode* node = &nodes_.front();
    while (!node->is_leaf()) {
        node = &nodes_[x[static_cast<std::size_t>(node->channel)] <= node->threshold ? node->left : node->right];
    }
    return *node;
}

std::size_t DecisionTree::depth() const {
    std::size_t deepest = 0;
    std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        const auto [id, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        if (!nodes_[id].is_leaf()) {
            stack.emplace_back(nodes_[id].left, d + 1);
            stack.emplace_back(nodes_[id].right, d + 1);
        }
    }
    return deepest;
}

std::uint64_t tree_seed(std::uint64_t forest_seed, std::size_t index) noexcept {
    return derive_seed(derive_seed(forest_seed, "tree"), index);
}

DecisionTree train_tree(std::span<const LabeledSample> samples, const ForestParams& params, std::uint64_t seed) {
    if (samples.empty()) fail(ErrorKind::InvalidArgument, "cannot train a tree on an empty training set");
    const std::size_t dims = samples.front().features.size();
    if (dims == 0) fail(ErrorKind::InvalidArgument, "training samples have no features");
    params.validate(dims);
    TrainingMatrix data(samples, dims);
    ForestParams single = params;
    single.bootstrap = false;
    data.presort();
    return grow(data, single, seed);
}

RandomForest::RandomForest(FeatureLayout layout, ForestParams params, std::vector<DecisionTree> trees)
    : layout_(std::move(layout)), params_(params), trees_(std::move(trees)) {
    if (trees_.empty()) fail(ErrorKind::InvalidArgument, "forest without trees");
    params_.n_trees = trees_.size();
}

Prediction RandomForest::predict(std::span<const double> x) const {
    if (x.size() != layout_.size()) {
        fail(ErrorKind::InvalidArgument, "feature vector has width " + std::to_string(x.size()) + ", forest expects " +
                                             std::to_string(layout_.size()));
    }
    Prediction p;
    for (const auto& tree : trees_) {
        if (tree.predict(x) == Label::ConfusionEvent) ++p.event_votes;
    }
    p.vote_fraction = static_cast<double>(p.event_votes) / static_cast<double>(trees_.size());
    p.label = 2 * p.event_votes > trees_.size() ? Label::ConfusionEvent : Label::NoEvent;
    return p;
}

RandomForest RandomForest::prefix(std::size_t n) const {
    if (n == 0 || n > trees_.size()) {
        fail(ErrorKind::InvalidArgument,
             "prefix size " + std::to_string(n) + " outside [1, " + std::to_string(trees_.size()) + "]");
    }
    ForestParams p = params_;
    p.n_trees = n;
    return RandomForest(layout_, p, std::vector<DecisionTree>(trees_.begin(), trees_.begin() + static_cast<std::ptrdiff_t>(n)));
}

RandomForest train_forest(std::span<const LabeledSample> samples, const FeatureLayout& layout,
                          const ForestParams& params, unsigned threads) {
    if (samples.empty()) fail(ErrorKind::InvalidArgument, "cannot train a forest on an empty training set");
    params.validate(layout.size());
    TrainingMatrix data(samples, layout.size());
    data.presort();

    std::vector<DecisionTree> trees(params.n_trees);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, params.n_trees));

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < params.n_trees; i = next++) {
            trees[i] = grow(data, params, tree_seed(params.seed, i));
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    return RandomForest(layout, params, std::move(trees));
}

std::vector<LossPoint> loss_curve(const RandomForest& forest, std::span<const LabeledSample> eval_samples,
                                  std::span<const std::size_t> at_tree_counts) {
    const std::size_t total = forest.size();
    std::vector<std::size_t> counts(at_tree_counts.begin(), at_tree_counts.end());
    if (counts.empty()) {
        for (std::size_t n = 1; n <= total; ++n) counts.push_back(n);
    }
    for (std::size_t n : counts) {
        if (n == 0 || n > total) {
            fail(ErrorKind::InvalidArgument,
                 "tree prefix " + std::to_string(n) + " outside [1, " + std::to_string(total) + "]");
        }
    }
    if (eval_samples.empty()) fail(ErrorKind::InvalidArgument, "loss curve needs at least one evaluation sample");

    // wrong[n - 1] counts samples misclassified by the first n trees.
    std::vector<std::size_t> wrong(total, 0);
    std::vector<std::size_t> cumulative(total);
    for (const auto& s : eval_samples) {
        if (s.features.size() != forest.layout().size()) {
            fail(ErrorKind::InvalidArgument, "evaluation sample width does not match forest layout");
        }
        std::size_t votes = 0;
        for (std::size_t t = 0; t < total; ++t) {
            if (forest.trees()[t].predict(s.features) == Label::ConfusionEvent) ++votes;
            const Label predicted = 2 * votes > t + 1 ? Label::ConfusionEvent : Label::NoEvent;
            if (predicted != s.label) ++wrong[t];
        }
    }
    std::vector<LossPoint> out;
    out.reserve(counts.size());
    for (std::size_t n : counts) {
        out.push_back({n, static_cast<double>(wrong[n - 1]) / static_cast<double>(eval_samples.size())});
    }
    return out;
}

namespace {

using nlohmann::json;

json node_to_json(const DecisionTree& tree, std::uint32_t id) {
    const TreeNode& node = tree.nodes()[id];
    if (node.is_leaf()) return json{{"n_event", node.n_event}, {"n_noevent", node.n_noevent}};
    return json{{"channel", node.channel},
                {"threshold", node.threshold},
                {"left", node_to_json(tree, node.left)},
                {"right", node_to_json(tree, node.right)}};
}

constexpr std::size_t kMaxTreeDepth = 10000;

[[noreturn]] void corrupt(const std::string& what) { fail(ErrorKind::CorruptPayload, "corrupt forest payload: " + what); }

std::uint32_t node_from_json(const json& j, std::size_t dims, std::size_t depth, std::vector<TreeNode>& nodes) {
    if (depth > kMaxTreeDepth) corrupt("tree too deep");
    if (!j.is_object()) corrupt("node is not an object");
    const auto id = static_cast<std::uint32_t>(nodes.size());
    nodes.emplace_back();
    if (j.contains("channel")) {
        const auto channel = j.at("channel").get<std::int64_t>();
        if (channel < 0 || static_cast<std::size_t>(channel) >= dims) corrupt("channel index out of range");
        const double threshold = j.at("threshold").get<double>();
        const std::uint32_t left = node_from_json(j.at("left"), dims, depth + 1, nodes);
        const std::uint32_t right = node_from_json(j.at("right"), dims, depth + 1, nodes);
        TreeNode& node = nodes[id];
        node.channel = static_cast<std::int32_t>(channel);
        node.threshold = threshold;
        node.left = left;
        node.right = right;
        node.n_event = nodes[left].n_event + nodes[right].n_event;
        node.n_noevent = nodes[left].n_noevent + nodes[right].n_noevent;
    } else {
        TreeNode& node = nodes[id];
        node.n_event = j.at("n_event").get<std::uint32_t>();
        node.n_noevent = j.at("n_noevent").get<std::uint32_t>();
        if (node.n_event == 0 && node.n_noevent == 0) corrupt("empty leaf");
    }
    return id;
}

}  // namespace

std::string serialize_forest(const RandomForest& forest) {
    const ForestParams& p = forest.params();
    json params{{"n_trees", p.n_trees},   {"min_leaf", p.min_leaf}, {"bootstrap", p.bootstrap},
                {"seed", p.seed},         {"max_depth", nullptr},   {"features_per_split", nullptr}};
    if (p.max_depth) params["max_depth"] = *p.max_depth;
    if (p.features_per_split) params["features_per_split"] = *p.features_per_split;

    json layout = json::array();
    for (Channel c : forest.layout().channels()) layout.push_back(std::string(channel_name(c)));

    json trees = json::array();
    for (const auto& t : forest.trees()) trees.push_back(node_to_json(t, 0));

    return json{{"version", kForestFormatVersion}, {"params", params}, {"layout", layout}, {"trees", trees}}.dump();
}

RandomForest deserialize_forest(std::string_view payload) {
    json j;
    try {
        j = json::parse(payload);
    } catch (const json::exception& e) {
        corrupt(e.what());
    }
    try {
        if (!j.is_object() || !j.contains("version")) corrupt("missing version");
        const auto version = j.at("version").get<std::int64_t>();
        if (version != kForestFormatVersion) {
            fail(ErrorKind::VersionMismatch, "forest format version " + std::to_string(version) +
                                                 " is not supported (expected " +
                                                 std::to_string(kForestFormatVersion) + ")");
        }
        std::vector<Channel> channels;
        for (const auto& name : j.at("layout")) {
            const auto c = parse_channel(name.get<std::string>());
            if (!c) corrupt("unknown channel in layout");
            channels.push_back(*c);
        }
        FeatureLayout layout(std::move(channels));

        const json& pj = j.at("params");
        ForestParams params;
        params.n_trees = pj.at("n_trees").get<std::size_t>();
        params.min_leaf = pj.at("min_leaf").get<std::size_t>();
        params.bootstrap = pj.at("bootstrap").get<bool>();
        params.seed = pj.at("seed").get<std::uint64_t>();
        if (!pj.at("max_depth").is_null()) params.max_depth = pj.at("max_depth").get<std::size_t>();
        if (!pj.at("features_per_split").is_null()) {
            params.features_per_split = pj.at("features_per_split").get<std::size_t>();
        }
        params.validate(layout.size());

        const json& tj = j.at("trees");
        if (!tj.is_array() || tj.size() != params.n_trees) corrupt("tree count does not match params.n_trees");
        std::vector<DecisionTree> trees;
        trees.reserve(tj.size());
        for (const auto& root : tj) {
            std::vector<TreeNode> nodes;
            node_from_json(root, layout.size(), 0, nodes);
            trees.emplace_back(std::move(nodes));
        }
        return RandomForest(std::move(layout), params, std::move(trees));
    } catch (const json::exception& e) {
        corrupt(e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::VersionMismatch || e.kind() == ErrorKind::CorruptPayload) throw;
        corrupt(e.what());
    }
}

}  // namespace confdetect
