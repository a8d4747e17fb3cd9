#include <doctest.h>

#include <cmath>
#include <limits>

#include "confdetect/error.hpp"
#include "confdetect/forest.hpp"
#include "support.hpp"

using namespace confdetect;
using testing_support::blobs;
using testing_support::first_channels;

namespace {

double gini_cost(std::size_t e, std::size_t o) {
    const double n = static_cast<double>(e + o);
    if (n == 0) return 0.0;
    const double pe = e / n, po = o / n;
    return n * (1.0 - pe * pe - po * po);
}

double split_cost(const std::vector<LabeledSample>& s, std::size_t ch, double thr) {
    std::size_t le = 0, lo = 0, re = 0, ro = 0;
    for (const auto& x : s) {
        const bool ev = x.label == Label::ConfusionEvent;
        if (x.features[ch] <= thr) (ev ? le : lo)++;
        else (ev ? re : ro)++;
    }
    return gini_cost(le, lo) + gini_cost(re, ro);
}

// Exhaustive search over every channel and every midpoint.
double brute_force_best(const std::vector<LabeledSample>& s) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t ch = 0; ch < s.front().features.size(); ++ch) {
        std::vector<double> v;
        for (const auto& x : s) v.push_back(x.features[ch]);
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        for (std::size_t i = 0; i + 1 < v.size(); ++i) best = std::min(best, split_cost(s, ch, (v[i] + v[i + 1]) / 2));
    }
    return best;
}

ForestParams exhaustive_params() {
    ForestParams p;
    p.n_trees = 1;
    p.bootstrap = false;
    return p;
}

// Counts reaching each node, by routing the training set.
void check_node_counts(const DecisionTree& tree, const std::vector<LabeledSample>& s) {
    const auto& nodes = tree.nodes();
    std::vector<std::size_t> ev(nodes.size(), 0), no(nodes.size(), 0);
    for (const auto& x : s) {
        std::size_t i = 0;
        while (true) {
            (x.label == Label::ConfusionEvent ? ev : no)[i]++;
            if (nodes[i].is_leaf()) break;
            const bool left = x.features[nodes[i].channel] <= nodes[i].threshold;
            i = left ? nodes[i].left : nodes[i].right;
        }
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].is_leaf()) {
            CHECK(nodes[i].n_event == ev[i]);
            CHECK(nodes[i].n_noevent == no[i]);
        }
    }
}

}  // namespace

TEST_CASE("single-class input gives a single leaf") {
    Rng rng(1);
    auto s = blobs(rng, 20, 3, 5.0);
    std::vector<LabeledSample> only;
    for (auto& x : s) if (x.label == Label::NoEvent) only.push_back(x);
    auto tree = train_tree(only, exhaustive_params(), 1);
    REQUIRE(tree.nodes().size() == 1);
    CHECK(tree.root().is_leaf());
    CHECK(tree.root().leaf_label() == Label::NoEvent);
}

TEST_CASE("separable pair splits once with a threshold between the points") {
    std::vector<LabeledSample> s(2);
    s[0].features = {0.0};
    s[0].label = Label::NoEvent;
    s[1].features = {1.0};
    s[1].label = Label::ConfusionEvent;
    ForestParams p = exhaustive_params();
    p.features_per_split = 1;
    auto tree = train_tree(s, p, 3);
    REQUIRE(tree.nodes().size() == 3);
    const auto& root = tree.root();
    CHECK_FALSE(root.is_leaf());
    CHECK(root.threshold > 0.0);
    CHECK(root.threshold < 1.0);
    CHECK(tree.nodes()[root.left].leaf_label() == Label::NoEvent);
    CHECK(tree.nodes()[root.right].leaf_label() == Label::ConfusionEvent);
}

TEST_CASE("root split matches the exhaustive CART oracle") {
    Rng rng(2);
    ForestParams p = exhaustive_params();
    p.features_per_split = 9;
    for (int trial = 0; trial < 40; ++trial) {
        auto s = blobs(rng, 5 + rng.below(21), 9, 0.8);
        // quantize a channel so that ties and repeated values occur
        for (auto& x : s) x.features[2] = std::round(x.features[2]);
        auto tree = train_tree(s, p, rng.next_u64());
        const auto& root = tree.root();
        if (root.is_leaf()) continue;
        CHECK(split_cost(s, root.channel, root.threshold) ==
              doctest::Approx(brute_force_best(s)).epsilon(1e-12));
        check_node_counts(tree, s);
    }
}

TEST_CASE("unbounded trees fit well-separated blobs exactly") {
    Rng rng(3);
    auto s = blobs(rng, 100, 9, 4.0);
    auto tree = train_tree(s, exhaustive_params(), 1);
    for (const auto& x : s) CHECK(tree.predict(x.features) == x.label);

    ForestParams fp;
    fp.seed = 8;
    auto forest = train_forest(s, first_channels(9), fp, 1);
    std::size_t correct = 0;
    for (const auto& x : s) correct += forest.predict(x.features).label == x.label;
    CHECK(correct == s.size());
}

TEST_CASE("training samples are routed consistently with thresholds") {
    Rng rng(4);
    auto s = blobs(rng, 60, 4, 0.5);
    auto tree = train_tree(s, exhaustive_params(), 9);
    const auto& nodes = tree.nodes();
    // every sample that reaches a node's left child satisfies x <= threshold
    for (const auto& x : s) {
        std::size_t i = 0;
        while (!nodes[i].is_leaf()) {
            const double v = x.features[nodes[i].channel];
            const std::size_t next = v <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
            CHECK((next == nodes[i].left) == (v <= nodes[i].threshold));
            i = next;
        }
    }
    check_node_counts(tree, s);
}

TEST_CASE("depth and leaf size limits") {
    Rng rng(5);
    auto s = blobs(rng, 100, 4, 0.3);
    ForestParams p = exhaustive_params();
    p.max_depth = 3;
    CHECK(train_tree(s, p, 1).depth() <= 3);
    p.max_depth.reset();
    p.min_leaf = 10;
    auto tree = train_tree(s, p, 1);
    for (const auto& n : tree.nodes()) {
        if (n.is_leaf()) CHECK(n.n_event + n.n_noevent >= 10);
    }
}

TEST_CASE("ensemble of one without bootstrap equals a single tree") {
    Rng rng(6);
    auto s = blobs(rng, 50, 9, 1.0);
    ForestParams p = exhaustive_params();
    p.seed = 42;
    auto forest = train_forest(s, first_channels(9), p, 1);
    auto tree = train_tree(s, p, tree_seed(42, 0));
    CHECK(forest.trees().front() == tree);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> x(9);
        for (auto& v : x) v = rng.normal(0.5, 2.0);
        CHECK(forest.predict(x).label == tree.predict(x));
    }
}

TEST_CASE("forest training is deterministic and independent of thread count") {
    Rng rng(7);
    auto s = blobs(rng, 150, 9, 0.7);
    ForestParams p;
    p.n_trees = 12;
    p.seed = 5;
    auto a = serialize_forest(train_forest(s, first_channels(9), p, 1));
    CHECK(a == serialize_forest(train_forest(s, first_channels(9), p, 1)));
    CHECK(a == serialize_forest(train_forest(s, first_channels(9), p, 4)));
    p.seed = 6;
    CHECK(a != serialize_forest(train_forest(s, first_channels(9), p, 1)));
}

TEST_CASE("prefix equals retraining with fewer trees") {
    Rng rng(8);
    auto s = blobs(rng, 80, 9, 0.7);
    ForestParams p;
    p.n_trees = 10;
    p.seed = 13;
    auto big = train_forest(s, first_channels(9), p, 1);
    p.n_trees = 4;
    auto small = train_forest(s, first_channels(9), p, 1);
    CHECK(serialize_forest(big.prefix(4)) == serialize_forest(small));
    CHECK_THROWS_AS(big.prefix(0), Error);
    CHECK_THROWS_AS(big.prefix(11), Error);
}

TEST_CASE("held-out accuracy on a separable corpus") {
    Rng rng(9);
    auto train = blobs(rng, 300, 9, 8.0);
    auto test = blobs(rng, 500, 9, 8.0);
    ForestParams p;
    p.seed = 1;
    auto forest = train_forest(train, first_channels(9), p, 1);
    std::size_t correct = 0;
    for (const auto& x : test) {
        auto pred = forest.predict(x.features);
        correct += pred.label == x.label;
        // vote tally oracle
        std::size_t votes = 0;
        for (const auto& t : forest.trees()) votes += t.predict(x.features) == Label::ConfusionEvent;
        CHECK(pred.event_votes == votes);
        CHECK(pred.vote_fraction * static_cast<double>(forest.size()) == doctest::Approx(votes).epsilon(1e-12));
        if (x.label == Label::ConfusionEvent) CHECK(pred.vote_fraction >= 0.9);
    }
    CHECK(static_cast<double>(correct) / test.size() >= 0.99);
}

TEST_CASE("pure leaf forest and tie-break") {
    TreeNode leaf_no;
    leaf_no.n_noevent = 4;
    TreeNode leaf_ev;
    leaf_ev.n_event = 4;
    RandomForest one(first_channels(2), ForestParams{}, {DecisionTree({leaf_no})});
    auto p = one.predict(std::vector<double>{3.0, -1.0});
    CHECK(p.label == Label::NoEvent);
    CHECK(p.vote_fraction == 0.0);

    RandomForest two(first_channels(2), ForestParams{}, {DecisionTree({leaf_no}), DecisionTree({leaf_ev})});
    p = two.predict(std::vector<double>{0.0, 0.0});
    CHECK(p.label == Label::NoEvent);
    CHECK(p.vote_fraction == 0.5);

    TreeNode tie;
    tie.n_event = 2;
    tie.n_noevent = 2;
    CHECK(tie.leaf_label() == Label::NoEvent);
    CHECK_THROWS_AS(two.predict(std::vector<double>{1.0}), Error);
}

TEST_CASE("scaling a channel leaves predictions unchanged") {
    Rng rng(10);
    auto train = blobs(rng, 100, 5, 0.8);
    auto test = blobs(rng, 100, 5, 0.8);
    ForestParams p;
    p.n_trees = 15;
    p.seed = 3;
    auto base = train_forest(train, first_channels(5), p, 1);
    for (double scale : {2.0, 0.125, 3.7, 1000.0}) {
        for (std::size_t ch = 0; ch < 5; ++ch) {
            auto tr = train;
            auto te = test;
            for (auto& x : tr) x.features[ch] *= scale;
            for (auto& x : te) x.features[ch] *= scale;
            auto scaled = train_forest(tr, first_channels(5), p, 1);
            for (std::size_t i = 0; i < te.size(); ++i) {
                CHECK(scaled.predict(te[i].features).event_votes == base.predict(test[i].features).event_votes);
            }
        }
    }
}

TEST_CASE("loss curve") {
    Rng rng(11);
    auto s = blobs(rng, 100, 9, 0.5);
    auto eval = blobs(rng, 200, 9, 0.5);
    ForestParams p;
    p.n_trees = 20;
    p.seed = 2;
    auto forest = train_forest(s, first_channels(9), p, 1);
    auto curve = loss_curve(forest, eval);
    REQUIRE(curve.size() == 20);
    std::size_t correct = 0;
    for (const auto& x : eval) correct += forest.predict(x.features).label == x.label;
    CHECK(curve.back().n_trees == 20);
    CHECK(curve.back().cost == 1.0 - static_cast<double>(correct) / eval.size());

    const std::size_t at[] = {5, 20};
    auto sub = loss_curve(forest, eval, at);
    REQUIRE(sub.size() == 2);
    CHECK(sub[0] == curve[4]);
    CHECK(sub[1] == curve[19]);
    const std::size_t bad[] = {21};
    CHECK_THROWS_AS(loss_curve(forest, eval, bad), Error);

    std::vector<LabeledSample> pure;
    for (auto& x : s) if (x.label == Label::NoEvent) pure.push_back(x);
    auto pure_forest = train_forest(pure, first_channels(9), p, 1);
    for (const auto& pt : loss_curve(pure_forest, pure)) CHECK(pt.cost == 0.0);
}

TEST_CASE("serialization round trip preserves predictions") {
    Rng rng(12);
    auto s = blobs(rng, 300, 9, 0.6);
    ForestParams p;
    p.seed = 77;
    p.max_depth = 12;
    auto forest = train_forest(s, first_channels(9), p, 1);
    const auto text = serialize_forest(forest);
    auto back = deserialize_forest(text);
    CHECK(back.params() == forest.params());
    CHECK(back.layout() == forest.layout());
    CHECK(serialize_forest(back) == text);
    for (int i = 0; i < 10000; ++i) {
        std::vector<double> x(9);
        for (auto& v : x) v = rng.normal(0.3, 1.5);
        auto a = forest.predict(x);
        auto b = back.predict(x);
        REQUIRE(a.event_votes == b.event_votes);
        REQUIRE(a.label == b.label);
    }

    TreeNode leaf;
    leaf.n_event = 1;
    RandomForest tiny(first_channels(1), ForestParams{}, {DecisionTree({leaf})});
    auto tiny_back = deserialize_forest(serialize_forest(tiny));
    CHECK(tiny_back.predict(std::vector<double>{0.0}).label == Label::ConfusionEvent);
}

TEST_CASE("bad payloads are rejected") {
    Rng rng(13);
    auto s = blobs(rng, 20, 2, 1.0);
    ForestParams p;
    p.n_trees = 2;
    const auto text = serialize_forest(train_forest(s, first_channels(2), p, 1));
    try {
        deserialize_forest(text.substr(0, text.size() / 2));
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::CorruptPayload);
    }
    std::string v2 = text;
    v2.replace(v2.find("\"version\":1"), 11, "\"version\":2");
    try {
        deserialize_forest(v2);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::VersionMismatch);
    }
    CHECK_THROWS_AS(deserialize_forest(R"({"version":1,"layout":["por_x"],"params":{},"trees":[]})"), Error);
}

TEST_CASE("parameter validation") {
    ForestParams p;
    CHECK(p.resolved_features(9) == 3);
    CHECK(p.resolved_features(10) == 4);
    CHECK(p.resolved_features(1) == 1);
    p.features_per_split = 10;
    CHECK_THROWS_AS(p.validate(9), Error);
    p.features_per_split.reset();
    p.n_trees = 0;
    CHECK_THROWS_AS(p.validate(9), Error);
}
