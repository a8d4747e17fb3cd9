#include "confdetect/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "confdetect/error.hpp"
#include "confdetect/random.hpp"

namespace confdetect {

bool Split::is_train(const std::string& subject) const {
    return std::binary_search(train_subjects.begin(), train_subjects.end(), subject);
}

bool Split::is_test(const std::string& subject) const {
    return std::binary_search(test_subjects.begin(), test_subjects.end(), subject);
}

Split participant_split(std::vector<std::string> subjects, double train_fraction, std::uint64_t seed) {
    if (subjects.size() < 2) fail(ErrorKind::InvalidArgument, "participant split needs at least 2 subjects");
    std::sort(subjects.begin(), subjects.end());
    if (std::adjacent_find(subjects.begin(), subjects.end()) != subjects.end()) {
        fail(ErrorKind::InvalidArgument, "duplicate subject id in split input");
    }
    const auto n = subjects.size();
    const double want = std::round(train_fraction * static_cast<double>(n));
    if (!(want >= 1.0) || want > static_cast<double>(n - 1)) {
        fail(ErrorKind::InvalidArgument, "train fraction leaves the train or test side empty");
    }
    const auto n_train = static_cast<std::size_t>(want);

    Rng rng(seed);
    rng.shuffle(subjects);
    Split split;
    split.seed = seed;
    split.train_subjects.assign(subjects.begin(), subjects.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test_subjects.assign(subjects.begin() + static_cast<std::ptrdiff_t>(n_train), subjects.end());
    std::sort(split.train_subjects.begin(), split.train_subjects.end());
    std::sort(split.test_subjects.begin(), split.test_subjects.end());
    return split;
}

std::string split_to_json(const Split& split) {
    nlohmann::json j;
    j["seed"] = split.seed;
    j["train"] = split.train_subjects;
    j["test"] = split.test_subjects;
    return j.dump();
}

Split split_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        Split split;
        split.seed = j.at("seed").get<std::uint64_t>();
        split.train_subjects = j.at("train").get<std::vector<std::string>>();
        split.test_subjects = j.at("test").get<std::vector<std::string>>();
        std::sort(split.train_subjects.begin(), split.train_subjects.end());
        std::sort(split.test_subjects.begin(), split.test_subjects.end());
        for (const auto& s : split.train_subjects) {
            if (split.is_test(s)) fail(ErrorKind::Data, "split manifest: subject " + s + " in both train and test");
        }
        return split;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Data, std::string("split manifest: ") + e.what());
    }
}

BalancedSet balance(std::span<const LabeledSample> labeled_train, std::uint64_t seed) {
    struct PerSubject {
        std::vector<std::size_t> events;
        std::vector<std::size_t> noevents;
    };
    std::map<std::string, PerSubject> by_subject;
    for (std::size_t i = 0; i < labeled_train.size(); ++i) {
        auto& bucket = by_subject[labeled_train[i].subject_id];
        (labeled_train[i].label == Label::ConfusionEvent ? bucket.events : bucket.noevents).push_back(i);
    }

    BalancedSet out;
    out.seed = seed;
    Rng rng(seed);
    for (const auto& [subject, bucket] : by_subject) {
        const std::size_t n = bucket.events.size();
        if (bucket.noevents.size() < n) {
            fail(ErrorKind::Insufficient, "subject " + subject + " has " + std::to_string(bucket.noevents.size()) +
                                              " no-event samples but " + std::to_string(n) + " event samples");
        }
        for (std::size_t i : bucket.events) out.samples.push_back(labeled_train[i]);
        if (n == 0) continue;
        for (std::size_t pick : rng.sample_without_replacement(bucket.noevents.size(), n)) {
            out.samples.push_back(labeled_train[bucket.noevents[pick]]);
        }
    }
    return out;
}

std::vector<Fold> kfold(const BalancedSet& balanced, std::size_t k, std::uint64_t seed) {
    const std::size_t n = balanced.samples.size();
    if (k < 2) fail(ErrorKind::InvalidArgument, "k-fold needs k >= 2");
    if (k > n) {
        fail(ErrorKind::InvalidArgument,
             "k-fold with k=" + std::to_string(k) + " exceeds sample count " + std::to_string(n));
    }
    std::vector<std::size_t> events;
    std::vector<std::size_t> noevents;
    for (std::size_t i = 0; i < n; ++i) {
        (balanced.samples[i].label == Label::ConfusionEvent ? events : noevents).push_back(i);
    }
    Rng rng(seed);
    rng.shuffle(events);
    rng.shuffle(noevents);

    // Deal events then no-events round-robin with one running position so that
    // every fold is non-empty whenever n >= k.
    std::vector<std::size_t> fold_of(n);
    std::size_t pos = 0;
    for (std::size_t i : events) fold_of[i] = pos++ % k;
    for (std::size_t i : noevents) fold_of[i] = pos++ % k;

    std::vector<Fold> folds(k);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < k; ++f) {
            (fold_of[i] == f ? folds[f].validation : folds[f].train).push_back(i);
        }
    }
    return folds;
}

}  // namespace confdetect
