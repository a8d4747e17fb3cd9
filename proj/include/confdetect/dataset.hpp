#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "confdetect/labeling.hpp"

namespace confdetect {

/// Participant-wise partition. Both lists are sorted.
struct Split {
    std::vector<std::string> train_subjects;
    std::vector<std::string> test_subjects;
    std::uint64_t seed = 0;

    bool is_train(const std::string& subject) const;
    bool is_test(const std::string& subject) const;

    bool operator==(const Split&) const = default;
};

inline constexpr double kDefaultTrainFraction = 2.0 / 3.0;

/// Picks round(train_fraction * n) subjects for training uniformly at random.
/// Errors (InvalidArgument): fewer than 2 subjects, duplicate ids, or a
/// fraction that leaves either side empty.
Split participant_split(std::vector<std::string> subjects, double train_fraction, std::uint64_t seed);

std::string split_to_json(const Split& split);
Split split_from_json(const std::string& text);

struct BalancedSet {
    std::vector<LabeledSample> samples;
    std::uint64_t seed = 0;
};

/// Keeps every event sample and, per subject, the same number of that
/// subject's no-event samples drawn uniformly without replacement.
/// Error (Insufficient) if a subject has fewer no-event than event samples.
BalancedSet balance(std::span<const LabeledSample> labeled_train, std::uint64_t seed);

/// Indices into the balanced sample list.
struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

inline constexpr std::size_t kDefaultFolds = 5;

/// Class-stratified k-fold partition. Every index appears in exactly one
/// validation part.
std::vector<Fold> kfold(const BalancedSet& balanced, std::size_t k, std::uint64_t seed);

}  // namespace confdetect
