#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "confdetect/domain.hpp"

namespace confdetect {

struct LabeledSample {
    std::string subject_id;
    FeatureVector features;
    Label label = Label::NoEvent;
    double timestamp = 0.0;

    bool operator==(const LabeledSample&) const = default;
};

inline constexpr double kDefaultHalfWidth = 1.0;

/// Slack for window boundaries. Timestamps carry microsecond precision, so a
/// decimal distance of exactly half_width must not be lost to binary rounding
/// (0.29 and 1.29 are 1.0000000000000002 apart as doubles).
inline constexpr double kWindowSlack = 1e-9;

/// Closed window membership: |t - event| <= half_width.
inline bool within_window(double t, double event, double half_width) noexcept {
    const double d = t - event;
    return (d < 0 ? -d : d) <= half_width + kWindowSlack;
}

/// A valid sample at time t is a ConfusionEvent when some event e satisfies
/// |t - e| <= half_width. Invalid frames are dropped.
std::vector<LabeledSample> label_session(const Session& session, const FeatureLayout& layout,
                                         double half_width = kDefaultHalfWidth);

struct ClassCounts {
    std::size_t n_event = 0;
    std::size_t n_noevent = 0;

    bool operator==(const ClassCounts&) const = default;
};

ClassCounts corpus_counts(std::span<const LabeledSample> labeled) noexcept;

/// Labeled CSV: subject_id,timestamp,<layout channels...>,label
void write_labeled_csv(std::ostream& out, std::span<const LabeledSample> labeled, const FeatureLayout& layout);

struct LabeledCorpus {
    FeatureLayout layout;
    std::vector<LabeledSample> samples;
};

LabeledCorpus read_labeled_csv(std::istream& in);

}  // namespace confdetect
