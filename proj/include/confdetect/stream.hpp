#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "confdetect/domain.hpp"
#include "confdetect/forest.hpp"

namespace confdetect {

inline constexpr std::size_t kDefaultQueueCapacity = 2000;
inline constexpr std::size_t kDefaultBenchRuns = 100;

/// Fixed-capacity FIFO of feature vectors with per-channel running sums.
/// Sums are kept relative to a reference vector (the first push, re-anchored
/// at each rebuild), updated incrementally and rebuilt from the buffer every
/// kRecomputeInterval pushes to bound rounding drift. A queue of identical
/// vectors therefore has exactly that vector as its mean.
class StreamQueue {
public:
    static constexpr std::uint64_t kRecomputeInterval = 100000;

    StreamQueue(std::size_t channels, std::size_t capacity = kDefaultQueueCapacity);

    /// Appends fv, evicting the oldest vector once full.
    void push(std::span<const double> fv);

    /// Channel-wise mean of the buffered vectors. Error(InvalidArgument) when empty.
    FeatureVector delta_sample() const;
    void delta_sample_into(std::span<double> out) const;

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t occupancy() const noexcept { return occupancy_; }
    bool full() const noexcept { return occupancy_ == capacity_; }
    std::uint64_t total_pushes() const noexcept { return pushes_; }

    /// i-th buffered vector, 0 = oldest.
    std::span<const double> row(std::size_t i) const;
    /// Buffered vectors, oldest first.
    std::vector<FeatureVector> contents() const;

private:
    void recompute_sums();

    std::size_t channels_;
    std::size_t capacity_;
    std::vector<double> ring_;  // capacity_ rows of channels_ values
    std::vector<double> sums_;   // sum of (x - shift_) over the buffer
    std::vector<double> shift_;
    std::size_t head_ = 0;      // slot of the oldest vector
    std::size_t occupancy_ = 0;
    std::uint64_t pushes_ = 0;
};

enum class Outcome { Warmup, NoEvent, ConfusionEvent };

std::string_view outcome_name(Outcome o) noexcept;

struct StreamDecision {
    std::uint64_t step = 0;  // 1-based count of samples consumed
    Outcome outcome = Outcome::Warmup;
    double vote_fraction = 0.0;
    double latency_s = 0.0;  // delta sample + predict, wall clock

    std::optional<Label> label() const;
};

/// push -> delta sample -> predict. Only classifies once the queue is full.
/// The sample must be valid; see OnlineClassifier for dropout handling.
StreamDecision step(StreamQueue& queue, const GazeSample& sample, const RandomForest& forest,
                    const FeatureLayout& layout);

/// Streaming front end: applies zero-order hold to dropouts, then steps.
class OnlineClassifier {
public:
    explicit OnlineClassifier(std::shared_ptr<const RandomForest> forest,
                              std::size_t capacity = kDefaultQueueCapacity);

    StreamDecision step(const GazeSample& sample);

    const StreamQueue& queue() const noexcept { return queue_; }
    const RandomForest& forest() const noexcept { return *forest_; }

private:
    std::shared_ptr<const RandomForest> forest_;
    StreamQueue queue_;
    DropoutHold hold_;
    std::uint64_t steps_ = 0;
};

struct BenchResult {
    std::size_t n_runs = 0;
    std::size_t capacity = 0;
    double mean_latency_s = 0.0;
    double frame_rate = 0.0;  // 1 / mean latency
    std::vector<double> latencies_s;
};

/// Fills the queue from the stream, then times n_runs classification steps.
/// Error(Insufficient) if the stream has fewer than capacity + n_runs - 1 samples.
BenchResult bench(std::shared_ptr<const RandomForest> forest, std::span<const GazeSample> stream,
                  std::size_t n_runs = kDefaultBenchRuns, std::size_t capacity = kDefaultQueueCapacity);

double mean_latency(std::span<const double> latencies);

/// Whole frames per second, e.g. "~25 fps" for 0.039 s.
std::string frame_rate_label(double mean_latency_s);

}  // namespace confdetect
