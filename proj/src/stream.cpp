#include "confdetect/stream.hpp"

#include <chrono>
#include <cmath>

#include "confdetect/error.hpp"

namespace confdetect {

StreamQueue::StreamQueue(std::size_t channels, std::size_t capacity)
    : channels_(channels), capacity_(capacity), ring_(channels * capacity), sums_(channels, 0.0), shift_(channels, 0.0) {
    if (channels == 0) fail(ErrorKind::InvalidArgument, "stream queue needs at least one channel");
    if (capacity == 0) fail(ErrorKind::InvalidArgument, "stream queue capacity must be at least 1");
}

void StreamQueue::push(std::span<const double> fv) {
    if (fv.size() != channels_) {
        fail(ErrorKind::InvalidArgument, "pushed vector has width " + std::to_string(fv.size()) + ", queue expects " +
                                             std::to_string(channels_));
    }
    if (pushes_ == 0) std::copy(fv.begin(), fv.end(), shift_.begin());
    std::size_t slot;
    if (occupancy_ < capacity_) {
        slot = (head_ + occupancy_) % capacity_;
        ++occupancy_;
    } else {
        slot = head_;
        head_ = (head_ + 1) % capacity_;
        const double* old = &ring_[slot * channels_];
        for (std::size_t c = 0; c < channels_; ++c) sums_[c] -= old[c] - shift_[c];
    }
    double* dst = &ring_[slot * channels_];
    for (std::size_t c = 0; c < channels_; ++c) {
        dst[c] = fv[c];
        sums_[c] += fv[c] - shift_[c];
    }
    ++pushes_;
    if (pushes_ % kRecomputeInterval == 0) recompute_sums();
}

void StreamQueue::recompute_sums() {
    // Re-anchor on the newest vector so that the shift follows slow trends.
    const auto newest = row(occupancy_ - 1);
    std::copy(newest.begin(), newest.end(), shift_.begin());
    std::fill(sums_.begin(), sums_.end(), 0.0);
    for (std::size_t i = 0; i < occupancy_; ++i) {
        const auto r = row(i);
        for (std::size_t c = 0; c < channels_; ++c) sums_[c] += r[c] - shift_[c];
    }
}

FeatureVector StreamQueue::delta_sample() const {
    FeatureVector out(channels_);
    delta_sample_into(out);
    return out;
}

void StreamQueue::delta_sample_into(std::span<double> out) const {
    if (occupancy_ == 0) fail(ErrorKind::InvalidArgument, "delta sample of an empty queue");
    if (out.size() != channels_) fail(ErrorKind::InvalidArgument, "delta sample output has the wrong width");
    const double n = static_cast<double>(occupancy_);
    for (std::size_t c = 0; c < channels_; ++c) out[c] = shift_[c] + sums_[c] / n;
}

std::span<const double> StreamQueue::row(std::size_t i) const {
    if (i >= occupancy_) fail(ErrorKind::InvalidArgument, "queue row out of range");
    return {&ring_[((head_ + i) % capacity_) * channels_], channels_};
}

std::vector<FeatureVector> StreamQueue::contents() const {
    std::vector<FeatureVector> out;
    out.reserve(occupancy_);
    for (std::size_t i = 0; i < occupancy_; ++i) {
        const auto r = row(i);
        out.emplace_back(r.begin(), r.end());
    }
    return out;
}

std::string_view outcome_name(Outcome o) noexcept {
    switch (o) {
        case Outcome::Warmup: return "warmup";
        case Outcome::NoEvent: return "no_event";
        case Outcome::ConfusionEvent: return "event";
    }
    return "warmup";
}

std::optional<Label> StreamDecision::label() const {
    switch (outcome) {
        case Outcome::NoEvent: return Label::NoEvent;
        case Outcome::ConfusionEvent: return Label::ConfusionEvent;
        case Outcome::Warmup: break;
    }
    return std::nullopt;
}

StreamDecision step(StreamQueue& queue, const GazeSample& sample, const RandomForest& forest,
                    const FeatureLayout& layout) {
    if (!(forest.layout() == layout)) fail(ErrorKind::InvalidArgument, "forest layout does not match stream layout");
    if (queue.channels() != layout.size()) fail(ErrorKind::InvalidArgument, "queue width does not match layout");

    queue.push(to_feature_vector(sample, layout));
    StreamDecision d;
    d.step = queue.total_pushes();
    if (!queue.full()) return d;

    const auto start = std::chrono::steady_clock::now();
    const FeatureVector delta = queue.delta_sample();
    const Prediction p = forest.predict(delta);
    const auto stop = std::chrono::steady_clock::now();

    d.outcome = p.label == Label::ConfusionEvent ? Outcome::ConfusionEvent : Outcome::NoEvent;
    d.vote_fraction = p.vote_fraction;
    d.latency_s = std::chrono::duration<double>(stop - start).count();
    return d;
}

OnlineClassifier::OnlineClassifier(std::shared_ptr<const RandomForest> forest, std::size_t capacity)
    : forest_(std::move(forest)), queue_(forest_ ? forest_->layout().size() : 1, capacity) {
    if (!forest_) fail(ErrorKind::InvalidArgument, "online classifier needs a forest");
}

StreamDecision OnlineClassifier::step(const GazeSample& sample) {
    ++steps_;
    const auto held = hold_.apply(sample);
    if (!held) {
        StreamDecision d;
        d.step = steps_;
        return d;
    }
    StreamDecision d = confdetect::step(queue_, *held, *forest_, forest_->layout());
    d.step = steps_;
    return d;
}

double mean_latency(std::span<const double> latencies) {
    if (latencies.empty()) fail(ErrorKind::InvalidArgument, "mean latency of zero measurements");
    double sum = 0.0;
    for (double l : latencies) sum += l;
    return sum / static_cast<double>(latencies.size());
}

BenchResult bench(std::shared_ptr<const RandomForest> forest, std::span<const GazeSample> stream, std::size_t n_runs,
                  std::size_t capacity) {
    if (n_runs == 0) fail(ErrorKind::InvalidArgument, "bench needs at least one run");
    if (stream.size() + 1 < capacity + n_runs) {
        fail(ErrorKind::Insufficient, "bench needs " + std::to_string(capacity + n_runs - 1) +
                                          " samples, stream has " + std::to_string(stream.size()));
    }
    OnlineClassifier online(std::move(forest), capacity);
    BenchResult r;
    r.n_runs = n_runs;
    r.capacity = capacity;
    for (const auto& s : stream) {
        const StreamDecision d = online.step(s);
        if (d.outcome == Outcome::Warmup) continue;
        r.latencies_s.push_back(d.latency_s);
        if (r.latencies_s.size() == n_runs) break;
    }
    if (r.latencies_s.size() < n_runs) {
        fail(ErrorKind::Insufficient, "stream ended before " + std::to_string(n_runs) + " decisions were timed");
    }
    r.mean_latency_s = mean_latency(r.latencies_s);
    r.frame_rate = r.mean_latency_s > 0.0 ? 1.0 / r.mean_latency_s : 0.0;
    return r;
}

std::string frame_rate_label(double mean_latency_s) {
    if (!(mean_latency_s > 0.0)) return "~inf fps";
    return "~" + std::to_string(static_cast<long long>(std::floor(1.0 / mean_latency_s))) + " fps";
}

}  // namespace confdetect
