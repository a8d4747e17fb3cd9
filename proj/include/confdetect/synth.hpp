#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "confdetect/domain.hpp"

namespace confdetect {

inline constexpr std::uint64_t kDefaultSeed = 20211;

struct ChannelStats {
    double mean = 0.0;
    double sd = 1.0;
};

/// Changes applied inside the +-half_width window around each event.
struct EffectSizes {
    double pupil_diam_delta = 1.0;  // mm added to the pupil diameter mean
    double por_scatter_gain = 3.0;  // multiplier on point-of-regard noise, >= 1
    double head_motion_gain = 3.0;  // multiplier on gyro/accel noise, > 0

    static EffectSizes none() { return {0.0, 1.0, 1.0}; }
};

/// Per-channel baseline in recording units, indexed like kAllChannels.
std::array<ChannelStats, kChannelCount> default_baseline();

struct SynthConfig {
    std::size_t n_subjects = 15;
    double duration = 60.0;  // seconds per session
    double rate = 100.0;     // Hz
    std::size_t events_per_session = 3;
    double half_width = 1.0;
    EffectSizes effect;
    std::array<ChannelStats, kChannelCount> baseline = default_baseline();
    /// Standard deviation of the per-subject mean offset, in units of each
    /// channel's baseline sd.
    double subject_variation = 0.5;
    /// Stationary sd of a slow AR(1) drift per channel, in units of the
    /// channel sd. Zero disables it.
    double drift = 0.0;
    double drift_time_constant = 5.0;  // seconds
    /// Probability that a frame is flagged invalid.
    double dropout_rate = 0.0;
    std::uint64_t seed = kDefaultSeed;

    /// Throws Error(InvalidArgument) on non-positive rate/duration/gains.
    void validate() const;
};

std::string subject_name(std::size_t subject_index);

/// Timestamps are exactly k / rate. Noise is Gaussian around per-subject
/// means; inside every event window the pupil mean is shifted and the
/// point-of-regard and head-motion noise amplitudes are scaled.
/// Error(InvalidArgument) when the events cannot be placed without their
/// windows touching each other or the session boundaries.
Session generate_session(const SynthConfig& config, std::size_t subject_index);

std::vector<Session> generate_corpus(const SynthConfig& config);

/// True when t lies in the closed window of any event.
bool in_event_window(double t, const std::vector<double>& events, double half_width) noexcept;

}  // namespace confdetect
