#include "confdetect/synth.hpp"

#include <cmath>
#include <cstdio>

#include "confdetect/error.hpp"
#include "confdetect/labeling.hpp"
#include "confdetect/random.hpp"

namespace confdetect {

std::array<ChannelStats, kChannelCount> default_baseline() {
    return {{
        {0.5, 0.08},   // por_x
        {0.5, 0.08},   // por_y
        {0.5, 0.05},   // pupil_pos_x
        {0.5, 0.05},   // pupil_pos_y
        {3.5, 0.25},   // pupil_diam, mm
        {0.0, 5.0},    // gyro_x, deg/s
        {0.0, 5.0},    // gyro_y
        {0.0, 5.0},    // gyro_z
        {0.0, 0.3},    // acc_x, m/s^2
        {0.0, 0.3},    // acc_y
        {9.81, 0.3},   // acc_z
    }};
}

void SynthConfig::validate() const {
    if (!(rate > 0.0)) fail(ErrorKind::InvalidArgument, "synth rate must be positive");
    if (!(duration > 0.0)) fail(ErrorKind::InvalidArgument, "synth duration must be positive");
    if (!(half_width > 0.0)) fail(ErrorKind::InvalidArgument, "synth half width must be positive");
    if (!(effect.por_scatter_gain >= 1.0)) fail(ErrorKind::InvalidArgument, "por scatter gain must be >= 1");
    if (!(effect.head_motion_gain > 0.0)) fail(ErrorKind::InvalidArgument, "head motion gain must be positive");
    if (subject_variation < 0.0 || drift < 0.0) fail(ErrorKind::InvalidArgument, "variation scales must be >= 0");
    if (drift > 0.0 && !(drift_time_constant > 0.0)) {
        fail(ErrorKind::InvalidArgument, "drift time constant must be positive");
    }
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) fail(ErrorKind::InvalidArgument, "dropout rate must be in [0, 1)");
    for (const auto& b : baseline) {
        if (!(b.sd >= 0.0)) fail(ErrorKind::InvalidArgument, "baseline sd must be >= 0");
    }
}

std::string subject_name(std::size_t subject_index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "S%02zu", subject_index + 1);
    return buf;
}

bool in_event_window(double t, const std::vector<double>& events, double half_width) noexcept {
    for (double e : events) {
        if (within_window(t, e, half_width)) return true;
    }
    return false;
}

Session generate_session(const SynthConfig& config, std::size_t subject_index) {
    config.validate();
    Rng rng(derive_seed(config.seed, subject_index));

    const auto n_samples = static_cast<std::size_t>(std::llround(config.duration * config.rate));
    Session session;
    session.subject_id = subject_name(subject_index);
    session.nominal_rate = config.rate;

    // Events: one per equal segment, placed so that the closed window keeps
    // at least one sample of clearance inside its segment.
    const std::size_t n_events = config.events_per_session;
    if (n_events > 0) {
        const auto margin = static_cast<std::size_t>(std::ceil(config.half_width * config.rate)) + 1;
        for (std::size_t i = 0; i < n_events; ++i) {
            const std::size_t seg_begin = i * n_samples / n_events;
            const std::size_t seg_end = (i + 1) * n_samples / n_events;
            if (seg_end < seg_begin + 2 * margin + 1) {
                fail(ErrorKind::InvalidArgument, "cannot place " + std::to_string(n_events) + " events of half width " +
                                                     std::to_string(config.half_width) + " s in " +
                                                     std::to_string(config.duration) + " s");
            }
            const std::size_t lo = seg_begin + margin;
            const std::size_t span = seg_end - 1 - margin - lo + 1;
            const std::size_t k = lo + rng.below(span);
            session.confusion_times.push_back(static_cast<double>(k) / config.rate);
        }
    }

    std::array<double, kChannelCount> subject_mean{};
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        const auto& b = config.baseline[c];
        subject_mean[c] = b.mean + config.subject_variation * b.sd * rng.normal();
    }

    const double rho = config.drift > 0.0 ? std::exp(-1.0 / (config.rate * config.drift_time_constant)) : 0.0;
    const double innovation = std::sqrt(1.0 - rho * rho);
    std::array<double, kChannelCount> drift{};
    if (config.drift > 0.0) {
        for (std::size_t c = 0; c < kChannelCount; ++c) drift[c] = config.drift * config.baseline[c].sd * rng.normal();
    }

    session.samples.reserve(n_samples);
    for (std::size_t k = 0; k < n_samples; ++k) {
        GazeSample s;
        s.timestamp = static_cast<double>(k) / config.rate;
        const bool event = in_event_window(s.timestamp, session.confusion_times, config.half_width);
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            const Channel ch = kAllChannels[c];
            const double sd = config.baseline[c].sd;
            if (config.drift > 0.0) {
                drift[c] = rho * drift[c] + innovation * config.drift * sd * rng.normal();
            }
            double gain = 1.0;
            double shift = 0.0;
            if (event) {
                switch (ch) {
                    case Channel::PorX:
                    case Channel::PorY: gain = config.effect.por_scatter_gain; break;
                    case Channel::GyroX:
                    case Channel::GyroY:
                    case Channel::GyroZ:
                    case Channel::AccX:
                    case Channel::AccY:
                    case Channel::AccZ: gain = config.effect.head_motion_gain; break;
                    case Channel::PupilDiam: shift = config.effect.pupil_diam_delta; break;
                    default: break;
                }
            }
            s.field(ch) = subject_mean[c] + shift + drift[c] + gain * sd * rng.normal();
        }
        s.valid = config.dropout_rate <= 0.0 || rng.uniform() >= config.dropout_rate;
        session.samples.push_back(s);
    }
    return session;
}

std::vector<Session> generate_corpus(const SynthConfig& config) {
    if (config.n_subjects < 2) fail(ErrorKind::InvalidArgument, "a corpus needs at least 2 subjects");
    std::vector<Session> corpus;
    corpus.reserve(config.n_subjects);
    for (std::size_t i = 0; i < config.n_subjects; ++i) corpus.push_back(generate_session(config, i));
    return corpus;
}

}  // namespace confdetect
