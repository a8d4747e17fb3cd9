#include "confdetect/domain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "confdetect/error.hpp"

namespace confdetect {

namespace {

constexpr std::array<std::string_view, kChannelCount> kChannelNames = {
    "por_x",  "por_y",  "pupil_pos_x", "pupil_pos_y", "pupil_diam", "gyro_x",
    "gyro_y", "gyro_z", "acc_x",       "acc_y",       "acc_z",
};

}  // namespace

std::string_view channel_name(Channel c) noexcept { return kChannelNames[static_cast<std::size_t>(c)]; }

std::optional<Channel> parse_channel(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kChannelCount; ++i) {
        if (kChannelNames[i] == name) return static_cast<Channel>(i);
    }
    return std::nullopt;
}

double GazeSample::field(Channel c) const noexcept {
    return const_cast<GazeSample*>(this)->field(c);
}

double& GazeSample::field(Channel c) noexcept {
    switch (c) {
        case Channel::PorX: return por_x;
        case Channel::PorY: return por_y;
        case Channel::PupilPosX: return pupil_pos_x;
        case Channel::PupilPosY: return pupil_pos_y;
        case Channel::PupilDiam: return pupil_diam;
        case Channel::GyroX: return gyro_x;
        case Channel::GyroY: return gyro_y;
        case Channel::GyroZ: return gyro_z;
        case Channel::AccX: return acc_x;
        case Channel::AccY: return acc_y;
        case Channel::AccZ: return acc_z;
    }
    return por_x;  // unreachable
}

FeatureLayout::FeatureLayout()
    : channels_{Channel::PorX,  Channel::PorY,  Channel::PupilDiam, Channel::GyroX, Channel::GyroY,
                Channel::GyroZ, Channel::AccX,  Channel::AccY,      Channel::AccZ} {}

FeatureLayout::FeatureLayout(std::vector<Channel> channels) : channels_(std::move(channels)) {
    if (channels_.empty()) fail(ErrorKind::InvalidArgument, "feature layout must contain at least one channel");
    for (std::size_t i = 0; i < channels_.size(); ++i) {
        for (std::size_t j = i + 1; j < channels_.size(); ++j) {
            if (channels_[i] == channels_[j]) {
                fail(ErrorKind::InvalidArgument,
                     "duplicate channel in feature layout: " + std::string(channel_name(channels_[i])));
            }
        }
    }
}

FeatureLayout FeatureLayout::parse(std::string_view csv) {
    std::vector<Channel> channels;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const std::size_t comma = std::min(csv.find(',', pos), csv.size());
        std::string_view tok = csv.substr(pos, comma - pos);
        while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
        while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
        const auto c = parse_channel(tok);
        if (!c) fail(ErrorKind::InvalidArgument, "unknown channel '" + std::string(tok) + "'");
        channels.push_back(*c);
        pos = comma + 1;
    }
    return FeatureLayout(std::move(channels));
}

std::string FeatureLayout::to_string() const {
    std::string out;
    for (std::size_t i = 0; i < channels_.size(); ++i) {
        if (i) out += ',';
        out += channel_name(channels_[i]);
    }
    return out;
}

std::string_view label_name(Label l) noexcept {
    return l == Label::ConfusionEvent ? "event" : "no_event";
}

void Session::validate() const {
    if (!(nominal_rate > 0.0) || !std::isfinite(nominal_rate)) {
        fail(ErrorKind::Data, "session " + subject_id + ": nominal rate must be positive");
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double t = samples[i].timestamp;
        if (!std::isfinite(t) || t < 0.0) {
            fail(ErrorKind::Data, "session " + subject_id + ": invalid timestamp at sample " + std::to_string(i));
        }
        if (i > 0 && !(t > samples[i - 1].timestamp)) {
            fail(ErrorKind::Data,
                 "session " + subject_id + ": timestamps not strictly increasing at sample " + std::to_string(i));
        }
    }
    if (!confusion_times.empty()) {
        if (samples.empty()) fail(ErrorKind::Data, "session " + subject_id + ": events without samples");
        const double lo = samples.front().timestamp;
        const double hi = samples.back().timestamp;
        for (double e : confusion_times) {
            if (!(e >= lo && e <= hi)) {
                std::ostringstream os;
                os << "session " << subject_id << ": confusion time " << e << " outside [" << lo << ", " << hi << "]";
                fail(ErrorKind::Data, os.str());
            }
        }
    }
}

FeatureVector to_feature_vector(const GazeSample& sample, const FeatureLayout& layout) {
    if (!sample.valid) {
        std::ostringstream os;
        os << "sample at t=" << sample.timestamp << " is flagged invalid";
        fail(ErrorKind::Data, os.str());
    }
    FeatureVector fv;
    fv.reserve(layout.size());
    for (Channel c : layout.channels()) fv.push_back(sample.field(c));
    return fv;
}

std::optional<GazeSample> DropoutHold::apply(const GazeSample& sample) {
    if (sample.valid) {
        last_valid_ = sample;
        return sample;
    }
    if (!last_valid_) return std::nullopt;
    GazeSample held = *last_valid_;
    held.timestamp = sample.timestamp;
    return held;
}

}  // namespace confdetect
