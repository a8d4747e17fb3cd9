#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace confdetect {

/// Recorded tracker channels. Order matches the recording CSV columns.
enum class Channel : std::uint8_t {
    PorX,
    PorY,
    PupilPosX,
    PupilPosY,
    PupilDiam,
    GyroX,
    GyroY,
    GyroZ,
    AccX,
    AccY,
    AccZ,
};

inline constexpr std::size_t kChannelCount = 11;

inline constexpr std::array<Channel, kChannelCount> kAllChannels = {
    Channel::PorX,  Channel::PorY,  Channel::PupilPosX, Channel::PupilPosY,
    Channel::PupilDiam, Channel::GyroX, Channel::GyroY, Channel::GyroZ,
    Channel::AccX,  Channel::AccY,  Channel::AccZ,
};

std::string_view channel_name(Channel c) noexcept;
std::optional<Channel> parse_channel(std::string_view name) noexcept;

/// One tracker frame. Timestamps are seconds; point of regard is normalized
/// screen coordinates, pupil diameter millimeters, gyro deg/s, accel m/s^2.
struct GazeSample {
    double timestamp = 0.0;
    double por_x = 0.0;
    double por_y = 0.0;
    double pupil_pos_x = 0.0;
    double pupil_pos_y = 0.0;
    double pupil_diam = 0.0;
    double gyro_x = 0.0;
    double gyro_y = 0.0;
    double gyro_z = 0.0;
    double acc_x = 0.0;
    double acc_y = 0.0;
    double acc_z = 0.0;
    bool valid = true;

    double field(Channel c) const noexcept;
    double& field(Channel c) noexcept;

    bool operator==(const GazeSample&) const = default;
};

using FeatureVector = std::vector<double>;

/// Ordered, duplicate-free selection of channels that forms a feature vector.
class FeatureLayout {
public:
    /// por_x, por_y, pupil_diam, gyro xyz, acc xyz.
    FeatureLayout();
    explicit FeatureLayout(std::vector<Channel> channels);

    /// Parses a comma-separated list of channel names.
    static FeatureLayout parse(std::string_view csv);

    const std::vector<Channel>& channels() const noexcept { return channels_; }
    std::size_t size() const noexcept { return channels_.size(); }
    Channel operator[](std::size_t i) const { return channels_[i]; }
    std::string to_string() const;

    bool operator==(const FeatureLayout&) const = default;

private:
    std::vector<Channel> channels_;
};

enum class Label : std::uint8_t { NoEvent = 0, ConfusionEvent = 1 };

std::string_view label_name(Label l) noexcept;

struct Session {
    std::string subject_id;
    std::vector<GazeSample> samples;
    std::vector<double> confusion_times;
    double nominal_rate = 100.0;

    /// Throws Error(Data) when timestamps are not finite, non-negative and
    /// strictly increasing, when an event falls outside the sample span, or
    /// when nominal_rate is not positive.
    void validate() const;
};

/// Projects a valid sample onto the layout. Throws Error(Data) naming the
/// timestamp when the sample is flagged invalid.
FeatureVector to_feature_vector(const GazeSample& sample, const FeatureLayout& layout);

/// Zero-order hold for tracker dropouts: invalid frames are replaced by the
/// most recent valid frame (keeping the dropout's timestamp). Returns nullopt
/// until a first valid frame has been seen.
class DropoutHold {
public:
    std::optional<GazeSample> apply(const GazeSample& sample);

private:
    std::optional<GazeSample> last_valid_;
};

}  // namespace confdetect
