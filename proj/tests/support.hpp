#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "confdetect/domain.hpp"
#include "confdetect/labeling.hpp"
#include "confdetect/random.hpp"

namespace testing_support {

using namespace confdetect;

inline GazeSample random_sample(Rng& rng, double t = 0.0) {
    GazeSample s;
    s.timestamp = t;
    for (Channel c : kAllChannels) s.field(c) = rng.normal(0.0, 10.0);
    return s;
}

/// 100 Hz grid 0..seconds inclusive, constant features.
inline Session grid_session(std::string id, double seconds, std::vector<double> events) {
    Session s;
    s.subject_id = std::move(id);
    const auto n = static_cast<std::size_t>(seconds * 100.0 + 0.5) + 1;
    for (std::size_t i = 0; i < n; ++i) {
        GazeSample g;
        g.timestamp = static_cast<double>(i) / 100.0;
        g.pupil_diam = 3.0;
        s.samples.push_back(g);
    }
    s.confusion_times = std::move(events);
    return s;
}

/// Two Gaussian blobs in `dims` dimensions, centers at 0 and `gap`.
inline std::vector<LabeledSample> blobs(Rng& rng, std::size_t per_class, std::size_t dims, double gap,
                                        std::size_t subjects = 3) {
    std::vector<LabeledSample> out;
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        LabeledSample s;
        const bool event = i % 2 == 1;
        s.label = event ? Label::ConfusionEvent : Label::NoEvent;
        s.subject_id = "S" + std::to_string(i % subjects);
        s.timestamp = static_cast<double>(i);
        for (std::size_t d = 0; d < dims; ++d) s.features.push_back(rng.normal(event ? gap : 0.0, 1.0));
        out.push_back(std::move(s));
    }
    return out;
}

inline FeatureLayout first_channels(std::size_t n) {
    std::vector<Channel> c(kAllChannels.begin(), kAllChannels.begin() + static_cast<std::ptrdiff_t>(n));
    return FeatureLayout(c);
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("confdetect-" + tag + "-" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

}  // namespace testing_support
