#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "confdetect/domain.hpp"
#include "confdetect/error.hpp"
#include "support.hpp"

using namespace confdetect;
using testing_support::random_sample;

TEST_CASE("default layout has nine channels without pupil position") {
    FeatureLayout layout;
    CHECK(layout.size() == 9);
    CHECK(layout.to_string() == "por_x,por_y,pupil_diam,gyro_x,gyro_y,gyro_z,acc_x,acc_y,acc_z");
    CHECK(FeatureLayout::parse(layout.to_string()) == layout);
}

TEST_CASE("layout rejects empty, duplicate and unknown channels") {
    CHECK_THROWS_AS(FeatureLayout(std::vector<Channel>{}), Error);
    CHECK_THROWS_AS(FeatureLayout({Channel::PorX, Channel::PorX}), Error);
    CHECK_THROWS_AS(FeatureLayout::parse("por_x,nose"), Error);
    CHECK(FeatureLayout::parse(" pupil_pos_x , acc_z").size() == 2);
}

TEST_CASE("channel names round trip") {
    for (Channel c : kAllChannels) {
        auto parsed = parse_channel(channel_name(c));
        REQUIRE(parsed);
        CHECK(*parsed == c);
    }
    CHECK_FALSE(parse_channel("PorX"));
}

TEST_CASE("all-zero sample projects to zeros") {
    GazeSample s;
    CHECK(to_feature_vector(s, FeatureLayout()) == FeatureVector(9, 0.0));
}

TEST_CASE("projection follows layout order") {
    GazeSample s;
    s.por_x = 0.5;
    s.por_y = 0.5;
    s.pupil_diam = 3.0;
    s.gyro_x = 1;
    s.gyro_y = 2;
    s.gyro_z = 3;
    s.acc_z = 9.81;
    s.pupil_pos_x = 77;  // not in the default layout
    CHECK(to_feature_vector(s, FeatureLayout()) == FeatureVector{0.5, 0.5, 3.0, 1, 2, 3, 0, 0, 9.81});
}

TEST_CASE("single channel projection matches brute-force field lookup") {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        GazeSample s = random_sample(rng);
        CHECK(to_feature_vector(s, FeatureLayout({Channel::PupilDiam})) == FeatureVector{s.pupil_diam});
        const double fields[] = {s.por_x, s.por_y, s.pupil_pos_x, s.pupil_pos_y, s.pupil_diam, s.gyro_x,
                                 s.gyro_y, s.gyro_z, s.acc_x,     s.acc_y,     s.acc_z};
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            CHECK(to_feature_vector(s, FeatureLayout({kAllChannels[c]}))[0] == fields[c]);
        }
    }
}

TEST_CASE("permuting the layout permutes the output") {
    Rng rng(2);
    std::vector<Channel> base(kAllChannels.begin(), kAllChannels.end());
    for (int trial = 0; trial < 200; ++trial) {
        GazeSample s = random_sample(rng);
        std::vector<std::size_t> perm(base.size());
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        std::vector<Channel> permuted;
        for (auto p : perm) permuted.push_back(base[p]);
        const auto full = to_feature_vector(s, FeatureLayout(base));
        const auto out = to_feature_vector(s, FeatureLayout(permuted));
        for (std::size_t i = 0; i < perm.size(); ++i) CHECK(out[i] == full[perm[i]]);
    }
}

TEST_CASE("invalid sample is rejected with its timestamp") {
    GazeSample s;
    s.timestamp = 12.34;
    s.valid = false;
    try {
        to_feature_vector(s, FeatureLayout());
        FAIL("expected rejection");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Data);
        CHECK(std::string(e.what()).find("12.34") != std::string::npos);
    }
}

TEST_CASE("session validation") {
    Session s = testing_support::grid_session("A", 1.0, {0.5});
    CHECK_NOTHROW(s.validate());

    Session outside = s;
    outside.confusion_times = {1.5};
    CHECK_THROWS_AS(outside.validate(), Error);

    Session unordered = s;
    std::swap(unordered.samples[3], unordered.samples[4]);
    CHECK_THROWS_AS(unordered.validate(), Error);

    Session bad_rate = s;
    bad_rate.nominal_rate = 0;
    CHECK_THROWS_AS(bad_rate.validate(), Error);
}

TEST_CASE("dropout hold repeats the last valid frame") {
    DropoutHold hold;
    GazeSample bad;
    bad.valid = false;
    bad.timestamp = 0.0;
    CHECK_FALSE(hold.apply(bad));

    GazeSample good;
    good.timestamp = 0.01;
    good.pupil_diam = 3.3;
    auto out = hold.apply(good);
    REQUIRE(out);
    CHECK(*out == good);

    bad.timestamp = 0.02;
    out = hold.apply(bad);
    REQUIRE(out);
    CHECK(out->valid);
    CHECK(out->pupil_diam == 3.3);
    CHECK(out->timestamp == 0.02);
}
