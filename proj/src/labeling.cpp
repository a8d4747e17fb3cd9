#include "confdetect/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "confdetect/error.hpp"
#include "confdetect/io.hpp"

namespace confdetect {

std::vector<LabeledSample> label_session(const Session& session, const FeatureLayout& layout, double half_width) {
    if (!(half_width > 0.0)) fail(ErrorKind::InvalidArgument, "half width must be positive");
    std::vector<double> events = session.confusion_times;
    std::sort(events.begin(), events.end());

    std::vector<LabeledSample> out;
    out.reserve(session.samples.size());
    for (const auto& s : session.samples) {
        if (!s.valid) continue;
        // Nearest event is either the first one at or after t, or its predecessor.
        bool in_window = false;
        const auto it = std::lower_bound(events.begin(), events.end(), s.timestamp);
        if (it != events.end() && within_window(s.timestamp, *it, half_width)) in_window = true;
        if (it != events.begin() && within_window(s.timestamp, *std::prev(it), half_width)) in_window = true;
        out.push_back({session.subject_id, to_feature_vector(s, layout),
                       in_window ? Label::ConfusionEvent : Label::NoEvent, s.timestamp});
    }
    return out;
}

ClassCounts corpus_counts(std::span<const LabeledSample> labeled) noexcept {
    ClassCounts c;
    for (const auto& s : labeled) {
        if (s.label == Label::ConfusionEvent) {
            ++c.n_event;
        } else {
            ++c.n_noevent;
        }
    }
    return c;
}

void write_labeled_csv(std::ostream& out, std::span<const LabeledSample> labeled, const FeatureLayout& layout) {
    out << "subject_id,timestamp";
    for (Channel c : layout.channels()) out << ',' << channel_name(c);
    out << ",label\n";
    for (const auto& s : labeled) {
        if (s.features.size() != layout.size()) {
            fail(ErrorKind::InvalidArgument, "labeled sample width does not match layout");
        }
        out << s.subject_id << ',' << io::format_double(s.timestamp);
        for (double v : s.features) out << ',' << io::format_double(v);
        out << ',' << (s.label == Label::ConfusionEvent ? '1' : '0') << '\n';
    }
}

LabeledCorpus read_labeled_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::Data, "empty labeled csv");
    const auto header = io::split(io::trim_eol(line), ',');
    if (header.size() < 4 || header.front() != "subject_id" || header[1] != "timestamp" || header.back() != "label") {
        fail(ErrorKind::Data, "line 1: labeled csv header must be subject_id,timestamp,<channels...>,label");
    }
    std::vector<Channel> channels;
    for (std::size_t i = 2; i + 1 < header.size(); ++i) {
        const auto c = parse_channel(header[i]);
        if (!c) fail(ErrorKind::Data, "line 1: unknown channel '" + std::string(header[i]) + "'");
        channels.push_back(*c);
    }
    LabeledCorpus corpus{FeatureLayout(std::move(channels)), {}};
    const std::size_t width = corpus.layout.size();

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto row = io::trim_eol(line);
        if (row.empty()) continue;
        const auto fields = io::split(row, ',');
        const auto where = "line " + std::to_string(line_no) + ": ";
        if (fields.size() != width + 3) fail(ErrorKind::Data, where + "wrong column count");
        LabeledSample s;
        s.subject_id = std::string(fields[0]);
        if (s.subject_id.empty()) fail(ErrorKind::Data, where + "empty subject_id");
        if (!io::parse_double(fields[1], s.timestamp)) fail(ErrorKind::Data, where + "bad timestamp");
        s.features.resize(width);
        for (std::size_t i = 0; i < width; ++i) {
            if (!io::parse_double(fields[i + 2], s.features[i]) || !std::isfinite(s.features[i])) {
                fail(ErrorKind::Data, where + "bad value in column " + std::to_string(i + 3));
            }
        }
        if (fields.back() == "1") {
            s.label = Label::ConfusionEvent;
        } else if (fields.back() == "0") {
            s.label = Label::NoEvent;
        } else {
            fail(ErrorKind::Data, where + "label must be 0 or 1");
        }
        corpus.samples.push_back(std::move(s));
    }
    return corpus;
}

}  // namespace confdetect
