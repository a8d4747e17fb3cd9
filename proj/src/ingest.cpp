#include "confdetect/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "confdetect/error.hpp"
#include "confdetect/io.hpp"

namespace confdetect {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kRecordingColumns = 13;

[[noreturn]] void row_error(std::size_t line_no, const std::string& what) {
    fail(ErrorKind::Data, "line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

bool is_recording_header(std::string_view line) noexcept { return io::trim_eol(line) == kRecordingHeader; }

GazeSample parse_recording_row(std::string_view line, std::size_t line_no) {
    const auto fields = io::split(io::trim_eol(line), ',');
    if (fields.size() != kRecordingColumns) {
        row_error(line_no, "expected " + std::to_string(kRecordingColumns) + " columns, got " +
                               std::to_string(fields.size()));
    }
    GazeSample s;
    if (!io::parse_double(fields[0], s.timestamp) || !std::isfinite(s.timestamp)) {
        row_error(line_no, "bad timestamp '" + std::string(fields[0]) + "'");
    }
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        const Channel ch = kAllChannels[c];
        if (!io::parse_double(fields[c + 1], s.field(ch))) {
            row_error(line_no, "bad " + std::string(channel_name(ch)) + " value '" + std::string(fields[c + 1]) + "'");
        }
    }
    if (fields[12] == "1") {
        s.valid = true;
    } else if (fields[12] == "0") {
        s.valid = false;
    } else {
        row_error(line_no, "valid must be 0 or 1, got '" + std::string(fields[12]) + "'");
    }
    return s;
}

RawRecording parse_recording(std::istream& in, std::string subject_id) {
    RawRecording rec{std::move(subject_id), {}};
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) fail(ErrorKind::Data, "empty recording");
    ++line_no;
    if (!is_recording_header(line)) {
        fail(ErrorKind::Data, "line 1: recording header mismatch, expected '" + std::string(kRecordingHeader) + "'");
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (io::trim_eol(line).empty()) continue;
        GazeSample s = parse_recording_row(line, line_no);
        if (!rec.rows.empty() && !(s.timestamp > rec.rows.back().timestamp)) {
            row_error(line_no, "timestamp not strictly increasing");
        }
        rec.rows.push_back(s);
    }
    if (rec.rows.empty()) fail(ErrorKind::Data, "empty recording");
    return rec;
}

AnnotationTrack parse_annotations(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
        AnnotationTrack track;
        track.subject_id = j.at("subject_id").get<std::string>();
        track.surgery_start = j.at("surgery_start").get<double>();
        track.events = j.at("events").get<std::vector<double>>();
        for (double e : track.events) {
            if (e < track.surgery_start) {
                fail(ErrorKind::Data, "annotation " + track.subject_id + ": event " + io::format_double(e) +
                                          " precedes surgery start");
            }
        }
        return track;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Data, std::string("annotation json: ") + e.what());
    }
}

Session synchronize(const RawRecording& recording, const AnnotationTrack& annotations, double nominal_rate) {
    if (recording.subject_id != annotations.subject_id) {
        fail(ErrorKind::Data, "subject mismatch: recording '" + recording.subject_id + "' vs annotations '" +
                                  annotations.subject_id + "'");
    }
    if (recording.rows.empty()) fail(ErrorKind::Data, "empty recording");
    const double start = annotations.surgery_start;
    const double first = recording.rows.front().timestamp;
    const double last = recording.rows.back().timestamp;
    if (start < first || start > last) {
        fail(ErrorKind::Data, "surgery start " + io::format_double(start) + " outside recording span [" +
                                  io::format_double(first) + ", " + io::format_double(last) + "]");
    }

    Session session;
    session.subject_id = recording.subject_id;
    session.nominal_rate = nominal_rate;
    auto it = std::lower_bound(recording.rows.begin(), recording.rows.end(), start,
                               [](const GazeSample& s, double t) { return s.timestamp < t; });
    session.samples.reserve(static_cast<std::size_t>(recording.rows.end() - it));
    for (; it != recording.rows.end(); ++it) {
        GazeSample s = *it;
        s.timestamp -= start;
        session.samples.push_back(s);
    }
    for (double e : annotations.events) {
        if (e < start) fail(ErrorKind::Data, "confusion event " + io::format_double(e) + " precedes surgery start");
        if (e > last) fail(ErrorKind::Data, "confusion event " + io::format_double(e) + " after end of recording");
        session.confusion_times.push_back(e - start);
    }
    std::sort(session.confusion_times.begin(), session.confusion_times.end());
    session.validate();
    return session;
}

void write_recording_row(std::ostream& out, const GazeSample& s, double time_offset) {
    out << io::format_double(s.timestamp + time_offset);
    for (Channel c : kAllChannels) out << ',' << io::format_double(s.field(c));
    out << ',' << (s.valid ? '1' : '0') << '\n';
}

void write_recording_csv(std::ostream& out, const Session& session, double device_offset) {
    out << kRecordingHeader << '\n';
    for (const auto& s : session.samples) write_recording_row(out, s, device_offset);
}

void write_annotation_json(std::ostream& out, const Session& session, double device_offset) {
    nlohmann::json j;
    j["subject_id"] = session.subject_id;
    j["surgery_start"] = (session.samples.empty() ? 0.0 : session.samples.front().timestamp) + device_offset;
    std::vector<double> events;
    for (double e : session.confusion_times) events.push_back(e + device_offset);
    j["events"] = events;
    out << j.dump() << '\n';
}

std::vector<Session> load_session_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) fail(ErrorKind::Io, "not a directory: " + dir);
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") {
            ids.push_back(entry.path().stem().string());
        }
    }
    std::sort(ids.begin(), ids.end());
    if (ids.empty()) fail(ErrorKind::Data, "no recording CSV files in " + dir);

    std::vector<Session> sessions;
    for (const auto& id : ids) {
        const fs::path csv = fs::path(dir) / (id + ".csv");
        const fs::path ann = fs::path(dir) / (id + ".json");
        std::ifstream csv_in(csv);
        if (!csv_in) fail(ErrorKind::Io, "cannot open " + csv.string());
        std::ifstream ann_in(ann);
        if (!ann_in) fail(ErrorKind::Io, "missing annotation file " + ann.string());
        try {
            const RawRecording rec = parse_recording(csv_in, id);
            sessions.push_back(synchronize(rec, parse_annotations(ann_in)));
        } catch (const Error& e) {
            throw Error(e.kind(), csv.filename().string() + ": " + e.what());
        }
    }
    return sessions;
}

void export_session_dir(const std::vector<Session>& sessions, const std::string& dir, double device_offset) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::Io, "cannot create " + dir + ": " + ec.message());
    for (const auto& s : sessions) {
        std::ostringstream csv;
        write_recording_csv(csv, s, device_offset);
        io::write_file_atomic(fs::path(dir) / (s.subject_id + ".csv"), csv.str());
        std::ostringstream ann;
        write_annotation_json(ann, s, device_offset);
        io::write_file_atomic(fs::path(dir) / (s.subject_id + ".json"), ann.str());
    }
}

}  // namespace confdetect
