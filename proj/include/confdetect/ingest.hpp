#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "confdetect/domain.hpp"

namespace confdetect {

/// Header line of the recording CSV.
inline constexpr std::string_view kRecordingHeader =
    "timestamp,por_x,por_y,pupil_pos_x,pupil_pos_y,pupil_diam,gyro_x,gyro_y,gyro_z,acc_x,acc_y,acc_z,valid";

/// Rows as read from disk; timestamps are on the device clock.
struct RawRecording {
    std::string subject_id;
    std::vector<GazeSample> rows;
};

/// Confusion reports on the device clock.
struct AnnotationTrack {
    std::string subject_id;
    double surgery_start = 0.0;
    std::vector<double> events;
};

bool is_recording_header(std::string_view line) noexcept;

/// Parses one data row. line_no is used in error messages only.
GazeSample parse_recording_row(std::string_view line, std::size_t line_no);

/// Errors (Data): missing or wrong header, malformed row (with its line
/// number), non-increasing timestamps, empty data section.
RawRecording parse_recording(std::istream& in, std::string subject_id);

AnnotationTrack parse_annotations(std::istream& in);

/// Rebases both timelines so that surgery start is t = 0 and drops frames
/// recorded before it.
Session synchronize(const RawRecording& recording, const AnnotationTrack& annotations,
                    double nominal_rate = 100.0);

void write_recording_row(std::ostream& out, const GazeSample& s, double time_offset = 0.0);

/// Recording CSV with timestamps shifted by device_offset.
void write_recording_csv(std::ostream& out, const Session& session, double device_offset = 0.0);

/// Annotation JSON; surgery start is the first sample's device time.
void write_annotation_json(std::ostream& out, const Session& session, double device_offset = 0.0);

/// Loads every `<id>.csv` + `<id>.json` pair in a directory, sorted by id.
std::vector<Session> load_session_dir(const std::string& dir);

/// Writes `<id>.csv` + `<id>.json` per session.
void export_session_dir(const std::vector<Session>& sessions, const std::string& dir, double device_offset = 0.0);

}  // namespace confdetect
