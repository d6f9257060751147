#pragma once

#include <string>

#include "dfr/metrics.hpp"

namespace dfr {

// Three-column CSV reports (section,key,value), byte-deterministic for a
// fixed report and parseable back into the structs they came from.
void write_keypoint_report_csv(const KeypointErrorReport& report, const std::string& path);
KeypointErrorReport parse_keypoint_report_csv(const std::string& path);

void write_classification_csv(const ClassificationReport& report, const std::string& path);
ClassificationReport parse_classification_csv(const std::string& path);

void write_fps_csv(const FpsReport& report, const std::string& path);
FpsReport parse_fps_csv(const std::string& path);

// Self-contained SVG bar charts (no external renderer): per-keypoint mean
// error and per-disguise accuracy.
void write_keypoint_error_svg(const KeypointErrorReport& report, const std::string& path);
void write_disguise_accuracy_svg(const ClassificationReport& report, const std::string& path);

}  // namespace dfr
