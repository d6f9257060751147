#include "dfr/report_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "dfr/errors.hpp"
#include "dfr/text.hpp"

namespace dfr {

namespace {

std::string fmt(double v) { return format_double(v); }

double parse_num(const std::string& s, const std::string& where) {
  return parse_double(s, "report csv: " + where);
}

struct CsvRow {
  std::string section, key, value;
};

std::vector<CsvRow> read_rows(const std::string& path, const char* expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open report: " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("report csv: empty file " + path);
  if (split_on(line, ',') != std::vector<std::string>{"section", "key", "value"})
    throw FormatError("report csv: bad header in " + path);
  std::vector<CsvRow> rows;
  bool kind_ok = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_on(line, ',');
    if (f.size() != 3) throw FormatError("report csv: expected 3 columns in " + path);
    if (f[0] == "meta" && f[1] == "report" && f[2] == expected_kind) kind_ok = true;
    rows.push_back({f[0], f[1], f[2]});
  }
  if (!kind_ok)
    throw FormatError("report csv: " + path + " is not a '" + expected_kind + "' report");
  return rows;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report: " + path);
  out << "section,key,value\n";
  return out;
}

}  // namespace

void write_keypoint_report_csv(const KeypointErrorReport& r, const std::string& path) {
  auto out = open_out(path);
  out << "meta,report,keypoint_errors\n";
  out << "meta,samples," << r.sample_count << "\n";
  out << "meta,tau," << fmt(r.tau) << "\n";
  out << "meta,overall_mae," << fmt(r.overall_mae) << "\n";
  out << "meta,accuracy_at_tau," << fmt(r.accuracy_at_tau) << "\n";
  for (int k = 0; k < kKeypointCount; ++k)
    out << "keypoint," << keypoint_names()[static_cast<size_t>(k)] << ","
        << fmt(r.per_keypoint_mean_error[static_cast<size_t>(k)]) << "\n";
  for (int k = 0; k < kKeypointCount; ++k) {
    out << "hist," << keypoint_names()[static_cast<size_t>(k)] << ",";
    const auto& h = r.per_keypoint_histogram[static_cast<size_t>(k)];
    for (int b = 0; b < kHistogramBins; ++b) out << (b ? ";" : "") << h[static_cast<size_t>(b)];
    out << "\n";
  }
  for (const auto& [tau, acc] : r.accuracy_curve)
    out << "curve," << fmt(tau) << "," << fmt(acc) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

KeypointErrorReport parse_keypoint_report_csv(const std::string& path) {
  KeypointErrorReport r;
  r.per_keypoint_mean_error.assign(kKeypointCount, 0.0);
  r.per_keypoint_histogram.assign(kKeypointCount, std::vector<int>(kHistogramBins, 0));
  for (const CsvRow& row : read_rows(path, "keypoint_errors")) {
    if (row.section == "meta") {
      if (row.key == "samples") r.sample_count = static_cast<int>(parse_num(row.value, "samples"));
      else if (row.key == "tau") r.tau = parse_num(row.value, "tau");
      else if (row.key == "overall_mae") r.overall_mae = parse_num(row.value, "overall_mae");
      else if (row.key == "accuracy_at_tau")
        r.accuracy_at_tau = parse_num(row.value, "accuracy_at_tau");
    } else if (row.section == "keypoint") {
      r.per_keypoint_mean_error[static_cast<size_t>(keypoint_index(row.key))] =
          parse_num(row.value, row.key);
    } else if (row.section == "hist") {
      const auto bins = split_on(row.value, ';');
      if (static_cast<int>(bins.size()) != kHistogramBins)
        throw FormatError("report csv: histogram bin count mismatch for " + row.key);
      auto& h = r.per_keypoint_histogram[static_cast<size_t>(keypoint_index(row.key))];
      for (int b = 0; b < kHistogramBins; ++b)
        h[static_cast<size_t>(b)] = static_cast<int>(parse_num(bins[static_cast<size_t>(b)], "hist"));
    } else if (row.section == "curve") {
      r.accuracy_curve.emplace_back(parse_num(row.key, "curve tau"),
                                    parse_num(row.value, "curve accuracy"));
    }
  }
  return r;
}

void write_classification_csv(const ClassificationReport& r, const std::string& path) {
  auto out = open_out(path);
  out << "meta,report,classification\n";
  out << "meta,total," << r.total << "\n";
  out << "meta,overall_accuracy," << fmt(r.overall_accuracy) << "\n";
  for (const DisguiseAccuracy& d : r.per_disguise)
    out << "disguise," << disguise_slug(d.disguise) << "," << d.correct << ";" << d.total << ";"
        << fmt(d.accuracy) << "\n";
  {
    out << "labels,subjects,";
    for (size_t i = 0; i < r.labels.size(); ++i) out << (i ? ";" : "") << r.labels[i];
    out << "\n";
  }
  for (size_t i = 0; i < r.labels.size(); ++i) {
    out << "confusion," << r.labels[i] << ",";
    for (size_t j = 0; j < r.confusion[i].size(); ++j) out << (j ? ";" : "") << r.confusion[i][j];
    out << "\n";
  }
  // Published accuracies, kept in the footer for comparison. The source
  // table labels these rows [2]/[3]; the accompanying text cites [15]/[16].
  out << "reference,dfr_simple," << fmt(r.reference.dfr_simple) << "\n";
  out << "reference,dfr_complex," << fmt(r.reference.dfr_complex) << "\n";
  out << "reference,dhamecha_simple," << fmt(r.reference.dhamecha_simple) << "\n";
  out << "reference,dhamecha_complex," << fmt(r.reference.dhamecha_complex) << "\n";
  out << "reference,singh_simple," << fmt(r.reference.singh_simple) << "\n";
  out << "reference,singh_complex," << fmt(r.reference.singh_complex) << "\n";
  out << "reference_note,dhamecha,table row [2]; text citation [15]\n";
  out << "reference_note,singh,table row [3]; text citation [16]\n";
  if (!out) throw IoError("write failed: " + path);
}

ClassificationReport parse_classification_csv(const std::string& path) {
  ClassificationReport r;
  std::vector<CsvRow> confusion_rows;
  for (const CsvRow& row : read_rows(path, "classification")) {
    if (row.section == "meta") {
      if (row.key == "total") r.total = static_cast<int>(parse_num(row.value, "total"));
      else if (row.key == "overall_accuracy")
        r.overall_accuracy = parse_num(row.value, "overall_accuracy");
    } else if (row.section == "disguise") {
      const auto parts = split_on(row.value, ';');
      if (parts.size() != 3) throw FormatError("report csv: bad disguise row " + row.key);
      const auto kind = disguise_from_slug(row.key);
      if (!kind) throw FormatError("report csv: bad disguise id " + row.key);
      DisguiseAccuracy d;
      d.disguise = *kind;
      d.correct = static_cast<int>(parse_num(parts[0], "disguise"));
      d.total = static_cast<int>(parse_num(parts[1], "disguise"));
      d.accuracy = parse_num(parts[2], "disguise");
      r.per_disguise.push_back(d);
    } else if (row.section == "labels") {
      for (const auto& tok : split_on(row.value, ';'))
        r.labels.push_back(static_cast<int>(parse_num(tok, "labels")));
    } else if (row.section == "confusion") {
      confusion_rows.push_back(row);
    } else if (row.section == "reference") {
      const double v = parse_num(row.value, row.key);
      if (row.key == "dfr_simple") r.reference.dfr_simple = v;
      else if (row.key == "dfr_complex") r.reference.dfr_complex = v;
      else if (row.key == "dhamecha_simple") r.reference.dhamecha_simple = v;
      else if (row.key == "dhamecha_complex") r.reference.dhamecha_complex = v;
      else if (row.key == "singh_simple") r.reference.singh_simple = v;
      else if (row.key == "singh_complex") r.reference.singh_complex = v;
    }
  }
  r.confusion.assign(r.labels.size(), std::vector<int>(r.labels.size(), 0));
  if (confusion_rows.size() != r.labels.size())
    throw FormatError("report csv: confusion row count mismatch");
  for (size_t i = 0; i < confusion_rows.size(); ++i) {
    const auto cells = split_on(confusion_rows[i].value, ';');
    if (cells.size() != r.labels.size())
      throw FormatError("report csv: confusion column count mismatch");
    for (size_t j = 0; j < cells.size(); ++j)
      r.confusion[i][j] = static_cast<int>(parse_num(cells[j], "confusion"));
  }
  return r;
}

void write_fps_csv(const FpsReport& r, const std::string& path) {
  auto out = open_out(path);
  out << "meta,report,fps\n";
  out << "meta,batch," << r.batch << "\n";
  out << "meta,warmup_frames," << r.warmup_frames << "\n";
  out << "inference,frames," << r.frames << "\n";
  out << "inference,wall_seconds," << fmt(r.wall_seconds) << "\n";
  out << "inference,seconds_per_frame," << fmt(r.seconds_per_frame) << "\n";
  out << "inference,fps," << fmt(r.fps) << "\n";
  out << "with_preprocessing,frames," << r.frames_pre << "\n";
  out << "with_preprocessing,wall_seconds," << fmt(r.wall_seconds_pre) << "\n";
  out << "with_preprocessing,seconds_per_frame," << fmt(r.seconds_per_frame_pre) << "\n";
  out << "with_preprocessing,fps," << fmt(r.fps_pre) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

FpsReport parse_fps_csv(const std::string& path) {
  FpsReport r;
  for (const CsvRow& row : read_rows(path, "fps")) {
    const auto num = [&row] { return parse_num(row.value, row.key); };
    if (row.section == "meta") {
      if (row.key == "batch") r.batch = static_cast<int>(num());
      else if (row.key == "warmup_frames") r.warmup_frames = static_cast<int>(num());
    } else if (row.section == "inference") {
      if (row.key == "frames") r.frames = static_cast<int>(num());
      else if (row.key == "wall_seconds") r.wall_seconds = num();
      else if (row.key == "seconds_per_frame") r.seconds_per_frame = num();
      else if (row.key == "fps") r.fps = num();
    } else if (row.section == "with_preprocessing") {
      if (row.key == "frames") r.frames_pre = static_cast<int>(num());
      else if (row.key == "wall_seconds") r.wall_seconds_pre = num();
      else if (row.key == "seconds_per_frame") r.seconds_per_frame_pre = num();
      else if (row.key == "fps") r.fps_pre = num();
    }
  }
  return r;
}

namespace {

// Minimal vertical-bar chart shared by both SVG reports.
void write_bar_chart(const std::string& path, const std::string& title,
                     const std::vector<std::pair<std::string, double>>& bars, double max_value,
                     const std::string& value_suffix) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write svg: " + path);

  const int bar_w = 28, gap = 10, left = 50, bottom = 60, top = 40;
  const int plot_h = 220;
  const int width = left + static_cast<int>(bars.size()) * (bar_w + gap) + gap + 20;
  const int height = top + plot_h + bottom;
  if (max_value <= 0.0) max_value = 1.0;

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"monospace\" font-size=\"10\">\n";
  out << "<text x=\"" << left << "\" y=\"20\" font-size=\"13\">" << title << "</text>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << top + plot_h << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << width - 10
      << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  for (int g = 0; g <= 4; ++g) {
    const double v = max_value * g / 4.0;
    const int y = top + plot_h - static_cast<int>(plot_h * g / 4.0);
    out << "<text x=\"4\" y=\"" << y + 3 << "\">" << fmt(std::round(v * 100.0) / 100.0)
        << value_suffix << "</text>\n";
    out << "<line x1=\"" << left - 3 << "\" y1=\"" << y << "\" x2=\"" << left << "\" y2=\"" << y
        << "\" stroke=\"black\"/>\n";
  }
  int x = left + gap;
  for (const auto& [label, value] : bars) {
    const int h = static_cast<int>(plot_h * std::min(1.0, value / max_value));
    out << "<rect x=\"" << x << "\" y=\"" << top + plot_h - h << "\" width=\"" << bar_w
        << "\" height=\"" << h << "\" fill=\"#4477aa\"/>\n";
    out << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << top + plot_h - h - 4
        << "\" text-anchor=\"middle\">" << fmt(std::round(value * 100.0) / 100.0) << "</text>\n";
    out << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << top + plot_h + 8
        << "\" text-anchor=\"end\" transform=\"rotate(-60 " << x + bar_w / 2 << " "
        << top + plot_h + 8 << ")\">" << label << "</text>\n";
    x += bar_w + gap;
  }
  out << "</svg>\n";
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace

void write_keypoint_error_svg(const KeypointErrorReport& r, const std::string& path) {
  std::vector<std::pair<std::string, double>> bars;
  double max_v = 0.0;
  for (int k = 0; k < kKeypointCount; ++k) {
    const double v = r.per_keypoint_mean_error[static_cast<size_t>(k)];
    bars.emplace_back(std::string(keypoint_names()[static_cast<size_t>(k)]), v);
    max_v = std::max(max_v, v);
  }
  write_bar_chart(path, "Mean prediction error per keypoint (px)", bars,
                  std::max(1.0, std::ceil(max_v)), "");
}

void write_disguise_accuracy_svg(const ClassificationReport& r, const std::string& path) {
  std::vector<std::pair<std::string, double>> bars;
  for (const DisguiseAccuracy& d : r.per_disguise)
    bars.emplace_back(disguise_slug(d.disguise), d.accuracy);
  write_bar_chart(path, "Classification accuracy per disguise", bars, 1.0, "");
}

}  // namespace dfr
