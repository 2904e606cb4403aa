#include "manta/formats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "manta/errors.hpp"

namespace manta {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  return fields;
}

double parse_number(const std::string& s, const std::string& file, int line) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw FormatError(file, line, "invalid number '" + s + "'");
  return v;
}

int parse_int(const std::string& s, const std::string& file, int line) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw FormatError(file, line, "invalid integer '" + s + "'");
  return v;
}

std::ifstream open_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream create_text(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  return out;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

std::vector<Detection> parse_detections(const std::filesystem::path& path) {
  std::ifstream in = open_text(path);
  std::vector<Detection> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line) || line[0] == '#') continue;
    const auto f = split_csv(line);
    if (f.size() != 7)
      throw FormatError(path.string(), lineno,
                        "expected 7 fields (frame,track_id,x,y,w,h,score), got " +
                            std::to_string(f.size()));
    Detection d;
    d.frame = parse_int(f[0], path.string(), lineno);
    d.track_id = parse_int(f[1], path.string(), lineno);
    const double x = parse_number(f[2], path.string(), lineno);
    const double y = parse_number(f[3], path.string(), lineno);
    const double w = parse_number(f[4], path.string(), lineno);
    const double h = parse_number(f[5], path.string(), lineno);
    d.score = parse_number(f[6], path.string(), lineno);
    if (d.frame < 1) throw FormatError(path.string(), lineno, "frame index must be >= 1");
    if (!(w > 0) || !(h > 0))
      throw FormatError(path.string(), lineno, "box size must be positive");
    if (d.score < 0 || d.score > 1)
      throw FormatError(path.string(), lineno, "score must be in [0,1]");
    d.bbox = BBox(x, y, w, h);
    rows.push_back(d);
  }
  return rows;
}

void write_detections(const std::filesystem::path& path, const std::vector<Detection>& rows) {
  std::ofstream out = create_text(path);
  for (const Detection& d : rows)
    out << d.frame << ',' << d.track_id << ',' << format_double(d.bbox.x) << ','
        << format_double(d.bbox.y) << ',' << format_double(d.bbox.w) << ','
        << format_double(d.bbox.h) << ',' << format_double(d.score) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<std::vector<Detection>> group_by_frame(const std::vector<Detection>& rows,
                                                   int n_frames) {
  int max_frame = n_frames;
  for (const Detection& d : rows) {
    if (n_frames > 0 && d.frame > n_frames)
      throw DataError("detection frame " + std::to_string(d.frame) +
                      " exceeds sequence length " + std::to_string(n_frames));
    max_frame = std::max(max_frame, d.frame);
  }
  std::vector<std::vector<Detection>> grouped(static_cast<std::size_t>(std::max(max_frame, 0)));
  for (const Detection& d : rows)
    grouped[static_cast<std::size_t>(d.frame - 1)].push_back(d);
  return grouped;
}

std::vector<std::optional<BBox>> parse_ground_truth(const std::filesystem::path& path) {
  std::ifstream in = open_text(path);
  std::vector<std::optional<BBox>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    const auto f = split_csv(line);
    if (f.size() != 4)
      throw FormatError(path.string(), lineno,
                        "expected 4 fields (x,y,w,h), got " + std::to_string(f.size()));
    const double x = parse_number(f[0], path.string(), lineno);
    const double y = parse_number(f[1], path.string(), lineno);
    const double w = parse_number(f[2], path.string(), lineno);
    const double h = parse_number(f[3], path.string(), lineno);
    if (x == 0 && y == 0 && w == 0 && h == 0) {
      rows.push_back(std::nullopt);  // target absent
    } else if (!(w > 0) || !(h > 0)) {
      throw FormatError(path.string(), lineno, "box size must be positive");
    } else {
      rows.push_back(BBox(x, y, w, h));
    }
  }
  return rows;
}

void write_ground_truth(const std::filesystem::path& path,
                        const std::vector<std::optional<BBox>>& rows) {
  std::ofstream out = create_text(path);
  for (const auto& r : rows) {
    if (r)
      out << format_double(r->x) << ',' << format_double(r->y) << ','
          << format_double(r->w) << ',' << format_double(r->h) << '\n';
    else
      out << "0,0,0,0\n";
  }
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<BBox> parse_predictions(const std::filesystem::path& path) {
  std::ifstream in = open_text(path);
  std::vector<BBox> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    const auto f = split_csv(line);
    if (f.size() != 4)
      throw FormatError(path.string(), lineno,
                        "expected 4 fields (x,y,w,h), got " + std::to_string(f.size()));
    const double x = parse_number(f[0], path.string(), lineno);
    const double y = parse_number(f[1], path.string(), lineno);
    const double w = parse_number(f[2], path.string(), lineno);
    const double h = parse_number(f[3], path.string(), lineno);
    if (!(w > 0) || !(h > 0))
      throw FormatError(path.string(), lineno, "box size must be positive");
    rows.push_back(BBox(x, y, w, h));
  }
  return rows;
}

void write_predictions(const std::filesystem::path& path, const std::vector<BBox>& boxes) {
  std::ofstream out = create_text(path);
  for (const BBox& b : boxes)
    out << format_double(b.x) << ',' << format_double(b.y) << ',' << format_double(b.w)
        << ',' << format_double(b.h) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

void write_audit(const std::filesystem::path& path, const std::vector<AuditEntry>& entries) {
  std::ofstream out = create_text(path);
  out << "frame,step_fired,score,cos\n";
  for (const AuditEntry& e : entries) {
    out << e.frame << ',' << to_string(e.step) << ',';
    if (!std::isnan(e.score)) out << format_double(e.score);
    out << ',';
    if (!std::isnan(e.cos)) out << format_double(e.cos);
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

namespace {

nlohmann::json curve_to_json(const Curve& c) {
  return {{"thresholds", c.thresholds}, {"values", c.values}, {"auc", c.auc}};
}

Curve curve_from_json(const nlohmann::json& j) {
  Curve c;
  c.thresholds = j.at("thresholds").get<std::vector<double>>();
  c.values = j.at("values").get<std::vector<double>>();
  c.auc = j.at("auc").get<double>();
  return c;
}

}  // namespace

void write_report_json(const std::filesystem::path& path, const MetricReport& report) {
  nlohmann::json j;
  j["success_auc"] = report.success_auc;
  j["success_at_0.5"] = report.success_at_05;
  j["precision_auc"] = report.precision_auc;
  j["precision_at_20px"] = report.precision_at_20px;
  j["miou"] = report.miou;
  j["mgas"] = report.mgas;
  j["mcsc"] = report.mcsc;
  j["frames_evaluated"] = report.frames_evaluated;
  j["frames_excluded"] = report.frames_excluded;
  j["success_curve"] = curve_to_json(report.success);
  j["precision_curve"] = curve_to_json(report.precision);
  std::ofstream out = create_text(path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

MetricReport read_report_json(const std::filesystem::path& path) {
  std::ifstream in = open_text(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": invalid report JSON: " + e.what());
  }
  MetricReport r;
  try {
    r.success_auc = j.at("success_auc").get<double>();
    r.success_at_05 = j.at("success_at_0.5").get<double>();
    r.precision_auc = j.at("precision_auc").get<double>();
    r.precision_at_20px = j.at("precision_at_20px").get<double>();
    r.miou = j.at("miou").get<double>();
    r.mgas = j.at("mgas").get<double>();
    r.mcsc = j.at("mcsc").get<double>();
    r.frames_evaluated = j.at("frames_evaluated").get<int>();
    r.frames_excluded = j.at("frames_excluded").get<int>();
    r.success = curve_from_json(j.at("success_curve"));
    r.precision = curve_from_json(j.at("precision_curve"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": invalid report JSON: " + e.what());
  }
  return r;
}

void write_curve_csv(const std::filesystem::path& path, const Curve& curve) {
  std::ofstream out = create_text(path);
  out << "threshold,value\n";
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i)
    out << format_double(curve.thresholds[i]) << ',' << format_double(curve.values[i]) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace manta
