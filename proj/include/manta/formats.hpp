#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "manta/association.hpp"
#include "manta/bbox.hpp"
#include "manta/metrics.hpp"
#include "manta/motion.hpp"

namespace manta {

// Shortest round-trip decimal representation; the one double formatter used
// for every text output so runs are byte-reproducible.
std::string format_double(double v);

// Detections CSV: frame,track_id,x,y,w,h,score (track_id -1 for raw rows).
std::vector<Detection> parse_detections(const std::filesystem::path& path);
void write_detections(const std::filesystem::path& path, const std::vector<Detection>& rows);

// Groups rows into per-frame lists (index 0 = frame 1); frames beyond
// n_frames are an error, n_frames <= 0 sizes to the maximum frame seen.
std::vector<std::vector<Detection>> group_by_frame(const std::vector<Detection>& rows,
                                                   int n_frames = 0);

// Ground truth: one line per frame, x,y,w,h; an all-zero line marks the
// target absent in that frame.
std::vector<std::optional<BBox>> parse_ground_truth(const std::filesystem::path& path);
void write_ground_truth(const std::filesystem::path& path,
                        const std::vector<std::optional<BBox>>& rows);

// Predictions: one line per frame, x,y,w,h.
std::vector<BBox> parse_predictions(const std::filesystem::path& path);
void write_predictions(const std::filesystem::path& path, const std::vector<BBox>& boxes);

// Audit log: frame,step_fired,score,cos (empty fields for NaN).
void write_audit(const std::filesystem::path& path, const std::vector<AuditEntry>& entries);

void write_report_json(const std::filesystem::path& path, const MetricReport& report);
MetricReport read_report_json(const std::filesystem::path& path);

void write_curve_csv(const std::filesystem::path& path, const Curve& curve);

}  // namespace manta
