#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace riemopt::stats {

enum class Study { kPfcUnstructured, kPfcEnvelope, kEnvelopeGlm, kMade };

std::string_view study_name(Study study);
std::optional<Study> parse_study(std::string_view name);
const std::vector<Study>& all_studies();

struct StudyOptions {
  int reps = 100;
  std::uint64_t seed = 1;
  Eigen::Index n = 0;  // 0 selects the study default (300, 300, 150, 147)
  Eigen::Index p = 0;  // PFC only; 0 selects 10
  int restarts = 10;   // envelope-glm only
  int workers = 0;     // 0 selects the hardware concurrency
};

/// One measurement. `seconds` is the wall time of the fit that produced it.
struct BenchRow {
  int replication = 0;
  std::string method;
  std::string metric;
  double value = 0.0;
  double seconds = 0.0;
};

/// Runs every replication (seed = options.seed + replication index) and
/// returns rows ordered by replication, independent of the worker count.
std::vector<BenchRow> run_study(Study study, const StudyOptions& options);

/// Header plus one delimited record per row. Seconds are written as NA unless
/// `timing` is set, which keeps the output reproducible.
std::string format_rows(const std::vector<BenchRow>& rows, bool timing);

/// Table of "mean (se)" cells, one line per method.
std::string format_summary(Study study, const std::vector<BenchRow>& rows);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  int count = 0;
};

/// Mean and standard error of one (method, metric) column.
MeanSe summarize(const std::vector<BenchRow>& rows, std::string_view method,
                 std::string_view metric);

}  // namespace riemopt::stats
