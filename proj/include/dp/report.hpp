#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace dp {

struct SampleMetrics {
  std::string id;
  double cd_cm = 0;
  double emd_cm = 0;
  double fscore = 0;
};

struct Aggregate {
  double avg = 0;
  double std_dev = 0;  // population standard deviation
};

/// Per-sample CD/EMD/F-score plus their aggregates.
struct MetricsReport {
  std::vector<SampleMetrics> samples;
  double tau_cm = 1.0;  // F-score threshold the numbers were computed with

  Aggregate cd() const;
  Aggregate emd() const;
  Aggregate fscore() const;

  /// Human-readable table. The header states the adopted F-score definition.
  std::string to_table(const std::string& title = "") const;

  /// Machine-readable lines: "sample_id,cd_cm,emd_cm,fscore".
  std::string to_delimited() const;

  void save(const std::filesystem::path& table_path,
            const std::filesystem::path& delimited_path) const;
};

}  // namespace dp
