#include "dp/report.hpp"

#include "dp/types.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dp {

namespace {

Aggregate aggregate_of(const std::vector<SampleMetrics>& samples,
                       double SampleMetrics::*field) {
  Aggregate a;
  if (samples.empty()) return a;
  for (const SampleMetrics& s : samples) a.avg += s.*field;
  a.avg /= static_cast<double>(samples.size());
  double var = 0;
  for (const SampleMetrics& s : samples) {
    const double d = s.*field - a.avg;
    var += d * d;
  }
  a.std_dev = std::sqrt(var / static_cast<double>(samples.size()));
  return a;
}

}  // namespace

Aggregate MetricsReport::cd() const { return aggregate_of(samples, &SampleMetrics::cd_cm); }
Aggregate MetricsReport::emd() const { return aggregate_of(samples, &SampleMetrics::emd_cm); }
Aggregate MetricsReport::fscore() const {
  return aggregate_of(samples, &SampleMetrics::fscore);
}

std::string MetricsReport::to_table(const std::string& title) const {
  std::ostringstream os;
  char buf[160];
  if (!title.empty()) os << "# " << title << "\n";
  std::snprintf(buf, sizeof(buf),
                "# F-score: threshold F at tau = %g cm "
                "(precision/recall of nearest-neighbor distances <= tau)\n",
                tau_cm);
  os << buf;
  os << "# CD and EMD in cm\n";
  os << "sample            CD        EMD       F-score\n";
  for (const SampleMetrics& s : samples) {
    std::snprintf(buf, sizeof(buf), "%-14s %9.4f %9.4f %9.4f\n", s.id.c_str(), s.cd_cm,
                  s.emd_cm, s.fscore);
    os << buf;
  }
  const Aggregate c = cd(), e = emd(), f = fscore();
  std::snprintf(buf, sizeof(buf), "%-14s %9.4f %9.4f %9.4f\n", "avg", c.avg, e.avg, f.avg);
  os << buf;
  std::snprintf(buf, sizeof(buf), "%-14s %9.4f %9.4f %9.4f\n", "std", c.std_dev, e.std_dev,
                f.std_dev);
  os << buf;
  return os.str();
}

std::string MetricsReport::to_delimited() const {
  std::ostringstream os;
  os << "sample_id,cd_cm,emd_cm,fscore\n";
  char buf[160];
  for (const SampleMetrics& s : samples) {
    std::snprintf(buf, sizeof(buf), "%s,%.9g,%.9g,%.9g\n", s.id.c_str(), s.cd_cm, s.emd_cm,
                  s.fscore);
    os << buf;
  }
  return os.str();
}

void MetricsReport::save(const std::filesystem::path& table_path,
                         const std::filesystem::path& delimited_path) const {
  std::ofstream table(table_path, std::ios::trunc);
  if (!table) throw IoError("report: cannot open '" + table_path.string() + "'");
  table << to_table();
  std::ofstream delim(delimited_path, std::ios::trunc);
  if (!delim) throw IoError("report: cannot open '" + delimited_path.string() + "'");
  delim << to_delimited();
}

}  // namespace dp
