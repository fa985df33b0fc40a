#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace pcn {

// One scalar snapshot per logical step of an experiment.
struct MetricsRecord {
  long step = 0;
  double free_energy = 0.0;
  std::vector<double> layer_error_norms;
  std::optional<std::string> task_metric_name;
  std::optional<double> task_metric_value;
  std::optional<double> wall_ms;  // populated only when timing is requested

  std::string to_json_line() const;
};

// Line-delimited JSON records; one self-describing object per line. Step
// indices must be non-decreasing across appends.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void append(const MetricsRecord& record);
  long records_written() const { return count_; }

 private:
  std::ofstream out_;
  long count_ = 0;
  long last_step_ = -1;
};

}  // namespace pcn
