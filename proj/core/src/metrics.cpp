#include "pcn/metrics.hpp"

#include "json.hpp"
#include "pcn/common.hpp"

namespace pcn {

std::string MetricsRecord::to_json_line() const {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["free_energy"] = free_energy;
  j["layer_error_norms"] = layer_error_norms;
  if (task_metric_name && task_metric_value) {
    j["task_metric"] = *task_metric_name;
    j["task_value"] = *task_metric_value;
  }
  if (wall_ms) j["wall_ms"] = *wall_ms;
  return j.dump();
}

MetricsWriter::MetricsWriter(const std::string& path) : out_(path) {
  require(out_.good(), "cannot open metrics file for writing: " + path);
}

void MetricsWriter::append(const MetricsRecord& record) {
  require(record.step >= last_step_, "metrics step indices must not decrease");
  out_ << record.to_json_line() << '\n';
  out_.flush();
  last_step_ = record.step;
  ++count_;
}

}  // namespace pcn
