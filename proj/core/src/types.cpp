#include "dtx/types.hpp"

#include <stdexcept>

namespace dtx {

void GoP::validate() const {
  if (!(bits > 0.0)) throw std::invalid_argument("GoP: bits must be > 0");
  if (num_frames < 2) throw std::invalid_argument("GoP: num_frames must be >= 2");
  if (width <= 0 || height <= 0) throw std::invalid_argument("GoP: empty resolution");
  if (si < 0.0 || ti < 0.0) throw std::invalid_argument("GoP: si/ti must be >= 0");
  if (requests.high < 0 || requests.medium < 0 || requests.low < 0)
    throw std::invalid_argument("GoP: negative request count");
}

std::string TranscodeDecision::to_string() const {
  std::string s(kNumQueues, '0');
  for (auto q : all_queues())
    if (bit(q)) s[queue_index(q)] = '1';
  return s;
}

const std::vector<TranscodeDecision>& feasible_decisions() {
  static const std::vector<TranscodeDecision> table = [] {
    std::vector<TranscodeDecision> out;
    for (int v = 0; v < 32; ++v) {
      auto d = TranscodeDecision::from_value(v);
      if (d.feasible()) out.push_back(d);
    }
    return out;
  }();
  return table;
}

}  // namespace dtx
