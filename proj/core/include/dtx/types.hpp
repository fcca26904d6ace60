#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace dtx {

inline constexpr int kNumQueues = 5;

/// Transcoding queues. 1-3 live on the cloud server, 4-5 on the edge server.
/// Slower presets produce higher quality output at a higher per-bit cost.
enum class Queue : int {
  CloudSlow = 0,
  CloudMedium = 1,
  CloudFast = 2,
  EdgeMedium = 3,
  EdgeFast = 4,
};

constexpr std::array<Queue, kNumQueues> all_queues() {
  return {Queue::CloudSlow, Queue::CloudMedium, Queue::CloudFast,
          Queue::EdgeMedium, Queue::EdgeFast};
}
constexpr std::array<Queue, 3> cloud_queues() {
  return {Queue::CloudSlow, Queue::CloudMedium, Queue::CloudFast};
}
constexpr std::array<Queue, 2> edge_queues() {
  return {Queue::EdgeMedium, Queue::EdgeFast};
}
constexpr bool is_cloud(Queue q) { return static_cast<int>(q) < 3; }
constexpr bool is_edge(Queue q) { return static_cast<int>(q) >= 3; }
constexpr int queue_index(Queue q) { return static_cast<int>(q); }
/// 1-based id used in file headers and logs.
constexpr int display_id(Queue q) { return static_cast<int>(q) + 1; }

/// Encoding preset level of a queue: 0 slow, 1 medium, 2 fast.
constexpr int preset_level(Queue q) {
  switch (q) {
    case Queue::CloudSlow: return 0;
    case Queue::CloudMedium: return 1;
    case Queue::CloudFast: return 2;
    case Queue::EdgeMedium: return 1;
    case Queue::EdgeFast: return 2;
  }
  return 2;
}
/// Processor class of a queue: 0 cloud, 1 edge.
constexpr int processor_class(Queue q) { return is_edge(q) ? 1 : 0; }

enum class VideoQuality : int { High = 0, Medium = 1, Low = 2 };

struct Requests {
  long high = 0;
  long medium = 0;
  long low = 0;
  long total() const { return high + medium + low; }
  long count(VideoQuality q) const {
    switch (q) {
      case VideoQuality::High: return high;
      case VideoQuality::Medium: return medium;
      case VideoQuality::Low: return low;
    }
    return 0;
  }
};

/// One group of pictures: the minimal unit a scheduler places into queues.
/// si/ti are the spatial/temporal information metrics of the frame content.
struct GoP {
  long id = 0;
  double bits = 0.0;  // original encoded size, bits
  int num_frames = 0;
  int width = 0;
  int height = 0;
  double si = 0.0;
  double ti = 0.0;
  Requests requests;

  double pixels() const { return static_cast<double>(width) * height; }
  /// Throws std::invalid_argument when a field breaks the type invariants
  /// (bits > 0, num_frames >= 2, si/ti >= 0, non-negative request counts).
  void validate() const;
};

/// Per-GoP assignment bit vector over the five queues. Encoded as a 5-bit
/// integer with the CloudSlow bit as MSB, so value() doubles as the canonical
/// ordering key for the feasible set.
class TranscodeDecision {
 public:
  constexpr TranscodeDecision() = default;
  static constexpr TranscodeDecision from_value(int v) {
    TranscodeDecision d;
    d.value_ = static_cast<std::uint8_t>(v & 0x1F);
    return d;
  }
  static constexpr TranscodeDecision from_bits(bool q1, bool q2, bool q3, bool q4, bool q5) {
    return from_value((q1 << 4) | (q2 << 3) | (q3 << 2) | (q4 << 1) | int(q5));
  }

  constexpr bool bit(Queue q) const {
    return (value_ >> (kNumQueues - 1 - queue_index(q))) & 1;
  }
  constexpr int value() const { return value_; }
  constexpr bool any() const { return value_ != 0; }
  constexpr int popcount() const {
    int n = 0;
    for (auto q : all_queues()) n += bit(q);
    return n;
  }

  /// Structural feasibility: no repeated cloud/edge transcode of the same
  /// version and every edge step has a cloud predecessor producing its input.
  constexpr bool feasible() const {
    const int x1 = bit(Queue::CloudSlow), x2 = bit(Queue::CloudMedium),
              x3 = bit(Queue::CloudFast), x4 = bit(Queue::EdgeMedium),
              x5 = bit(Queue::EdgeFast);
    return (x2 + x4 <= 1) && (x3 + x5 <= 1) && (x1 >= x4) && (x1 + x2 >= x5);
  }

  /// Whether this assignment produces the requested quality version.
  constexpr bool satisfies(VideoQuality quality) const {
    const int x1 = bit(Queue::CloudSlow), x2 = bit(Queue::CloudMedium),
              x3 = bit(Queue::CloudFast), x4 = bit(Queue::EdgeMedium),
              x5 = bit(Queue::EdgeFast);
    switch (quality) {
      case VideoQuality::High: return x1 == 1;
      case VideoQuality::Medium: return x2 == 1 || (x1 == 1 && x4 == 1);
      case VideoQuality::Low: return x3 == 1 || (x1 == 1 && x5 == 1) || (x2 == 1 && x5 == 1);
    }
    return false;
  }

  std::string to_string() const;  // e.g. "10010"

  constexpr bool operator==(const TranscodeDecision&) const = default;

 private:
  std::uint8_t value_ = 0;
};

/// All feasible decisions in canonical (ascending value) order. There are 14;
/// index 0 is the all-zero decision.
const std::vector<TranscodeDecision>& feasible_decisions();

inline constexpr int kNumActions = 14;

/// Discrete scheduling time. d is the slot length in seconds.
struct SlotClock {
  long t = 0;
  double d = 0.5;
  void tick() { ++t; }
  double seconds() const { return static_cast<double>(t) * d; }
};

}  // namespace dtx
