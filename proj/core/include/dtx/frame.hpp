#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dtx/rng.hpp"
#include "dtx/types.hpp"

namespace dtx::features {

/// Single-channel (luma) frame, row-major doubles in [0, 255].
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<double> pix;

  Frame() = default;
  Frame(int w, int h, double fill = 0.0)
      : width(w), height(h), pix(static_cast<size_t>(w) * h, fill) {}

  double at(int x, int y) const { return pix[static_cast<size_t>(y) * width + x]; }
  double& at(int x, int y) { return pix[static_cast<size_t>(y) * width + x]; }
  size_t size() const { return pix.size(); }
};

/// Ordered frames of one GoP; all frames share dimensions and there are at
/// least two of them (temporal metrics need an adjacent pair).
struct FrameSequence {
  std::vector<Frame> frames;

  FrameSequence() = default;
  explicit FrameSequence(std::vector<Frame> f);  // validates

  size_t size() const { return frames.size(); }
  const Frame& operator[](size_t i) const { return frames[i]; }
};

/// Population standard deviation over all pixels (divide by N).
double population_stddev(const Frame& f);

/// Gradient magnitude with the standard 3x3 Sobel kernels, valid region only:
/// output is (w-2)x(h-2). Throws DimensionTooSmall below 3x3.
Frame sobel(const Frame& f);

/// Max over frames of the population stddev of the Sobel-filtered frame.
double spatial_information(const FrameSequence& seq);

/// Max over adjacent pairs of the population stddev of the plain pixel
/// difference image (no filtering).
double temporal_information(const FrameSequence& seq);

/// Knobs for the synthetic GoP generator. texture scales a static spatial
/// pattern, motion scales per-frame noise; si/ti grow monotonically with them.
struct SynthProfile {
  int width = 160;
  int height = 90;
  int num_frames = 8;
  double texture = 1.0;   // >= 0
  double motion = 1.0;    // >= 0
  double bits_lo = 2e6;
  double bits_hi = 8e6;
};

/// Deterministic synthetic GoP: frames plus a GoP record with si/ti computed
/// through the real metric pipeline and a bit size drawn from the profile
/// range. Requests are left zeroed; the arrival process fills them.
std::pair<FrameSequence, GoP> synth_gop(Rng& rng, const SynthProfile& profile);

/// Raw grayscale ingestion. Format: one ASCII header line "width height count"
/// followed by width*height*count bytes, frame-major, row-major, 8-bit luma.
FrameSequence read_raw_frames(const std::string& path);
void write_raw_frames(const std::string& path, const FrameSequence& seq);

}  // namespace dtx::features
