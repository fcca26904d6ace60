#include "dtx/frame.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dtx/errors.hpp"

namespace dtx::features {

FrameSequence::FrameSequence(std::vector<Frame> f) : frames(std::move(f)) {
  if (frames.size() < 2)
    throw SequenceTooShort("FrameSequence needs at least 2 frames");
  for (const auto& fr : frames) {
    if (fr.width != frames[0].width || fr.height != frames[0].height)
      throw std::invalid_argument("FrameSequence: non-uniform frame dimensions");
  }
}

double population_stddev(const Frame& f) {
  const size_t n = f.size();
  if (n == 0) return 0.0;
  double mean = 0.0;
  for (double v : f.pix) mean += v;
  mean /= static_cast<double>(n);
  double acc = 0.0;
  for (double v : f.pix) {
    const double d = v - mean;
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(n));
}

Frame sobel(const Frame& f) {
  if (f.width < 3 || f.height < 3)
    throw DimensionTooSmall("sobel: frame must be at least 3x3");
  Frame out(f.width - 2, f.height - 2);
  for (int y = 1; y + 1 < f.height; ++y) {
    for (int x = 1; x + 1 < f.width; ++x) {
      const double gx = -f.at(x - 1, y - 1) + f.at(x + 1, y - 1)
                        - 2.0 * f.at(x - 1, y) + 2.0 * f.at(x + 1, y)
                        - f.at(x - 1, y + 1) + f.at(x + 1, y + 1);
      const double gy = -f.at(x - 1, y - 1) - 2.0 * f.at(x, y - 1) - f.at(x + 1, y - 1)
                        + f.at(x - 1, y + 1) + 2.0 * f.at(x, y + 1) + f.at(x + 1, y + 1);
      out.at(x - 1, y - 1) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

double spatial_information(const FrameSequence& seq) {
  double best = 0.0;
  for (const auto& f : seq.frames)
    best = std::max(best, population_stddev(sobel(f)));
  return best;
}

double temporal_information(const FrameSequence& seq) {
  if (seq.size() < 2)
    throw SequenceTooShort("temporal_information: need at least 2 frames");
  double best = 0.0;
  for (size_t l = 0; l + 1 < seq.size(); ++l) {
    const Frame& a = seq[l];
    const Frame& b = seq[l + 1];
    Frame diff(a.width, a.height);
    for (size_t i = 0; i < diff.pix.size(); ++i) diff.pix[i] = b.pix[i] - a.pix[i];
    best = std::max(best, population_stddev(diff));
  }
  return best;
}

std::pair<FrameSequence, GoP> synth_gop(Rng& rng, const SynthProfile& profile) {
  const int w = profile.width, h = profile.height;
  const int n = std::max(2, profile.num_frames);

  // Static spatial pattern: mixed sinusoids with seeded phase. Amplitude is
  // proportional to the texture knob.
  const double px = rng.uniform(0.0, 2.0 * M_PI);
  const double py = rng.uniform(0.0, 2.0 * M_PI);
  const double fx = rng.uniform(2.0, 6.0);
  const double fy = rng.uniform(2.0, 6.0);
  Frame pattern(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      pattern.at(x, y) = std::sin(2.0 * M_PI * fx * x / w + px) *
                         std::cos(2.0 * M_PI * fy * y / h + py);

  const double tex_amp = 12.0 * profile.texture;
  const double mot_amp = 6.0 * profile.motion;
  std::vector<Frame> frames;
  frames.reserve(n);
  for (int l = 0; l < n; ++l) {
    Frame f(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double v = 128.0 + tex_amp * pattern.at(x, y);
        if (mot_amp > 0.0) v += mot_amp * (2.0 * rng.uniform01() - 1.0);
        f.at(x, y) = std::clamp(v, 0.0, 255.0);
      }
    }
    frames.push_back(std::move(f));
  }

  FrameSequence seq(std::move(frames));
  GoP gop;
  gop.bits = rng.uniform(profile.bits_lo, profile.bits_hi);
  gop.num_frames = n;
  gop.width = w;
  gop.height = h;
  gop.si = spatial_information(seq);
  gop.ti = temporal_information(seq);
  return {std::move(seq), gop};
}

FrameSequence read_raw_frames(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open raw frame file: " + path);
  std::string header;
  if (!std::getline(in, header))
    throw std::runtime_error("raw frame file missing header: " + path);
  std::istringstream hs(header);
  long w = 0, h = 0, n = 0;
  if (!(hs >> w >> h >> n) || w <= 0 || h <= 0 || n <= 0)
    throw std::runtime_error("raw frame header must be 'width height count': " + path);

  std::vector<Frame> frames;
  frames.reserve(static_cast<size_t>(n));
  std::vector<unsigned char> buf(static_cast<size_t>(w) * h);
  for (long i = 0; i < n; ++i) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size()))
      throw std::runtime_error("raw frame file truncated: " + path);
    Frame f(static_cast<int>(w), static_cast<int>(h));
    for (size_t k = 0; k < buf.size(); ++k) f.pix[k] = static_cast<double>(buf[k]);
    frames.push_back(std::move(f));
  }
  return FrameSequence(std::move(frames));
}

void write_raw_frames(const std::string& path, const FrameSequence& seq) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write raw frame file: " + path);
  char header[64];
  std::snprintf(header, sizeof(header), "%d %d %zu\n", seq[0].width, seq[0].height, seq.size());
  out << header;
  std::vector<unsigned char> buf;
  for (const auto& f : seq.frames) {
    buf.resize(f.size());
    for (size_t k = 0; k < f.pix.size(); ++k)
      buf[k] = static_cast<unsigned char>(std::clamp(f.pix[k], 0.0, 255.0) + 0.5);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
}

}  // namespace dtx::features
