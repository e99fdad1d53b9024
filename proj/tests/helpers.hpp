#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "msbin/image.hpp"

namespace testutil {

// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("msbin_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline msbin::BinaryImage random_mask(int w, int h, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution ink(p);
  msbin::BinaryImage m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, ink(rng));
  return m;
}

inline msbin::IntensityPlane random_plane(int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> v(static_cast<std::size_t>(w) * h);
  for (auto& x : v) x = u(rng);
  return msbin::IntensityPlane(w, h, std::move(v));
}

// Owning copy, safe to iterate when the plane is a temporary.
inline std::vector<float> values_of(const msbin::IntensityPlane& p) { return {p.values().begin(), p.values().end()}; }

}  // namespace testutil
