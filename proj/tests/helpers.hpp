#pragma once

#include <filesystem>
#include <string>

#include "signforge/rng.hpp"
#include "signforge/skeleton.hpp"

namespace testutil {

// Fresh scratch directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / ("signforge_" + name)) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& rel) const { return path / rel; }
};

inline signforge::PoseFrame frame_of(std::initializer_list<signforge::Vec3> joints, double counter = 0.0) {
  signforge::PoseFrame f;
  f.joints.assign(joints.begin(), joints.end());
  f.counter = counter;
  return f;
}

inline signforge::PoseSequence random_pose(signforge::Rng& rng, std::size_t frames, std::size_t joints) {
  signforge::PoseSequence s;
  for (std::size_t t = 0; t < frames; ++t) {
    signforge::PoseFrame f;
    f.joints.resize(joints);
    for (auto& j : f.joints) {
      for (double& v : j) v = rng.normal();
    }
    s.frames.push_back(std::move(f));
  }
  signforge::assign_counters(s);
  return s;
}

}  // namespace testutil
