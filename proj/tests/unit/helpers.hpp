#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "actionsense/assembly.hpp"

namespace testutil {

inline std::filesystem::path fixture(const std::string& rel) { return std::filesystem::path(ACTIONSENSE_FIXTURES) / rel; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("actionsense_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

// Minimal instance with one image and the given inferences.
inline actionsense::assembly::CommonsenseInstance make_instance(const std::string& id, const std::string& video, int seg) {
  actionsense::assembly::CommonsenseInstance inst;
  inst.instance_id = id;
  actionsense::corpus::FrameRef f;
  f.video_id = video;
  f.segment_index = seg;
  f.path = video + ".mp4";
  f.frame_index = 10;
  f.timestamp = 1.0;
  inst.image = f;
  inst.text_description.text = "cooking the bacon";
  inst.action_object = {"cook", "bacon"};
  return inst;
}

inline int run_cli(const std::string& args, const std::filesystem::path& log) {
  std::string cmd = std::string("\"") + ACTIONSENSE_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace testutil
