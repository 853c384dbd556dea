#pragma once

#include <filesystem>
#include <string>

namespace covagent_test {

// Fresh empty directory under the test working directory; wiped on reuse so
// repeated test runs start clean.
inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::current_path() / "test-tmp" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path fixture_path(const std::string& name) {
  return std::filesystem::path(COVAGENT_FIXTURE_DIR) / name;
}

}  // namespace covagent_test
