#ifndef HEADPOP_TESTS_SUPPORT_H
#define HEADPOP_TESTS_SUPPORT_H

#include <filesystem>
#include <string>

#include "headpop/numerics.h"
#include "headpop/rng.h"

namespace testing {

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("headpop_test_" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline headpop::Mat random_mat(std::size_t r, std::size_t c, headpop::Rng& rng, double scale = 1.0) {
  headpop::Mat m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(-scale, scale);
  return m;
}

inline void randomize(headpop::ParamSet& params, std::uint64_t seed, double scale) {
  headpop::Rng rng(seed);
  for (auto& [name, m] : params)
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(-scale, scale);
}

}  // namespace testing

#endif  // HEADPOP_TESTS_SUPPORT_H
