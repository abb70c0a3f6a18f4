#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "rbr/data.hpp"

namespace testutil {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("rbr_tests_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  return path;
}

inline rbr::Vector random_vector(std::mt19937_64& rng, Eigen::Index p, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  rbr::Vector v(p);
  for (Eigen::Index i = 0; i < p; ++i) v[i] = u(rng);
  return v;
}

}  // namespace testutil
