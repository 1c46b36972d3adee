#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "binsreg/dataset.hpp"

namespace support {

inline binsreg::Dataset make_data(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                  const Eigen::MatrixXd& w = Eigen::MatrixXd()) {
  binsreg::Dataset d;
  d.x = x;
  d.y = y;
  d.w = w.size() == 0 ? Eigen::MatrixXd(x.size(), 0) : w;
  for (Eigen::Index j = 0; j < d.w.cols(); ++j) d.covariate_names.push_back("w" + std::to_string(j + 1));
  return d;
}

inline Eigen::VectorXd uniform(std::mt19937_64& gen, Eigen::Index n, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = u(gen);
  return out;
}

inline Eigen::VectorXd normal(std::mt19937_64& gen, Eigen::Index n, double sd = 1.0) {
  std::normal_distribution<double> z(0.0, sd);
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = z(gen);
  return out;
}

inline std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "binsreg_unit";
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path write_file(const std::string& name, const std::string& text) {
  const auto path = temp_dir() / name;
  std::ofstream(path, std::ios::binary | std::ios::trunc) << text;
  return path;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace support
