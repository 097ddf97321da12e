#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stsim {

/// A similarity value in [0,1]. `degenerate` marks values produced by a
/// defined fallback (zero vector under cosine, fully out-of-vocabulary
/// sentence, no defined synset pair) rather than by the metric proper.
struct SimScore {
  double value = 0.0;
  bool degenerate = false;
};

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data).subspan(r * cols, cols);
  }
  std::span<double> row(std::size_t r) {
    return std::span<double>(data).subspan(r * cols, cols);
  }
};

inline double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

}  // namespace stsim
