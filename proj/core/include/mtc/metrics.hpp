#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mtc {

/// Raised when gold and prediction collections do not cover the same ids.
class MismatchedIds : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One-vs-rest counts for a single label. Zero-division yields 0.
struct BinaryScores {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t support() const { return tp + fn; }
  std::size_t predicted() const { return tp + fp; }
  double precision() const { return tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp); }
  double recall() const { return tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn); }
  double f1() const {
    const double p = precision();
    const double r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
};

struct PrfTriple {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

}  // namespace mtc
