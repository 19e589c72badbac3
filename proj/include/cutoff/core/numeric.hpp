#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace cutoff {

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  constexpr CompensatedSum() = default;

  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      correction_ += (sum_ - t) + x;
    } else {
      correction_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }

  double value() const noexcept { return sum_ + correction_; }

 private:
  double sum_ = 0.0;
  double correction_ = 0.0;
};

/// FNV-1a, used for stable config fingerprints.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

/// Mean and standard error of the mean from running sums.
struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

template <typename Range>
MeanEstimate mean_and_se(const Range& values) {
  CompensatedSum sum;
  std::size_t count = 0;
  for (double v : values) {
    sum += v;
    ++count;
  }
  if (count == 0) return {};
  const double mean = sum.value() / static_cast<double>(count);
  CompensatedSum sq;
  for (double v : values) sq += (v - mean) * (v - mean);
  const double var = count > 1 ? sq.value() / static_cast<double>(count - 1) : 0.0;
  return {mean, std::sqrt(var / static_cast<double>(count))};
}

}  // namespace cutoff
