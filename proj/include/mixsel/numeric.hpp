#ifndef MIXSEL_NUMERIC_HPP
#define MIXSEL_NUMERIC_HPP

#include <cmath>
#include <cstddef>
#include <vector>

namespace mixsel {

// Exact (correctly rounded) floating-point accumulator using Shewchuk's
// expansion arithmetic, after the classic fsum recipe. The rounded total
// depends only on the multiset of finite addends, not on their order; this is
// what makes empirical risk and log-sum-exp exactly permutation-invariant.
class ExactSum {
public:
  void add(double x) {
    if (!std::isfinite(x)) {
      special_ += x;
      has_special_ = true;
      return;
    }
    std::size_t i = 0;
    for (std::size_t j = 0; j < partials_.size(); ++j) {
      double y = partials_[j];
      if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[i++] = lo;
      x = hi;
    }
    partials_.resize(i);
    partials_.push_back(x);
  }

  double total() const {
    if (has_special_) return special_;
    double hi = 0.0;
    std::size_t n = partials_.size();
    if (n > 0) {
      hi = partials_[--n];
      double lo = 0.0;
      while (n > 0) {
        const double x = hi;
        const double y = partials_[--n];
        hi = x + y;
        lo = y - (hi - x);
        if (lo != 0.0) break;
      }
      // Round-half-to-even correction: a discarded half-ulp is tipped by the
      // sign of the remaining partials.
      if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) ||
                    (lo > 0.0 && partials_[n - 1] > 0.0))) {
        const double y = lo * 2.0;
        const double x = hi + y;
        if (y == x - hi) hi = x;
      }
    }
    return hi;
  }

  void reset() {
    partials_.clear();
    special_ = 0.0;
    has_special_ = false;
  }

private:
  std::vector<double> partials_;
  double special_ = 0.0;
  bool has_special_ = false;
};

template <typename Range>
double exact_sum(const Range& values) {
  ExactSum acc;
  for (double v : values) acc.add(v);
  return acc.total();
}

inline double exact_sum(const double* data, std::size_t n) {
  ExactSum acc;
  for (std::size_t i = 0; i < n; ++i) acc.add(data[i]);
  return acc.total();
}

}  // namespace mixsel

#endif
