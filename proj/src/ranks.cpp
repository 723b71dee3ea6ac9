#include "tdpauc/ranks.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace tdpauc {

std::string Threshold::to_string() const {
  if (minus_inf_) return "-inf";
  std::ostringstream out;
  out.precision(17);
  out << value_;
  return out.str();
}

MarkerOrder::MarkerOrder(std::span<const double> markers)
    : order_(markers.size()), group_of_(markers.size()) {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::size_t a, std::size_t b) { return markers[a] < markers[b]; });
  for (std::size_t p = 0; p < order_.size(); ++p) {
    const double v = markers[order_[p]];
    if (p == 0 || v != values_.back()) {
      values_.push_back(v);
      starts_.push_back(p);
    }
    group_of_[order_[p]] = values_.size() - 1;
  }
  starts_.push_back(order_.size());
}

std::size_t MarkerOrder::first_group_above(const Threshold& y) const {
  if (y.is_minus_infinity()) return 0;
  return static_cast<std::size_t>(std::upper_bound(values_.begin(), values_.end(), y.value()) -
                                  values_.begin());
}

RankSurvivor::RankSurvivor(std::span<const double> markers)
    : sorted_(markers.begin(), markers.end()), at_subject_(markers.size()) {
  std::sort(sorted_.begin(), sorted_.end());
  for (std::size_t j = 0; j < markers.size(); ++j) at_subject_[j] = (*this)(markers[j]);
}

double RankSurvivor::operator()(const Threshold& y) const {
  if (y.is_minus_infinity()) return 1.0;
  const auto above = sorted_.end() - std::upper_bound(sorted_.begin(), sorted_.end(), y.value());
  return static_cast<double>(above) / static_cast<double>(sorted_.size());
}

}  // namespace tdpauc
