#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace tdpauc {

/// Marker cut point y in I(Y > y). Minus infinity is a distinguished state
/// rather than a large negative number, so every subject exceeds it.
class Threshold {
 public:
  static Threshold minus_infinity() { return Threshold(); }
  static Threshold at(double value) { return Threshold(value); }

  bool is_minus_infinity() const { return minus_inf_; }
  /// Only meaningful when !is_minus_infinity().
  double value() const { return value_; }
  bool exceeded_by(double marker) const { return minus_inf_ || marker > value_; }

  std::string to_string() const;
  friend bool operator==(const Threshold&, const Threshold&) = default;

 private:
  Threshold() = default;
  explicit Threshold(double v) : minus_inf_(false), value_(v) {}
  bool minus_inf_ = true;
  double value_ = 0.0;
};

/// Subjects sorted by marker and grouped by tied marker value. All
/// marker-dependent quantities are evaluated through this order, so they
/// only depend on marker ranks.
class MarkerOrder {
 public:
  explicit MarkerOrder(std::span<const double> markers);

  std::size_t size() const { return order_.size(); }
  std::size_t group_count() const { return values_.size(); }
  /// Subject indices in ascending marker order.
  std::span<const std::size_t> order() const { return order_; }
  /// Distinct marker values, ascending.
  std::span<const double> values() const { return values_; }
  /// Positions in order() where each group starts; group_count()+1 entries.
  std::span<const std::size_t> group_starts() const { return starts_; }
  std::size_t group_of(std::size_t subject) const { return group_of_[subject]; }
  /// First group whose marker exceeds the threshold (group_count() if none).
  std::size_t first_group_above(const Threshold& y) const;
  /// Number of subjects with marker strictly above that of `subject`.
  std::size_t count_above(std::size_t subject) const {
    return order_.size() - starts_[group_of_[subject] + 1];
  }

 private:
  std::vector<std::size_t> order_;
  std::vector<double> values_;
  std::vector<std::size_t> starts_;
  std::vector<std::size_t> group_of_;
};

/// Empirical marker survivor S_Y(y) = n^-1 #{j : Y_j > y}.
class RankSurvivor {
 public:
  explicit RankSurvivor(std::span<const double> markers);

  double operator()(const Threshold& y) const;
  double operator()(double y) const { return (*this)(Threshold::at(y)); }
  /// S_Y evaluated at subject j's own marker; these are the kernel ranks.
  double at_subject(std::size_t j) const { return at_subject_[j]; }
  std::span<const double> subject_values() const { return at_subject_; }

 private:
  std::vector<double> sorted_;
  std::vector<double> at_subject_;
};

}  // namespace tdpauc
