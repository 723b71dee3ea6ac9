#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace tdpauc {

/// One subject: follow-up time X = min(T, C), event indicator, marker value
/// and an optional group label used by two-sample runs.
struct SurvivalRecord {
  double time = 0.0;
  int status = 0;  // 1 = event observed, 0 = censored
  double marker = 0.0;
  std::optional<int> group;
};

/// Validated sample of survival records. Immutable after construction; the
/// column views below are cached copies in record order.
class Cohort {
 public:
  /// Throws InputError for an invalid record (the message names the row,
  /// counted from 1) and DegenerateError when n < 2 or there are no events.
  explicit Cohort(std::vector<SurvivalRecord> records);

  std::size_t size() const { return records_.size(); }
  const std::vector<SurvivalRecord>& records() const { return records_; }
  const SurvivalRecord& operator[](std::size_t i) const { return records_[i]; }

  std::span<const double> times() const { return times_; }
  std::span<const double> markers() const { return markers_; }
  std::span<const int> statuses() const { return statuses_; }

  std::size_t event_count() const { return events_; }
  double censoring_rate() const;
  /// Number of records whose marker equals the marker of an earlier record.
  std::size_t marker_tie_count() const { return marker_ties_; }
  bool fully_observed() const { return events_ == records_.size(); }
  double max_time() const { return max_time_; }

 private:
  std::vector<SurvivalRecord> records_;
  std::vector<double> times_;
  std::vector<double> markers_;
  std::vector<int> statuses_;
  std::size_t events_ = 0;
  std::size_t marker_ties_ = 0;
  double max_time_ = 0.0;
};

/// Column names for CSV ingestion. Headers are matched exactly.
struct ColumnMap {
  std::string time = "time";
  std::string status = "status";
  std::string marker = "marker";
  std::optional<std::string> group;
};

struct CohortSummary {
  std::size_t n = 0;
  std::size_t events = 0;
  double censoring_rate = 0.0;
  std::size_t marker_ties = 0;
};

CohortSummary summarize(const Cohort& cohort);
std::string summary_json(const CohortSummary& summary);

/// Parses a headered, comma-separated file. Records keep file order.
Cohort load_cohort(const std::filesystem::path& path, const ColumnMap& columns);
Cohort parse_cohort(std::istream& in, const ColumnMap& columns);

/// Writes time,status,marker[,group] with 17 significant digits, which
/// round-trips every double exactly through parse_cohort.
void write_cohort_csv(const Cohort& cohort, std::ostream& out);

/// Splits a cohort by its group labels; every record must carry one.
std::map<int, Cohort> split_by_group(const Cohort& cohort);

/// Strictly increasing positive evaluation times.
class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> points);

  std::span<const double> points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  double operator[](std::size_t k) const { return points_[k]; }

  /// Index of an exact grid point; throws ParameterError if absent.
  std::size_t index_of(double t) const;
  /// Points within [lo, hi].
  TimeGrid restricted(double lo, double hi) const;

 private:
  std::vector<double> points_;
};

/// Throws DegenerateError if a grid point exceeds the largest observed time
/// (no subject left at risk there).
void check_grid(const Cohort& cohort, const TimeGrid& grid);

/// Linear-interpolation sample quantile of the observed times.
double time_quantile(const Cohort& cohort, double p);

/// Observed event times between the lower and upper sample quantiles of X.
TimeGrid default_grid(const Cohort& cohort, double lower_quantile, double upper_quantile);

/// Event times in [lo, hi], deduplicated.
TimeGrid event_times_between(const Cohort& cohort, double lo, double hi);

}  // namespace tdpauc
