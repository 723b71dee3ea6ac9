#include "tdpauc/data.hpp"

#include "tdpauc/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace tdpauc {

namespace {

std::string row_label(std::size_t row) { return "row " + std::to_string(row + 1); }

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

// Splits one CSV line. Double-quoted fields may contain commas; "" inside
// quotes is a literal quote.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

double parse_number(const std::string& cell, std::size_t row, const std::string& column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc() || ptr != last) {
    throw InputError("non-numeric value '" + cell + "' in column '" + column + "' at data " +
                     row_label(row));
  }
  return value;
}

}  // namespace

Cohort::Cohort(std::vector<SurvivalRecord> records) : records_(std::move(records)) {
  const std::size_t n = records_.size();
  times_.reserve(n);
  markers_.reserve(n);
  statuses_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = records_[i];
    if (!std::isfinite(r.time) || r.time < 0.0) {
      throw InputError("invalid time at " + row_label(i) + ": must be finite and >= 0");
    }
    if (!std::isfinite(r.marker)) {
      throw InputError("invalid marker at " + row_label(i) + ": must be finite");
    }
    if (r.status != 0 && r.status != 1) {
      throw InputError("invalid status at " + row_label(i) + ": must be 0 or 1");
    }
    times_.push_back(r.time);
    markers_.push_back(r.marker);
    statuses_.push_back(r.status);
    events_ += static_cast<std::size_t>(r.status);
    max_time_ = std::max(max_time_, r.time);
  }
  if (n < 2) throw DegenerateError("cohort needs at least 2 records, got " + std::to_string(n));
  if (events_ == 0) throw DegenerateError("cohort has no observed events");

  std::vector<double> sorted = markers_;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < n; ++i) {
    if (sorted[i] == sorted[i - 1]) ++marker_ties_;
  }
}

double Cohort::censoring_rate() const {
  return static_cast<double>(size() - events_) / static_cast<double>(size());
}

CohortSummary summarize(const Cohort& cohort) {
  return {cohort.size(), cohort.event_count(), cohort.censoring_rate(), cohort.marker_tie_count()};
}

std::string summary_json(const CohortSummary& s) {
  nlohmann::json j;
  j["n"] = s.n;
  j["events"] = s.events;
  j["censoring_rate"] = s.censoring_rate;
  j["marker_ties"] = s.marker_ties;
  return j.dump(2);
}

Cohort parse_cohort(std::istream& in, const ColumnMap& columns) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("input is empty: expected a header line");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  const auto header = split_csv_line(line);

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < header.size(); ++c) index.emplace(header[c], c);
  auto locate = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw InputError("missing column '" + name + "'");
    return it->second;
  };
  const std::size_t time_col = locate(columns.time);
  const std::size_t status_col = locate(columns.status);
  const std::size_t marker_col = locate(columns.marker);
  const std::optional<std::size_t> group_col =
      columns.group ? std::optional(locate(*columns.group)) : std::nullopt;

  std::vector<SurvivalRecord> records;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    auto cell = [&](std::size_t col, const std::string& name) -> const std::string& {
      if (col >= fields.size()) {
        throw InputError("data " + row_label(row) + " has no value for column '" + name + "'");
      }
      return fields[col];
    };
    SurvivalRecord r;
    r.time = parse_number(cell(time_col, columns.time), row, columns.time);
    const double status = parse_number(cell(status_col, columns.status), row, columns.status);
    if (status != 0.0 && status != 1.0) {
      throw InputError("invalid status at data " + row_label(row) + ": must be 0 or 1");
    }
    r.status = static_cast<int>(status);
    r.marker = parse_number(cell(marker_col, columns.marker), row, columns.marker);
    if (group_col) {
      const double g = parse_number(cell(*group_col, *columns.group), row, *columns.group);
      if (g != std::floor(g)) {
        throw InputError("group label at data " + row_label(row) + " is not an integer");
      }
      r.group = static_cast<int>(g);
    }
    if (!std::isfinite(r.time) || r.time < 0.0) {
      throw InputError("invalid time at data " + row_label(row) + ": must be finite and >= 0");
    }
    records.push_back(r);
    ++row;
  }
  return Cohort(std::move(records));
}

Cohort load_cohort(const std::filesystem::path& path, const ColumnMap& columns) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open input file '" + path.string() + "'");
  return parse_cohort(in, columns);
}

void write_cohort_csv(const Cohort& cohort, std::ostream& out) {
  const bool grouped = std::all_of(cohort.records().begin(), cohort.records().end(),
                                   [](const SurvivalRecord& r) { return r.group.has_value(); });
  out << "time,status,marker" << (grouped ? ",group" : "") << '\n';
  out << std::setprecision(17);
  for (const auto& r : cohort.records()) {
    out << r.time << ',' << r.status << ',' << r.marker;
    if (grouped) out << ',' << *r.group;
    out << '\n';
  }
}

std::map<int, Cohort> split_by_group(const Cohort& cohort) {
  std::map<int, std::vector<SurvivalRecord>> parts;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& r = cohort[i];
    if (!r.group) throw InputError("record at " + row_label(i) + " has no group label");
    parts[*r.group].push_back(r);
  }
  std::map<int, Cohort> out;
  for (auto& [g, recs] : parts) {
    try {
      out.emplace(g, Cohort(std::move(recs)));
    } catch (const DegenerateError& e) {
      throw DegenerateError("group " + std::to_string(g) + ": " + e.what());
    }
  }
  return out;
}

TimeGrid::TimeGrid(std::vector<double> points) : points_(std::move(points)) {
  for (std::size_t k = 0; k < points_.size(); ++k) {
    if (!std::isfinite(points_[k]) || points_[k] <= 0.0) {
      throw ParameterError("time grid point " + std::to_string(points_[k]) + " must be positive");
    }
    if (k > 0 && points_[k] <= points_[k - 1]) {
      throw ParameterError("time grid must be strictly increasing");
    }
  }
}

std::size_t TimeGrid::index_of(double t) const {
  auto it = std::lower_bound(points_.begin(), points_.end(), t);
  if (it == points_.end() || *it != t) {
    std::ostringstream msg;
    msg << "time " << t << " is not a point of the evaluation grid";
    throw ParameterError(msg.str());
  }
  return static_cast<std::size_t>(it - points_.begin());
}

TimeGrid TimeGrid::restricted(double lo, double hi) const {
  std::vector<double> pts;
  for (double t : points_) {
    if (t >= lo && t <= hi) pts.push_back(t);
  }
  return TimeGrid(std::move(pts));
}

void check_grid(const Cohort& cohort, const TimeGrid& grid) {
  if (grid.empty()) throw DegenerateError("time grid is empty");
  if (grid[grid.size() - 1] > cohort.max_time()) {
    std::ostringstream msg;
    msg << "time " << grid[grid.size() - 1] << " exceeds the largest observed time "
        << cohort.max_time() << "; nobody is at risk there";
    throw DegenerateError(msg.str());
  }
}

double time_quantile(const Cohort& cohort, double p) {
  std::vector<double> x(cohort.times().begin(), cohort.times().end());
  std::sort(x.begin(), x.end());
  const double h = p * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

TimeGrid event_times_between(const Cohort& cohort, double lo, double hi) {
  std::vector<double> pts;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const double t = cohort.times()[i];
    if (cohort.statuses()[i] == 1 && t > 0.0 && t >= lo && t <= hi) pts.push_back(t);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return TimeGrid(std::move(pts));
}

TimeGrid default_grid(const Cohort& cohort, double lower_quantile, double upper_quantile) {
  if (!(lower_quantile > 0.0 && lower_quantile < 1.0 && upper_quantile > 0.0 &&
        upper_quantile < 1.0)) {
    throw ParameterError("grid quantiles must lie in (0, 1)");
  }
  if (!(lower_quantile < upper_quantile)) {
    throw ParameterError("lower grid quantile must be below the upper one");
  }
  const double lo = time_quantile(cohort, lower_quantile);
  const double hi = time_quantile(cohort, upper_quantile);
  TimeGrid grid = event_times_between(cohort, lo, hi);
  if (grid.empty()) {
    throw DegenerateError("no event times between the requested quantiles; widen the range");
  }
  return grid;
}

}  // namespace tdpauc
