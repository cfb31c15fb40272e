#pragma once

// Marked temporal point patterns and their CSV form.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mhp/errors.hpp"
#include "mhp/stats.hpp"

namespace mhp {

struct MarkBounds {
  double kappa0 = 0.0;
  double kappa_max = stats::kInf;

  double width() const { return kappa_max - kappa0; }
  // Rescaled mark in (0, 1); only meaningful for a bounded mark space.
  double u(double kappa) const { return (kappa - kappa0) / (kappa_max - kappa0); }
  bool contains(double kappa) const { return kappa > kappa0 && kappa < kappa_max; }
};

struct MarkedPointPattern {
  std::vector<double> times;
  std::vector<double> marks;
  double window_end = 0.0;
  MarkBounds bounds;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }

  void validate() const {
    ensure(times.size() == marks.size(), "times and marks differ in length");
    ensure(window_end > 0.0 && std::isfinite(window_end), "window end must be positive and finite");
    ensure(bounds.kappa0 < bounds.kappa_max, "mark bounds must satisfy kappa0 < kappa_max");
    for (std::size_t i = 0; i < times.size(); ++i) {
      const std::string row = std::to_string(i + 1);
      ensure(std::isfinite(times[i]) && times[i] > 0.0, "event time must be positive at event " + row);
      ensure(i == 0 || times[i] > times[i - 1], "times must be strictly increasing at event " + row);
      ensure(times[i] < window_end, "event time beyond window end at event " + row);
      ensure(bounds.contains(marks[i]), "mark outside the open mark interval at event " + row);
    }
  }
};

enum class EventLabel { main, aftershock };

inline std::string_view to_string(EventLabel label) {
  return label == EventLabel::main ? "main" : "aftershock";
}

struct LabeledPattern {
  MarkedPointPattern pattern;
  std::optional<std::vector<EventLabel>> labels;

  void validate() const {
    pattern.validate();
    if (labels) ensure(labels->size() == pattern.size(), "label count differs from event count");
  }
};

struct CatalogOptions {
  double kappa0 = 0.0;
  double kappa_max = stats::kInf;
  std::optional<double> window_end;
  double window_margin = 1.0;
  // Tied or out-of-order times are errors unless a jitter width is given.
  std::optional<double> jitter;
  std::uint64_t jitter_seed = 0;
  // Marks exactly on a bound are moved inward by this much when clamping.
  bool clamp = false;
  double clamp_step = 1e-9;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::optional<double> parse_real(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

// Shortest text that reads back to the same double.
inline std::string format_real(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Parses `time,magnitude[,label]` CSV text. Row numbers in errors count data
/// rows from 1, header excluded.
inline LabeledPattern parse_catalog(std::istream& in, const CatalogOptions& opt) {
  ensure(opt.kappa0 < opt.kappa_max, "mark bounds must satisfy kappa0 < kappa_max");
  std::string line;
  ensure(static_cast<bool>(std::getline(in, line)), "catalog is empty");
  const auto header = detail::split_fields(line);
  const bool has_label = header.size() == 3;
  ensure((header.size() == 2 || has_label) && header[0] == "time" && header[1] == "magnitude" &&
             (!has_label || header[2] == "label"),
         "catalog header must be time,magnitude or time,magnitude,label");

  std::vector<double> times, marks;
  std::vector<EventLabel> labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++row;
    const std::string where = " at row " + std::to_string(row);
    const auto fields = detail::split_fields(line);
    ensure(fields.size() == header.size(), "malformed row" + where);
    const auto t = detail::parse_real(fields[0]);
    const auto k = detail::parse_real(fields[1]);
    ensure(t.has_value() && k.has_value(), "malformed row" + where);
    ensure(*t > 0.0, "non-positive time" + where);
    double kappa = *k;
    if (opt.clamp) {
      if (kappa == opt.kappa0) kappa += opt.clamp_step;
      if (kappa == opt.kappa_max) kappa -= opt.clamp_step;
    }
    ensure(kappa > opt.kappa0 && kappa < opt.kappa_max, "mark outside (kappa0, kappa_max)" + where);
    if (!opt.jitter && !times.empty()) {
      ensure(*t != times.back(), "duplicate times" + where);
      ensure(*t > times.back(), "non-monotone times" + where);
    }
    if (has_label) {
      if (fields[2] == "main") {
        labels.push_back(EventLabel::main);
      } else if (fields[2] == "aftershock") {
        labels.push_back(EventLabel::aftershock);
      } else {
        throw ValidationError("unknown label" + where);
      }
    }
    times.push_back(*t);
    marks.push_back(kappa);
  }

  if (opt.jitter) {
    const double eps = *opt.jitter;
    ensure(eps > 0.0, "jitter width must be positive");
    stats::SeededRng rng(opt.jitter_seed, 0x6a17);
    std::vector<std::size_t> order(times.size());
    for (int pass = 0;; ++pass) {
      ensure<NumericalError>(pass < 100, "jitter could not separate tied times");
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return times[a] < times[b]; });
      auto permute = [&](auto& v) {
        auto copy = v;
        for (std::size_t i = 0; i < order.size(); ++i) v[i] = copy[order[i]];
      };
      permute(times);
      permute(marks);
      if (has_label) permute(labels);
      bool tied = false;
      for (std::size_t i = 1; i < times.size(); ++i) {
        if (times[i] == times[i - 1]) {
          times[i] += eps * rng.uniform();
          tied = true;
        }
      }
      if (!tied) break;
    }
  }

  LabeledPattern out;
  out.pattern.times = std::move(times);
  out.pattern.marks = std::move(marks);
  out.pattern.bounds = {opt.kappa0, opt.kappa_max};
  const double last = out.pattern.empty() ? 0.0 : out.pattern.times.back();
  out.pattern.window_end = opt.window_end.value_or(last + opt.window_margin);
  ensure(out.pattern.window_end > last, "window end must exceed the last event time");
  if (has_label) out.labels = std::move(labels);
  out.validate();
  return out;
}

inline LabeledPattern load_catalog(const std::string& path, const CatalogOptions& opt) {
  std::ifstream in(path);
  ensure(in.good(), "cannot open catalog " + path);
  return parse_catalog(in, opt);
}

inline LabeledPattern load_catalog(const std::string& path, double kappa0, double kappa_max) {
  CatalogOptions opt;
  opt.kappa0 = kappa0;
  opt.kappa_max = kappa_max;
  return load_catalog(path, opt);
}

inline void write_catalog(std::ostream& out, const LabeledPattern& data) {
  const auto& p = data.pattern;
  out << (data.labels ? "time,magnitude,label\n" : "time,magnitude\n");
  for (std::size_t i = 0; i < p.size(); ++i) {
    out << detail::format_real(p.times[i]) << ',' << detail::format_real(p.marks[i]);
    if (data.labels) out << ',' << to_string((*data.labels)[i]);
    out << '\n';
  }
}

inline void save_catalog(const std::string& path, const LabeledPattern& data) {
  std::ofstream out(path);
  ensure(out.good(), "cannot write catalog " + path);
  write_catalog(out, data);
}

/// Splits at t_split: events before it (window ends at t_split) and events in
/// [t_split, T) with the original window end. Times stay absolute.
inline std::pair<LabeledPattern, LabeledPattern> split_at(const LabeledPattern& data, double t_split) {
  const auto& p = data.pattern;
  ensure(t_split > 0.0 && t_split < p.window_end, "split time must lie inside (0, T)");
  const auto cut = static_cast<std::size_t>(
      std::lower_bound(p.times.begin(), p.times.end(), t_split) - p.times.begin());
  auto slice = [&](std::size_t from, std::size_t to, double window) {
    LabeledPattern part;
    part.pattern.times.assign(p.times.begin() + from, p.times.begin() + to);
    part.pattern.marks.assign(p.marks.begin() + from, p.marks.begin() + to);
    part.pattern.bounds = p.bounds;
    part.pattern.window_end = window;
    if (data.labels) part.labels.emplace(data.labels->begin() + from, data.labels->begin() + to);
    return part;
  };
  return {slice(0, cut, t_split), slice(cut, p.size(), p.window_end)};
}

}  // namespace mhp
