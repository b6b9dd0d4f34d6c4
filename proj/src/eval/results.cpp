#include "mrsc/eval/results.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <tuple>

#include <json.hpp>

#include "mrsc/error.hpp"

namespace mrsc::eval {

void BleuAccumulator::add(const BleuScore& s) {
  for (std::size_t n = 0; n < 4; ++n) sum[n] += s.cumulative[n];
  ++count;
}

std::array<double, 4> BleuAccumulator::mean() const {
  std::array<double, 4> m{};
  if (count == 0) return m;
  for (std::size_t n = 0; n < 4; ++n) m[n] = sum[n] / static_cast<double>(count);
  return m;
}

void sort_rows(std::vector<SweepRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.metric_axis, a.value, a.model) < std::tie(b.metric_axis, b.value, b.model);
  });
}

std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_results_csv(std::ostream& out, std::vector<SweepRow> rows) {
  sort_rows(rows);
  out << kResultsHeader << '\n';
  for (const auto& r : rows) {
    out << r.model << ',' << r.metric_axis << ',' << format_number(r.value);
    for (double b : r.bleu) out << ',' << format_number(b);
    out << ',' << r.seed << ',' << r.n_sentences << '\n';
  }
}

void write_results_csv(const std::filesystem::path& file, const std::vector<SweepRow>& rows) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + file.string());
  write_results_csv(out, rows);
}

void write_results_json(const std::filesystem::path& file, const std::vector<SweepRow>& rows,
                        const std::map<std::string, std::string>& config) {
  auto sorted = rows;
  sort_rows(sorted);
  nlohmann::ordered_json j;
  j["config"] = config;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : sorted) {
    j["rows"].push_back({{"model", r.model},
                         {"metric_axis", r.metric_axis},
                         {"value", r.value},
                         {"bleu1", r.bleu[0]},
                         {"bleu2", r.bleu[1]},
                         {"bleu3", r.bleu[2]},
                         {"bleu4", r.bleu[3]},
                         {"seed", r.seed},
                         {"n_sentences", r.n_sentences}});
  }
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

}  // namespace mrsc::eval
