#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "mrsc/eval/bleu.hpp"

namespace mrsc::eval {

inline constexpr const char* kResultsHeader =
    "model,metric_axis,value,bleu1,bleu2,bleu3,bleu4,seed,n_sentences";

// Running mean of BLEU-1..4 over scored sentences.
struct BleuAccumulator {
  std::array<double, 4> sum{};
  std::size_t count = 0;

  void add(const BleuScore& s);
  std::array<double, 4> mean() const;
};

struct SweepRow {
  std::string model;
  std::string metric_axis;  // "snr_db" or "users"
  double value = 0.0;
  std::array<double, 4> bleu{};
  std::uint64_t seed = 0;
  std::size_t n_sentences = 0;
};

// Orders rows by axis, value, then model tag.
void sort_rows(std::vector<SweepRow>& rows);

void write_results_csv(std::ostream& out, std::vector<SweepRow> rows);
void write_results_csv(const std::filesystem::path& file, const std::vector<SweepRow>& rows);
// Rows plus the resolved configuration the run used.
void write_results_json(const std::filesystem::path& file, const std::vector<SweepRow>& rows,
                        const std::map<std::string, std::string>& config);

// Shortest round-trip decimal form, as used in the CSV.
std::string format_number(double v);

}  // namespace mrsc::eval
