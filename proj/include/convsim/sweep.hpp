#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "convsim/costmodel.hpp"

namespace convsim {

// Parameter-grid description parsed from a flat key=value spec file.
struct SweepSpec {
  std::string kernel = "special";  // special | general | both
  std::vector<int> image_sizes;    // N
  std::vector<int> filter_sizes;   // K
  std::vector<int> channel_counts; // C (general rows; special always runs C=1)
  std::vector<int> filter_counts;  // F
  std::string config_source = "explicit";  // explicit | enumerate-best
  SpecialConfig special;
  GeneralConfig general;
  int bank_width = 8;
  int elem_width = 4;
  uint64_t seed = 1;
  std::string out_path;  // optional; empty = caller decides
};

SweepSpec parse_sweep_spec(const std::string& path);

// Runs the whole grid and renders the CSV (header + one row per
// combination, lexicographic order). `threads` caps worker parallelism;
// output is byte-identical regardless of thread count.
std::string run_sweep(const SweepSpec& spec, int threads);

std::string sweep_csv_header();

}  // namespace convsim
