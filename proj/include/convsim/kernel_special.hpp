#pragma once

#include <vector>

#include "convsim/memsim.hpp"
#include "convsim/tensor.hpp"

namespace convsim {

// Tiling parameters for the single-channel kernel. A thread block owns one
// block_h x block_w tile of the output; each thread produces `vec` (= n)
// horizontally contiguous pixels per output row, so a TB has block_w / vec
// threads. Filters live in simulated constant memory.
struct SpecialConfig {
  int block_w = 256;  // W, output pixels per block row
  int block_h = 8;    // H, output rows per block
  int vec = 2;        // n, elements per lane unit
  bool prefetch = true;
};

// One tile of the output domain. eff_* shrink at the right/bottom edges;
// the input footprint of a tile is (eff_h + K - 1) x (eff_w + K - 1).
struct BlockPlan {
  int out_y = 0;
  int out_x = 0;
  int eff_w = 0;
  int eff_h = 0;
  int halo = 0;  // K - 1, identical on the right and bottom
};

std::vector<BlockPlan> plan_blocks(int out_h, int out_w, int filter_size,
                                   const SpecialConfig& cfg);

// Per-TB trace statistics, kept outside Metrics so tests can check the
// communication claims block by block.
struct BlockStats {
  uint64_t gm_input_reads = 0;            // input-image elements
  uint64_t gm_duplicate_input_reads = 0;  // elements fetched more than once
  uint64_t gm_filter_reads = 0;
  uint64_t gm_duplicate_filter_reads = 0;
  uint64_t gm_output_writes = 0;          // output elements stored
  uint64_t gm_write_transactions = 0;
  uint64_t sm_row_load_elems = 0;   // special: per-row SM->register elements
  uint64_t sm_img_elems_read = 0;   // general: shImg elements read
  uint64_t input_footprint = 0;     // (eff_h+K-1)*(eff_w+K-1), per channel
};

struct RunResult {
  OutputMap output;
  Metrics metrics;
  std::vector<BlockStats> blocks;
};

// Emulate the single-channel kernel (bank-width-matched layout) at
// warp/transaction granularity and produce the convolution output plus the
// accumulated communication metrics.
RunResult run_special(const Image& image, const FilterBank& filters,
                      const SpecialConfig& cfg, const MemModel& model);

// Same schedule with the per-lane unit forced down to W_CD: every n-wide
// access is issued as n scalar accesses, so the SM phases cost exactly n
// times the matched run while the arithmetic path (and thus the output) is
// shared bit for bit.
RunResult run_special_unmatched(const Image& image, const FilterBank& filters,
                                const SpecialConfig& cfg,
                                const MemModel& model);

}  // namespace convsim
