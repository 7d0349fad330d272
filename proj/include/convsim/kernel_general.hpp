#pragma once

#include <cstdint>
#include <vector>

#include "convsim/kernel_special.hpp"  // BlockPlan, BlockStats, RunResult
#include "convsim/memsim.hpp"
#include "convsim/tensor.hpp"

namespace convsim {

// Tiling parameters for the multi-channel kernel. A TB covers one spatial
// block and filters_per_tb contiguous filters; threads form a 2D grid of
// (filters_per_tb / filters_per_thread) x (block_w*block_h /
// pixels_per_thread) lanes, x dimension along filters. channels_staged
// channels of the image block and of the transposed filter tile live in SM;
// the filter tile carries `pad` extra elements per row to stagger banks.
struct GeneralConfig {
  int block_w = 32;           // W
  int block_h = 4;            // H
  int filters_per_tb = 64;    // F_TB
  int pixels_per_thread = 16; // W_T, horizontally contiguous
  int filters_per_thread = 4; // F_T
  int channels_staged = 2;    // C_SH
  int pad = -1;               // filter-tile row padding; -1 = choose n
};

int thread_grid_x(const GeneralConfig& cfg);  // T_X = F_TB / F_T
int thread_grid_y(const GeneralConfig& cfg);  // T_Y = W*H / W_T

// Padding actually used: cfg.pad, or n = W_SMB/W_CD when cfg.pad < 0.
int resolved_pad(const GeneralConfig& cfg, const MemModel& model);

// Byte offset of filter value (c, kk, f_local) inside the transposed SM
// filter tile: filter index fastest-varying, rows of filters_per_tb + pad.
uint64_t sm_filter_address(const GeneralConfig& cfg, int filter_size, int c,
                           int kk, int f_local);

struct TbAssignment {
  BlockPlan block;       // spatial tile
  int filter_begin = 0;  // first filter of this TB
  int filter_count = 0;  // filters_per_tb, clipped at F
};

struct LayoutPlan {
  int tb_x = 0;  // ceil(F / filters_per_tb)
  int tb_y = 0;  // spatial blocks
  std::vector<TbAssignment> tbs;  // ordered (spatial, filter tile)
};

LayoutPlan plan_general_layout(int out_h, int out_w, int filters,
                               const GeneralConfig& cfg);

// Emulate the multi-channel kernel: SM staging of channels_staged channels
// of the image block plus the transposed padded filter tile, register row
// reuse across K FMA rounds, uncoalesced write-back.
RunResult run_general(const Image& image, const FilterBank& filters,
                      const GeneralConfig& cfg, const MemModel& model);

}  // namespace convsim
