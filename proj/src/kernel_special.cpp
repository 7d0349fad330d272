#include "convsim/kernel_special.hpp"

#include <algorithm>

#include "convsim/costmodel.hpp"
#include "tb_sim.hpp"

namespace convsim {

namespace {

using detail::LaneList;
using detail::TbSim;
using detail::align_up;

int ceil_div(int a, int b) { return (a + b - 1) / b; }

// Issue one lane list to the simulator. In the unmatched emulation every
// multi-element access is replayed as scalar sub-accesses of W_CD bytes.
void issue(TbSim& sim, const LaneList& lanes, MemSpace space, bool split,
           int elem_width, bool is_write = false) {
  auto dispatch = [&](const LaneList& l) {
    if (space == MemSpace::SM)
      sim.sm_access(l);
    else
      sim.gm_access(l, is_write);
  };
  if (!split) {
    dispatch(lanes);
    return;
  }
  uint32_t max_width = 0;
  for (const auto& lane : lanes)
    if (lane) max_width = std::max(max_width, lane->width);
  const uint32_t step = static_cast<uint32_t>(elem_width);
  for (uint32_t off = 0; off < max_width; off += step) {
    LaneList sub(lanes.size());
    for (size_t i = 0; i < lanes.size(); ++i)
      if (lanes[i] && off < lanes[i]->width)
        sub[i] = LaneAccess{lanes[i]->addr + off,
                            std::min(step, lanes[i]->width - off)};
    dispatch(sub);
  }
}

struct SpecialSim {
  const Image& image;
  const FilterBank& filters;
  SpecialConfig cfg;
  MemModel model;
  bool split;  // unmatched layout

  int k;
  int n;
  int out_h, out_w;
  uint64_t row_stride;  // bytes per SM row slot, bank-aligned
  OutputMap out;
  Metrics metrics;
  std::vector<BlockStats> blocks;

  uint64_t gm_input_addr(int y, int x) const {
    return (static_cast<uint64_t>(y) * image.width + x) * 4;
  }
  uint64_t gm_output_addr(int f, int y, int x) const {
    return ((static_cast<uint64_t>(f) * out_h + y) * out_w + x) * 4;
  }
  uint64_t sm_addr(int slot, int x_local) const {
    return static_cast<uint64_t>(slot) * row_stride + 4ull * x_local;
  }
  uint64_t cm_filter_addr(int f, int ky, int kx) const {
    return (static_cast<uint64_t>(f) * k * k + static_cast<uint64_t>(ky) * k +
            kx) * 4;
  }

  void run() {
    out.maps = filters.filters;
    out.height = out_h;
    out.width = out_w;
    out.data.assign(static_cast<size_t>(out.maps) * out_h * out_w, 0.0f);

    row_stride = align_up(static_cast<uint64_t>(cfg.block_w + k - 1) * 4,
                          model.bank_width_bytes);

    metrics.registers_per_thread =
        static_cast<uint64_t>(k) * (k + n - 1) + n;
    metrics.sm_bytes_used = static_cast<uint64_t>(k + 1) * row_stride;

    for (const BlockPlan& b : plan_blocks(out_h, out_w, k, cfg)) {
      BlockStats stats;
      stats.input_footprint = static_cast<uint64_t>(b.eff_h + k - 1) *
                              (b.eff_w + k - 1);
      TbSim sim(model, metrics, stats);
      simulate_block(sim, stats, b);
      blocks.push_back(stats);
    }
  }

  // GM fetch of one input row segment, cooperatively across the TB's
  // threads in n-wide units. Optionally paired with the SM store of the
  // same data (the staged copy of Algorithm 1 lines 1 and 10).
  void stage_row(TbSim& sim, const BlockPlan& b, int block_row, int slot,
                 bool store_to_sm) {
    const int len = b.eff_w + k - 1;
    const int units = ceil_div(len, n);
    const int threads = ceil_div(b.eff_w, n);
    const int y = b.out_y + block_row;
    for (int round = 0; round * threads < units; ++round) {
      LaneList gm(threads), sm(threads);
      for (int t = 0; t < threads; ++t) {
        int u = round * threads + t;
        if (u >= units) break;
        int x_local = u * n;
        uint32_t width = static_cast<uint32_t>(std::min(n, len - x_local)) * 4;
        gm[t] = LaneAccess{gm_input_addr(y, b.out_x + x_local), width};
        sm[t] = LaneAccess{sm_addr(slot, x_local), width};
        for (uint32_t e = 0; e < width / 4; ++e)
          sim.note_input_read(gm_input_addr(y, b.out_x + x_local) / 4 + e);
      }
      issue(sim, gm, MemSpace::GM, split, model.elem_width_bytes);
      if (store_to_sm) issue(sim, sm, MemSpace::SM, split,
                             model.elem_width_bytes);
    }
  }

  // SM -> register load of one staged row: each thread reads the window
  // feeding its pixels, in n-wide units (Algorithm 1 lines 3 and 6).
  void load_row_windows(TbSim& sim, BlockStats& stats, const BlockPlan& b,
                        int slot, bool count_row_load) {
    const int threads = ceil_div(b.eff_w, n);
    const int max_window = n + k - 1;
    for (int j = 0; j * n < max_window; ++j) {
      LaneList lanes(threads);
      for (int t = 0; t < threads; ++t) {
        int pixels = std::min(n, b.eff_w - t * n);
        int window = pixels + k - 1;
        if (j * n >= window) continue;
        int x_local = t * n + j * n;
        uint32_t width = static_cast<uint32_t>(std::min(n, window - j * n)) * 4;
        lanes[t] = LaneAccess{sm_addr(slot, x_local), width};
        if (count_row_load) stats.sm_row_load_elems += width / 4;
      }
      issue(sim, lanes, MemSpace::SM, split, model.elem_width_bytes);
    }
  }

  void simulate_block(TbSim& sim, BlockStats& stats, const BlockPlan& b) {
    const int threads = ceil_div(b.eff_w, n);
    const int in_rows = b.eff_h + k - 1;
    const int slots = k + 1;

    // Line 1: first K rows GM -> SM.
    for (int r = 0; r < k; ++r) stage_row(sim, b, r, r % slots, true);
    // Line 3: first K-1 rows SM -> register.
    for (int r = 0; r + 1 < k; ++r)
      load_row_windows(sim, stats, b, r % slots, false);

    for (int step = 0; step < b.eff_h; ++step) {
      const int cur_row = k - 1 + step;
      const int next_row = cur_row + 1;
      const bool have_next = next_row < in_rows;
      const int y_out = b.out_y + step;

      // Line 5: prefetch the next row GM -> register.
      if (have_next) stage_row(sim, b, next_row, next_row % slots, false);
      // Line 6: latest row SM -> register.
      load_row_windows(sim, stats, b, cur_row % slots, true);

      // Lines 7-8: F filters, filter values broadcast from the CM, then an
      // n-wide store of each thread's pixels.
      for (int f = 0; f < filters.filters; ++f) {
        std::vector<float> acc(static_cast<size_t>(threads) * n, 0.0f);
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            LaneList cm(threads);
            for (int t = 0; t < threads; ++t)
              cm[t] = LaneAccess{cm_filter_addr(f, ky, kx), 4};
            sim.cm_access(cm);
            const float w = filters.at(f, 0, ky, kx);
            for (int t = 0; t < threads; ++t) {
              int pixels = std::min(n, b.eff_w - t * n);
              for (int p = 0; p < pixels; ++p) {
                int x = b.out_x + t * n + p;
                acc[static_cast<size_t>(t) * n + p] +=
                    image.at(0, y_out + ky, x + kx) * w;
              }
            }
          }
        }
        LaneList store(threads);
        for (int t = 0; t < threads; ++t) {
          int pixels = std::min(n, b.eff_w - t * n);
          int x = b.out_x + t * n;
          store[t] = LaneAccess{gm_output_addr(f, y_out, x),
                                static_cast<uint32_t>(pixels) * 4};
          stats.gm_output_writes += static_cast<uint64_t>(pixels);
          for (int p = 0; p < pixels; ++p)
            out.at(f, y_out, x + p) = acc[static_cast<size_t>(t) * n + p];
        }
        issue(sim, store, MemSpace::GM, split, model.elem_width_bytes, true);
      }

      // Line 10: prefetched row register -> SM.
      if (have_next) {
        const int len = b.eff_w + k - 1;
        const int units = ceil_div(len, n);
        const int slot = next_row % slots;
        for (int round = 0; round * threads < units; ++round) {
          LaneList sm(threads);
          for (int t = 0; t < threads; ++t) {
            int u = round * threads + t;
            if (u >= units) break;
            int x_local = u * n;
            uint32_t width =
                static_cast<uint32_t>(std::min(n, len - x_local)) * 4;
            sm[t] = LaneAccess{sm_addr(slot, x_local), width};
          }
          issue(sim, sm, MemSpace::SM, split, model.elem_width_bytes);
        }
      }
    }
  }
};

RunResult run_impl(const Image& image, const FilterBank& filters,
                   const SpecialConfig& cfg, const MemModel& model,
                   bool split) {
  model.validate();
  if (image.channels != 1 || filters.channels != 1)
    throw ConfigError("special kernel requires a single channel (C=1)");
  const int k = filters.size;
  if (image.height < k || image.width < k)
    throw ConfigError("image smaller than filter");
  const int n = bandwidth_factor(model);
  if (cfg.vec != n)
    throw ConfigError("config n=" + std::to_string(cfg.vec) +
                      " does not match model W_SMB/W_CD=" + std::to_string(n));
  throw_if_invalid(validate_config(cfg, k, filters.filters, model));

  SpecialSim sim{image, filters, cfg, model, split};
  sim.k = k;
  sim.n = n;
  sim.out_h = image.height - k + 1;
  sim.out_w = image.width - k + 1;
  sim.run();
  return RunResult{std::move(sim.out), sim.metrics, std::move(sim.blocks)};
}

}  // namespace

std::vector<BlockPlan> plan_blocks(int out_h, int out_w, int filter_size,
                                   const SpecialConfig& cfg) {
  if (out_h < 1 || out_w < 1 || filter_size < 1)
    throw ConfigError("output domain and filter size must be >= 1");
  std::vector<BlockPlan> blocks;
  for (int by = 0; by < out_h; by += cfg.block_h) {
    for (int bx = 0; bx < out_w; bx += cfg.block_w) {
      BlockPlan b;
      b.out_y = by;
      b.out_x = bx;
      b.eff_h = std::min(cfg.block_h, out_h - by);
      b.eff_w = std::min(cfg.block_w, out_w - bx);
      b.halo = filter_size - 1;
      blocks.push_back(b);
    }
  }
  return blocks;
}

RunResult run_special(const Image& image, const FilterBank& filters,
                      const SpecialConfig& cfg, const MemModel& model) {
  return run_impl(image, filters, cfg, model, false);
}

RunResult run_special_unmatched(const Image& image, const FilterBank& filters,
                                const SpecialConfig& cfg,
                                const MemModel& model) {
  return run_impl(image, filters, cfg, model, true);
}

}  // namespace convsim
