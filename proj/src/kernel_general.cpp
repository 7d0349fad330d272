#include "convsim/kernel_general.hpp"

#include <algorithm>

#include "convsim/costmodel.hpp"
#include "tb_sim.hpp"

namespace convsim {

namespace {

using detail::LaneList;
using detail::TbSim;
using detail::align_up;

int ceil_div(int a, int b) { return (a + b - 1) / b; }

struct ThreadSlot {
  int tx = 0;
  int ty = 0;
  int row = 0;       // block-local output row
  int seg_x = 0;     // block-local first output column
  int pixels = 0;    // active output pixels, <= pixels_per_thread
  int filter0 = 0;   // global index of first filter
  int nfilters = 0;  // active filters, <= filters_per_thread
  bool active() const { return pixels > 0 && nfilters > 0; }
};

struct GeneralSim {
  const Image& image;
  const FilterBank& filters;
  GeneralConfig cfg;
  MemModel model;

  int k, n, pad;
  int out_h, out_w;
  int tile_x, tile_y;     // T_X, T_Y
  uint64_t sm_flt_base;   // byte offset of the filter tile in SM
  OutputMap out;
  Metrics metrics;
  std::vector<BlockStats> blocks;

  uint64_t gm_input_addr(int c, int y, int x) const {
    return ((static_cast<uint64_t>(c) * image.height + y) * image.width + x) *
           4;
  }
  uint64_t gm_filter_addr(int f, int c, int kk) const {
    return ((static_cast<uint64_t>(f) * image.channels + c) * k * k + kk) * 4;
  }
  uint64_t gm_output_addr(int f, int y, int x) const {
    return ((static_cast<uint64_t>(f) * out_h + y) * out_w + x) * 4;
  }
  uint64_t sm_img_addr(int c, int ry, int rx) const {
    uint64_t row_len = static_cast<uint64_t>(cfg.block_w + k - 1);
    uint64_t rows = static_cast<uint64_t>(cfg.block_h + k - 1);
    return ((static_cast<uint64_t>(c) * rows + ry) * row_len + rx) * 4;
  }
  uint64_t sm_flt_addr(int c, int kk, int f_local) const {
    return sm_flt_base + sm_filter_address(cfg, k, c, kk, f_local);
  }

  void run() {
    out.maps = filters.filters;
    out.height = out_h;
    out.width = out_w;
    out.data.assign(static_cast<size_t>(out.maps) * out_h * out_w, 0.0f);

    sm_flt_base = align_up(static_cast<uint64_t>(cfg.channels_staged) *
                               (cfg.block_h + k - 1) * (cfg.block_w + k - 1) *
                               4,
                           model.bank_width_bytes);
    metrics.sm_bytes_used =
        sm_flt_base + static_cast<uint64_t>(cfg.channels_staged) * k * k *
                          (cfg.filters_per_tb + pad) * 4;
    metrics.registers_per_thread =
        static_cast<uint64_t>(cfg.filters_per_thread) * cfg.pixels_per_thread +
        (cfg.pixels_per_thread + k - 1) + cfg.filters_per_thread;

    LayoutPlan plan = plan_general_layout(out_h, out_w, filters.filters, cfg);
    for (const TbAssignment& tb : plan.tbs) {
      BlockStats stats;
      stats.input_footprint = static_cast<uint64_t>(tb.block.eff_h + k - 1) *
                              (tb.block.eff_w + k - 1);
      TbSim sim(model, metrics, stats);
      simulate_tb(sim, stats, tb);
      blocks.push_back(stats);
    }
  }

  std::vector<ThreadSlot> make_threads(const TbAssignment& tb) const {
    std::vector<ThreadSlot> threads(static_cast<size_t>(tile_x) * tile_y);
    const int segs = cfg.block_w / cfg.pixels_per_thread;
    for (int ty = 0; ty < tile_y; ++ty) {
      for (int tx = 0; tx < tile_x; ++tx) {
        ThreadSlot& t = threads[static_cast<size_t>(ty) * tile_x + tx];
        t.tx = tx;
        t.ty = ty;
        t.row = ty / segs;
        t.seg_x = (ty % segs) * cfg.pixels_per_thread;
        t.filter0 = tb.filter_begin + tx * cfg.filters_per_thread;
        t.nfilters = std::clamp(
            tb.filter_begin + tb.filter_count - t.filter0, 0,
            cfg.filters_per_thread);
        if (t.row < tb.block.eff_h)
          t.pixels = std::clamp(tb.block.eff_w - t.seg_x, 0,
                                cfg.pixels_per_thread);
      }
    }
    return threads;
  }

  // Lines 4-5 / 8-9 + 17-18: stage `count` channels starting at c0. The GM
  // fetches and the SM stores are both issued here; prefetching only
  // reorders them in time, which the counters do not see.
  void stage_chunk(TbSim& sim, const TbAssignment& tb, int c0, int count) {
    const int lanes_per_round = tile_x * tile_y;
    const int in_w = tb.block.eff_w + k - 1;
    const int in_h = tb.block.eff_h + k - 1;

    // Image rows, n-wide units, contiguous in GM and in SM.
    for (int cl = 0; cl < count; ++cl) {
      for (int ry = 0; ry < in_h; ++ry) {
        const int units = ceil_div(in_w, n);
        for (int round = 0; round * lanes_per_round < units; ++round) {
          LaneList gm(lanes_per_round), sm(lanes_per_round);
          for (int t = 0; t < lanes_per_round; ++t) {
            int u = round * lanes_per_round + t;
            if (u >= units) break;
            int rx = u * n;
            uint32_t width =
                static_cast<uint32_t>(std::min(n, in_w - rx)) * 4;
            uint64_t src = gm_input_addr(c0 + cl, tb.block.out_y + ry,
                                         tb.block.out_x + rx);
            gm[t] = LaneAccess{src, width};
            sm[t] = LaneAccess{sm_img_addr(cl, ry, rx), width};
            for (uint32_t e = 0; e < width / 4; ++e)
              sim.note_input_read(src / 4 + e);
          }
          sim.gm_access(gm);
          sim.sm_access(sm);
        }
      }
    }

    // Filter tile, transposed on the way in: one warp per filter, lanes walk
    // kk. The GM read is a filter's contiguous K*K values; the SM writes
    // stride whole padded rows, so the row length decides the bank spread.
    const int kk_count = k * k;
    for (int cl = 0; cl < count; ++cl) {
      for (int f_rel = 0; f_rel < tb.filter_count; ++f_rel) {
        LaneList gm(kk_count), sm(kk_count);
        for (int kk = 0; kk < kk_count; ++kk) {
          uint64_t src = gm_filter_addr(tb.filter_begin + f_rel, c0 + cl, kk);
          gm[kk] = LaneAccess{src, 4};
          sm[kk] = LaneAccess{sm_flt_addr(cl, kk, f_rel), 4};
          sim.note_filter_read(src / 4);
        }
        sim.gm_access(gm);
        sim.sm_access(sm);
      }
    }
  }

  void simulate_tb(TbSim& sim, BlockStats& stats, const TbAssignment& tb) {
    const std::vector<ThreadSlot> threads = make_threads(tb);
    const size_t acc_stride = static_cast<size_t>(cfg.filters_per_thread) *
                              cfg.pixels_per_thread;
    std::vector<float> acc(threads.size() * acc_stride, 0.0f);

    const int c_total = image.channels;
    const int chunk = cfg.channels_staged;
    for (int c0 = 0; c0 < c_total; c0 += chunk) {
      const int count = std::min(chunk, c_total - c0);
      stage_chunk(sim, tb, c0, count);
      for (int cl = 0; cl < count; ++cl) {
        const int c = c0 + cl;
        for (int j = 0; j < k; ++j) {
          // Line 12: a row of pixels_per_thread + K - 1 pixels into rImg,
          // scalar reads broadcast across the filter dimension.
          const int in_w = tb.block.eff_w + k - 1;
          for (int p = 0; p < cfg.pixels_per_thread + k - 1; ++p) {
            LaneList lanes(threads.size());
            for (size_t i = 0; i < threads.size(); ++i) {
              const ThreadSlot& t = threads[i];
              if (!t.active()) continue;
              if (t.seg_x + p >= in_w || p >= t.pixels + k - 1) continue;
              lanes[i] = LaneAccess{sm_img_addr(cl, t.row + j, t.seg_x + p), 4};
              stats.sm_img_elems_read += 1;
            }
            sim.sm_access(lanes);
          }
          for (int kr = 0; kr < k; ++kr) {
            // Line 14: filters_per_thread values as n-wide units.
            const int kk = j * k + kr;
            const int units = ceil_div(cfg.filters_per_thread, n);
            for (int u = 0; u < units; ++u) {
              LaneList lanes(threads.size());
              for (size_t i = 0; i < threads.size(); ++i) {
                const ThreadSlot& t = threads[i];
                if (!t.active() || u * n >= t.nfilters) continue;
                uint32_t width = static_cast<uint32_t>(
                                     std::min(n, t.nfilters - u * n)) * 4;
                lanes[i] = LaneAccess{
                    sm_flt_addr(cl, kk,
                                t.tx * cfg.filters_per_thread + u * n),
                    width};
              }
              sim.sm_access(lanes);
            }
            // Line 15: rAcc += rFlt x rImg at offset kr.
            for (size_t i = 0; i < threads.size(); ++i) {
              const ThreadSlot& t = threads[i];
              if (!t.active()) continue;
              for (int ft = 0; ft < t.nfilters; ++ft) {
                const float w = filters.at(t.filter0 + ft, c, j, kr);
                for (int wt = 0; wt < t.pixels; ++wt) {
                  float v = image.at(c, tb.block.out_y + t.row + j,
                                     tb.block.out_x + t.seg_x + wt + kr);
                  acc[i * acc_stride +
                      static_cast<size_t>(ft) * cfg.pixels_per_thread + wt] +=
                      w * v;
                }
              }
            }
          }
        }
      }
    }

    // Line 20: write rAcc back, uncoalesced across the filter dimension.
    for (int ft = 0; ft < cfg.filters_per_thread; ++ft) {
      for (int u = 0; u * n < cfg.pixels_per_thread; ++u) {
        LaneList lanes(threads.size());
        for (size_t i = 0; i < threads.size(); ++i) {
          const ThreadSlot& t = threads[i];
          if (!t.active() || ft >= t.nfilters || u * n >= t.pixels) continue;
          int f = t.filter0 + ft;
          int x = t.seg_x + u * n;
          int count = std::min(n, t.pixels - u * n);
          lanes[i] = LaneAccess{
              gm_output_addr(f, tb.block.out_y + t.row, tb.block.out_x + x),
              static_cast<uint32_t>(count) * 4};
          stats.gm_output_writes += static_cast<uint64_t>(count);
          for (int e = 0; e < count; ++e)
            out.at(f, tb.block.out_y + t.row, tb.block.out_x + x + e) =
                acc[i * acc_stride +
                    static_cast<size_t>(ft) * cfg.pixels_per_thread + u * n +
                    e];
        }
        sim.gm_access(lanes, true);
      }
    }
  }
};

}  // namespace

int thread_grid_x(const GeneralConfig& cfg) {
  return cfg.filters_per_tb / cfg.filters_per_thread;
}

int thread_grid_y(const GeneralConfig& cfg) {
  return cfg.block_w * cfg.block_h / cfg.pixels_per_thread;
}

int resolved_pad(const GeneralConfig& cfg, const MemModel& model) {
  return cfg.pad >= 0 ? cfg.pad : bandwidth_factor(model);
}

uint64_t sm_filter_address(const GeneralConfig& cfg, int filter_size, int c,
                           int kk, int f_local) {
  const uint64_t row = static_cast<uint64_t>(cfg.filters_per_tb) +
                       std::max(cfg.pad, 0);
  const uint64_t kk_count =
      static_cast<uint64_t>(filter_size) * filter_size;
  return 4 * (static_cast<uint64_t>(c) * kk_count * row +
              static_cast<uint64_t>(kk) * row + f_local);
}

LayoutPlan plan_general_layout(int out_h, int out_w, int filters,
                               const GeneralConfig& cfg) {
  if (out_h < 1 || out_w < 1 || filters < 1)
    throw ConfigError("output domain and filter count must be >= 1");
  LayoutPlan plan;
  plan.tb_x = ceil_div(filters, cfg.filters_per_tb);
  SpecialConfig tiling{cfg.block_w, cfg.block_h, 1, false};
  std::vector<BlockPlan> spatial = plan_blocks(out_h, out_w, 1, tiling);
  plan.tb_y = static_cast<int>(spatial.size());
  for (const BlockPlan& b : spatial) {
    for (int fx = 0; fx < plan.tb_x; ++fx) {
      TbAssignment tb;
      tb.block = b;
      tb.filter_begin = fx * cfg.filters_per_tb;
      tb.filter_count =
          std::min(cfg.filters_per_tb, filters - tb.filter_begin);
      plan.tbs.push_back(tb);
    }
  }
  return plan;
}

RunResult run_general(const Image& image, const FilterBank& filters,
                      const GeneralConfig& cfg_in, const MemModel& model) {
  model.validate();
  if (image.channels != filters.channels)
    throw ConfigError("channel mismatch between image and filters");
  const int k = filters.size;
  if (image.height < k || image.width < k)
    throw ConfigError("image smaller than filter");

  GeneralConfig cfg = cfg_in;
  cfg.pad = resolved_pad(cfg, model);
  throw_if_invalid(
      validate_config(cfg, k, image.channels, filters.filters, model));

  GeneralSim sim{image, filters, cfg, model};
  sim.k = k;
  sim.n = bandwidth_factor(model);
  sim.pad = cfg.pad;
  sim.out_h = image.height - k + 1;
  sim.out_w = image.width - k + 1;
  sim.tile_x = thread_grid_x(cfg);
  sim.tile_y = thread_grid_y(cfg);
  sim.run();
  return RunResult{std::move(sim.out), sim.metrics, std::move(sim.blocks)};
}

}  // namespace convsim
