#include "convsim/costmodel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

namespace convsim {

namespace {

constexpr int kMaxThreadsPerTb = 1024;
constexpr int kMaxRegistersPerThread = 255;

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::string CostReport::csv_header() {
  return "gm_reads_pred,sm_pixel_loads_pred,sm_reduction_factor,"
         "gm_reduction_factor,registers_pred,sm_bytes_pred,bandwidth_factor,"
         "reuse_bound";
}

std::string CostReport::csv_row() const {
  std::ostringstream os;
  os << fmt(gm_reads_pred) << ',' << fmt(sm_pixel_loads_pred) << ','
     << fmt(sm_reduction_factor) << ',' << fmt(gm_reduction_factor) << ','
     << fmt(registers_pred) << ',' << fmt(sm_bytes_pred) << ','
     << fmt(bandwidth_factor) << ',' << fmt(reuse_bound);
  return os.str();
}

CostReport predict_special(const SpecialConfig& cfg, int filter_size,
                           int filters, int image_h, int image_w,
                           const MemModel& model) {
  const int k = filter_size;
  const int n = bandwidth_factor(model);
  CostReport r;
  double reads = 0;
  for (const BlockPlan& b :
       plan_blocks(image_h - k + 1, image_w - k + 1, k, cfg))
    reads += static_cast<double>(b.eff_h + k - 1) * (b.eff_w + k - 1);
  r.gm_reads_pred = reads;
  r.sm_pixel_loads_pred = k + n - 1;           // per thread per output row
  r.sm_reduction_factor = 1.0;
  r.gm_reduction_factor =
      static_cast<double>(image_h) * image_w / reads;  // lower bound / reads
  r.registers_pred = static_cast<double>(k) * (k + n - 1) + n;
  r.sm_bytes_pred = static_cast<double>(k + 1) * (cfg.block_w + k - 1) * 4;
  r.bandwidth_factor = n;
  r.reuse_bound = static_cast<double>(k) * k * filters;
  return r;
}

CostReport predict_general(const GeneralConfig& cfg, int filter_size,
                           int channels, int filters, int image_h, int image_w,
                           const MemModel& model) {
  const int k = filter_size;
  const int n = bandwidth_factor(model);
  const int pad = resolved_pad(cfg, model);
  CostReport r;
  LayoutPlan plan =
      plan_general_layout(image_h - k + 1, image_w - k + 1, filters, cfg);
  double reads = 0;
  for (const TbAssignment& tb : plan.tbs)
    reads += static_cast<double>(tb.block.eff_h + k - 1) *
             (tb.block.eff_w + k - 1) * channels;
  r.gm_reads_pred = reads;
  r.sm_pixel_loads_pred =
      static_cast<double>(cfg.pixels_per_thread + k - 1) * k;
  r.sm_reduction_factor = static_cast<double>(cfg.pixels_per_thread + k - 1) /
                          (static_cast<double>(cfg.pixels_per_thread) * k);
  r.gm_reduction_factor = static_cast<double>(cfg.block_h + k - 1) /
                          (static_cast<double>(cfg.block_h) * k);
  r.registers_pred =
      static_cast<double>(cfg.filters_per_thread) * cfg.pixels_per_thread +
      (cfg.pixels_per_thread + k - 1) + cfg.filters_per_thread;
  r.sm_bytes_pred =
      (static_cast<double>(cfg.channels_staged) * (cfg.block_h + k - 1) *
           (cfg.block_w + k - 1) +
       static_cast<double>(cfg.channels_staged) * k * k *
           (cfg.filters_per_tb + pad)) *
      4;
  r.bandwidth_factor = n;
  r.reuse_bound = static_cast<double>(k) * k * filters;
  return r;
}

std::vector<std::string> validate_config(const SpecialConfig& cfg,
                                         int filter_size, int filters,
                                         const MemModel& model) {
  const int k = filter_size;
  std::vector<std::string> v;
  if (cfg.block_w < 1 || cfg.block_h < 1 || cfg.vec < 1) {
    v.push_back("W, H, n must be >= 1");
    return v;
  }
  if (cfg.block_w % cfg.vec != 0)
    v.push_back("W not divisible by n");
  else if (cfg.block_w / cfg.vec > kMaxThreadsPerTb)
    v.push_back("W/n exceeds " + std::to_string(kMaxThreadsPerTb) +
                " threads per TB");
  long regs = static_cast<long>(k) * (k + cfg.vec - 1) + cfg.vec;
  if (regs > kMaxRegistersPerThread)
    v.push_back("register estimate " + std::to_string(regs) + " exceeds " +
                std::to_string(kMaxRegistersPerThread));
  long sm_bytes = static_cast<long>(k + 1) * (cfg.block_w + k - 1) * 4;
  if (sm_bytes > model.sm_capacity_bytes)
    v.push_back("shared-memory row buffer needs " + std::to_string(sm_bytes) +
                " bytes, capacity " + std::to_string(model.sm_capacity_bytes));
  long cm_bytes = static_cast<long>(filters) * k * k * 4;
  if (cm_bytes > model.cm_capacity_bytes)
    v.push_back("filters need " + std::to_string(cm_bytes) +
                " bytes of constant memory, capacity " +
                std::to_string(model.cm_capacity_bytes));
  return v;
}

std::vector<std::string> validate_config(const GeneralConfig& cfg,
                                         int filter_size, int channels,
                                         int filters, const MemModel& model) {
  (void)filters;
  const int k = filter_size;
  const int pad = resolved_pad(cfg, model);
  std::vector<std::string> v;
  if (cfg.block_w < 1 || cfg.block_h < 1 || cfg.filters_per_tb < 1 ||
      cfg.pixels_per_thread < 1 || cfg.filters_per_thread < 1 ||
      cfg.channels_staged < 1) {
    v.push_back("all tiling parameters must be >= 1");
    return v;
  }
  if (cfg.filters_per_tb % cfg.filters_per_thread != 0)
    v.push_back("T_X not integral: F_TB not divisible by F_T");
  if ((cfg.block_w * cfg.block_h) % cfg.pixels_per_thread != 0)
    v.push_back("T_Y not integral: W*H not divisible by W_T");
  if (cfg.block_w % cfg.pixels_per_thread != 0)
    v.push_back("W not divisible by W_T");
  if (cfg.filters_per_tb % cfg.filters_per_thread == 0 &&
      (cfg.block_w * cfg.block_h) % cfg.pixels_per_thread == 0) {
    long threads =
        static_cast<long>(thread_grid_x(cfg)) * thread_grid_y(cfg);
    if (threads > kMaxThreadsPerTb)
      v.push_back("thread grid " + std::to_string(threads) + " exceeds " +
                  std::to_string(kMaxThreadsPerTb) + " threads per TB");
  }
  if (channels > 0 && cfg.channels_staged > channels)
    v.push_back("C_SH exceeds channel count");
  long regs =
      static_cast<long>(cfg.filters_per_thread) * cfg.pixels_per_thread +
      (cfg.pixels_per_thread + k - 1) + cfg.filters_per_thread;
  if (regs > kMaxRegistersPerThread)
    v.push_back("register estimate " + std::to_string(regs) + " exceeds " +
                std::to_string(kMaxRegistersPerThread));
  long sm_bytes = (static_cast<long>(cfg.channels_staged) *
                       (cfg.block_h + k - 1) * (cfg.block_w + k - 1) +
                   static_cast<long>(cfg.channels_staged) * k * k *
                       (cfg.filters_per_tb + pad)) *
                  4;
  if (sm_bytes > model.sm_capacity_bytes)
    v.push_back("shared memory needs " + std::to_string(sm_bytes) +
                " bytes, capacity " + std::to_string(model.sm_capacity_bytes));
  return v;
}

void throw_if_invalid(const std::vector<std::string>& violations) {
  if (violations.empty()) return;
  std::string joined;
  bool capacity = false;
  for (const auto& s : violations) {
    if (!joined.empty()) joined += "; ";
    joined += s;
    if (s.find("capacity") != std::string::npos) capacity = true;
  }
  if (capacity) throw CapacityError(joined);
  throw ConfigError(joined);
}

std::vector<std::pair<GeneralConfig, CostReport>> enumerate_configs(
    int filter_size, int channels, int filters, const MemModel& model,
    const EnumBounds& bounds) {
  const int k = filter_size;
  const int n = bandwidth_factor(model);
  std::vector<std::pair<GeneralConfig, CostReport>> result;

  auto pow2_upto = [](int limit) {
    std::vector<int> v;
    for (int x = 1; x <= limit; x *= 2) v.push_back(x);
    return v;
  };

  // Ranking metric: predicted communication per output pixel, GM in
  // 128-byte transactions plus SM in warp cycles.
  auto cost = [&](const GeneralConfig& cfg) {
    double outs = static_cast<double>(cfg.block_w) * cfg.block_h;
    double tiles = std::ceil(static_cast<double>(filters) /
                             cfg.filters_per_tb);
    double gm_elems =
        static_cast<double>(channels) * (cfg.block_h + k - 1) *
            (cfg.block_w + k - 1) / outs * tiles +
        static_cast<double>(filters) * channels * k * k / outs + 1.0;
    double gm_tx = gm_elems * 4 / model.gm_segment_bytes;
    double sm = static_cast<double>(channels) *
                ((static_cast<double>(cfg.pixels_per_thread + k - 1) * k) /
                     (static_cast<double>(cfg.pixels_per_thread) *
                      cfg.filters_per_thread) +
                 static_cast<double>(k) * k /
                     (static_cast<double>(n) * cfg.pixels_per_thread)) /
                model.warp_size;
    return gm_tx + sm;
  };

  for (int w : pow2_upto(bounds.max_block)) {
    for (int h : pow2_upto(bounds.max_block)) {
      for (int ftb : pow2_upto(std::max(1, filters))) {
        for (int wt : pow2_upto(w)) {
          for (int ft : pow2_upto(ftb)) {
            for (int csh : bounds.channels_staged) {
              GeneralConfig cfg{w, h, ftb, wt, ft, csh, n};
              if (!validate_config(cfg, k, channels, filters, model).empty())
                continue;
              result.emplace_back(
                  cfg, predict_general(cfg, k, channels, filters,
                                       // nominal image: one interior block
                                       h + k - 1, w + k - 1, model));
            }
          }
        }
      }
    }
  }

  std::stable_sort(result.begin(), result.end(), [&](const auto& a,
                                                     const auto& b) {
    double ca = cost(a.first), cb = cost(b.first);
    if (ca != cb) return ca < cb;
    auto key = [](const GeneralConfig& c) {
      return std::make_tuple(c.block_w, c.block_h, c.filters_per_tb,
                             c.pixels_per_thread, c.filters_per_thread,
                             c.channels_staged);
    };
    return key(a.first) < key(b.first);
  });
  return result;
}

}  // namespace convsim
