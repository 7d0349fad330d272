#pragma once

#include <string>
#include <utility>
#include <vector>

#include "convsim/kernel_general.hpp"
#include "convsim/kernel_special.hpp"
#include "convsim/memsim.hpp"

namespace convsim {

// Closed-form communication/resource predictions for one kernel
// configuration; the analytical counterpart the simulator is checked
// against.
struct CostReport {
  double gm_reads_pred = 0;        // input-image elements, whole run
  double sm_pixel_loads_pred = 0;  // per thread per channel (general) or
                                   // per thread per output row (special)
  double sm_reduction_factor = 1;  // (W_T+K-1)/(W_T*K) for the general case
  double gm_reduction_factor = 1;  // (H+K-1)/(H*K); for the special case the
                                   // lower-bound / predicted read ratio
  double registers_pred = 0;       // per thread
  double sm_bytes_pred = 0;
  double bandwidth_factor = 1;     // n = W_SMB / W_CD
  double reuse_bound = 0;          // K*K*F

  static std::string csv_header();
  std::string csv_row() const;
};

CostReport predict_special(const SpecialConfig& cfg, int filter_size,
                           int filters, int image_h, int image_w,
                           const MemModel& model);

CostReport predict_general(const GeneralConfig& cfg, int filter_size,
                           int channels, int filters, int image_h, int image_w,
                           const MemModel& model);

// All violated invariants of a configuration, not just the first. An empty
// result means the configuration is runnable.
std::vector<std::string> validate_config(const SpecialConfig& cfg,
                                         int filter_size, int filters,
                                         const MemModel& model);
std::vector<std::string> validate_config(const GeneralConfig& cfg,
                                         int filter_size, int channels,
                                         int filters, const MemModel& model);

// Raises CapacityError for capacity violations, ConfigError otherwise.
void throw_if_invalid(const std::vector<std::string>& violations);

struct EnumBounds {
  int max_block = 256;  // W, H range over powers of two up to this
  std::vector<int> channels_staged = {1, 2, 4};
};

// Exhaustively enumerate valid general-case configurations, ranked by
// predicted communication volume ascending, ties broken field-
// lexicographically. Deterministic across runs and platforms.
std::vector<std::pair<GeneralConfig, CostReport>> enumerate_configs(
    int filter_size, int channels, int filters, const MemModel& model,
    const EnumBounds& bounds = {});

}  // namespace convsim
