#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "convsim/errors.hpp"

namespace convsim {

enum class MemSpace { GM, SM, CM };

// Parameters of the simulated memory hierarchy. Defaults follow Kepler:
// 32 banks of 8 bytes, 32-lane warps, 128-byte GM segments, 48 KiB SM,
// 64 KiB CM.
struct MemModel {
  int bank_count = 32;
  int bank_width_bytes = 8;   // W_SMB
  int elem_width_bytes = 4;   // W_CD
  int warp_size = 32;
  int gm_segment_bytes = 128;
  int sm_capacity_bytes = 49152;
  int cm_capacity_bytes = 65536;

  // Throws ModelError unless W_SMB = n * W_CD for a positive integer n,
  // bank width is 4 or 8, and the GM segment size is a power of two.
  void validate() const;
};

// n = W_SMB / W_CD, the SM bandwidth multiplier attainable by vectorizing
// each lane to bank-wide units.
int bandwidth_factor(const MemModel& model);

struct LaneAccess {
  uint64_t addr = 0;
  uint32_t width = 0;  // bytes
};

// One warp-wide request. Absent lanes are inactive.
struct WarpAccess {
  MemSpace space = MemSpace::SM;
  std::vector<std::optional<LaneAccess>> lanes;
};

// Serialization cost of one SM warp access: lanes map to banks by
// (addr / W_SMB) mod bank_count; distinct addresses on one bank serialize,
// identical addresses broadcast. Result is the max per-bank distinct count
// (>= 1 for a non-empty access).
int sm_cycles(const MemModel& model, const WarpAccess& access);

// Number of distinct gm_segment_bytes-aligned segments touched by the byte
// ranges [addr, addr+width) of all active lanes.
int gm_transactions(const MemModel& model, const WarpAccess& access);

struct CmResult {
  int requests = 0;
  bool broadcast_hit = false;
};

// CM serialization count = distinct addresses; broadcast iff all active
// lanes carry one identical address.
CmResult cm_request(const MemModel& model, const WarpAccess& access);

// Transaction counters accumulated over a simulated kernel run.
struct Metrics {
  uint64_t gm_transactions = 0;
  uint64_t gm_bytes = 0;
  uint64_t gm_pixel_reads = 0;  // input-image elements fetched from GM
  uint64_t sm_access_requests = 0;
  uint64_t sm_cycles = 0;
  uint64_t sm_conflict_excess = 0;  // sm_cycles - sm_access_requests
  uint64_t cm_requests = 0;
  uint64_t cm_broadcast_hits = 0;
  uint64_t registers_per_thread = 0;
  uint64_t sm_bytes_used = 0;

  void merge(const Metrics& other);

  static std::string csv_header();
  std::string csv_row() const;
};

}  // namespace convsim
