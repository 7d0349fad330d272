#pragma once

// Internal helper shared by the two kernel emulations: accumulates Metrics
// and per-TB BlockStats from warp-granularity accesses, splitting lane lists
// that exceed the warp size into consecutive warp chunks.

#include <optional>
#include <unordered_set>
#include <vector>

#include "convsim/kernel_special.hpp"
#include "convsim/memsim.hpp"

namespace convsim::detail {

using LaneList = std::vector<std::optional<LaneAccess>>;

inline uint64_t align_up(uint64_t v, uint64_t a) { return (v + a - 1) / a * a; }

class TbSim {
 public:
  TbSim(const MemModel& model, Metrics& metrics, BlockStats& stats)
      : model_(model), metrics_(metrics), stats_(stats) {}

  void sm_access(const LaneList& lanes) {
    for_each_warp(lanes, [&](const WarpAccess& w) {
      int cycles = sm_cycles(model_, w);
      metrics_.sm_access_requests += 1;
      metrics_.sm_cycles += static_cast<uint64_t>(cycles);
      metrics_.sm_conflict_excess += static_cast<uint64_t>(cycles - 1);
    });
  }

  void gm_access(const LaneList& lanes, bool is_write = false) {
    for_each_warp(lanes, [&](const WarpAccess& w) {
      WarpAccess g = w;
      g.space = MemSpace::GM;
      int tx = gm_transactions(model_, g);
      metrics_.gm_transactions += static_cast<uint64_t>(tx);
      if (is_write) stats_.gm_write_transactions += static_cast<uint64_t>(tx);
      for (const auto& lane : g.lanes)
        if (lane) metrics_.gm_bytes += lane->width;
    });
  }

  void cm_access(const LaneList& lanes) {
    for_each_warp(lanes, [&](const WarpAccess& w) {
      WarpAccess c = w;
      c.space = MemSpace::CM;
      CmResult r = cm_request(model_, c);
      metrics_.cm_requests += static_cast<uint64_t>(r.requests);
      if (r.broadcast_hit) metrics_.cm_broadcast_hits += 1;
    });
  }

  // Element-level bookkeeping for the GM-optimality claims.
  void note_input_read(uint64_t element_id) {
    metrics_.gm_pixel_reads += 1;
    stats_.gm_input_reads += 1;
    if (!input_seen_.insert(element_id).second)
      stats_.gm_duplicate_input_reads += 1;
  }

  void note_filter_read(uint64_t element_id) {
    stats_.gm_filter_reads += 1;
    if (!filter_seen_.insert(element_id).second)
      stats_.gm_duplicate_filter_reads += 1;
  }

 private:
  template <typename Fn>
  void for_each_warp(const LaneList& lanes, Fn&& fn) {
    const size_t warp = static_cast<size_t>(model_.warp_size);
    for (size_t base = 0; base < lanes.size(); base += warp) {
      size_t end = std::min(lanes.size(), base + warp);
      bool any = false;
      for (size_t i = base; i < end; ++i)
        if (lanes[i]) any = true;
      if (!any) continue;
      WarpAccess w;
      w.lanes.assign(lanes.begin() + base, lanes.begin() + end);
      fn(w);
    }
    if (lanes.empty()) return;
  }

  const MemModel& model_;
  Metrics& metrics_;
  BlockStats& stats_;
  std::unordered_set<uint64_t> input_seen_;
  std::unordered_set<uint64_t> filter_seen_;
};

}  // namespace convsim::detail
