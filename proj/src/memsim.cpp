#include "convsim/memsim.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace convsim {

void MemModel::validate() const {
  if (bank_count < 1 || warp_size < 1)
    throw ModelError("bank count and warp size must be >= 1");
  if (bank_width_bytes != 4 && bank_width_bytes != 8)
    throw ModelError("bank width must be 4 or 8 bytes");
  if (elem_width_bytes < 1 || bank_width_bytes % elem_width_bytes != 0)
    throw ModelError("bank width must be an integer multiple of element width");
  if (gm_segment_bytes < 1 ||
      (gm_segment_bytes & (gm_segment_bytes - 1)) != 0)
    throw ModelError("GM segment size must be a power of two");
}

int bandwidth_factor(const MemModel& model) {
  if (model.elem_width_bytes < 1 ||
      model.bank_width_bytes % model.elem_width_bytes != 0)
    throw ModelError("W_SMB not divisible by W_CD");
  return model.bank_width_bytes / model.elem_width_bytes;
}

int sm_cycles(const MemModel& model, const WarpAccess& access) {
  if (access.lanes.size() > static_cast<size_t>(model.warp_size))
    throw ModelError("more lanes than warp size");
  // bank -> distinct addresses routed to it
  std::map<int, std::set<uint64_t>> banks;
  for (const auto& lane : access.lanes) {
    if (!lane) continue;
    if (lane->width == 0 ||
        lane->width > static_cast<uint32_t>(model.bank_width_bytes))
      throw ModelError("SM access width must be in (0, W_SMB]");
    int bank = static_cast<int>((lane->addr / model.bank_width_bytes) %
                                model.bank_count);
    banks[bank].insert(lane->addr);
  }
  int cycles = 1;
  for (const auto& [bank, addrs] : banks)
    cycles = std::max(cycles, static_cast<int>(addrs.size()));
  return cycles;
}

int gm_transactions(const MemModel& model, const WarpAccess& access) {
  std::set<uint64_t> segments;
  for (const auto& lane : access.lanes) {
    if (!lane || lane->width == 0) continue;
    uint64_t first = lane->addr / model.gm_segment_bytes;
    uint64_t last = (lane->addr + lane->width - 1) / model.gm_segment_bytes;
    for (uint64_t s = first; s <= last; ++s) segments.insert(s);
  }
  return static_cast<int>(segments.size());
}

CmResult cm_request(const MemModel& model, const WarpAccess& access) {
  (void)model;
  std::set<uint64_t> addrs;
  for (const auto& lane : access.lanes)
    if (lane) addrs.insert(lane->addr);
  CmResult r;
  r.requests = std::max<int>(1, static_cast<int>(addrs.size()));
  r.broadcast_hit = addrs.size() <= 1;
  return r;
}

void Metrics::merge(const Metrics& other) {
  gm_transactions += other.gm_transactions;
  gm_bytes += other.gm_bytes;
  gm_pixel_reads += other.gm_pixel_reads;
  sm_access_requests += other.sm_access_requests;
  sm_cycles += other.sm_cycles;
  sm_conflict_excess += other.sm_conflict_excess;
  cm_requests += other.cm_requests;
  cm_broadcast_hits += other.cm_broadcast_hits;
  registers_per_thread = std::max(registers_per_thread,
                                  other.registers_per_thread);
  sm_bytes_used = std::max(sm_bytes_used, other.sm_bytes_used);
}

std::string Metrics::csv_header() {
  return "gm_transactions,gm_bytes,gm_pixel_reads,sm_access_requests,"
         "sm_cycles,sm_conflict_excess,cm_requests,cm_broadcast_hits,"
         "registers_per_thread,sm_bytes_used";
}

std::string Metrics::csv_row() const {
  std::ostringstream os;
  os << gm_transactions << ',' << gm_bytes << ',' << gm_pixel_reads << ','
     << sm_access_requests << ',' << sm_cycles << ',' << sm_conflict_excess
     << ',' << cm_requests << ',' << cm_broadcast_hits << ','
     << registers_per_thread << ',' << sm_bytes_used;
  return os.str();
}

}  // namespace convsim
