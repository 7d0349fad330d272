#include "convsim/sweep.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace convsim {

namespace {

std::vector<int> parse_int_list(const std::string& value, int line_no) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t b = item.find_first_not_of(" \t");
    size_t e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    item = item.substr(b, e - b + 1);
    try {
      size_t pos = 0;
      int v = std::stoi(item, &pos);
      if (pos != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw FormatError("line " + std::to_string(line_no) +
                        ": bad integer '" + item + "'");
    }
  }
  return out;
}

int parse_int(const std::string& value, int line_no) {
  auto v = parse_int_list(value, line_no);
  if (v.size() != 1)
    throw FormatError("line " + std::to_string(line_no) +
                      ": expected a single integer");
  return v[0];
}

struct RowTask {
  std::string kernel;  // special | general
  int image_size, filter_size, channels, filter_count;
};

std::string bool_str(bool b) { return b ? "true" : "false"; }

std::string fmt_double(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string run_row(const SweepSpec& spec, const RowTask& task,
                    const MemModel& model) {
  const int n = bandwidth_factor(model);
  const int k = task.filter_size;
  std::ostringstream row;
  row << task.kernel << ',' << task.image_size << ',' << k << ','
      << task.channels << ',' << task.filter_count << ',';

  Image image = gen_image(task.channels, task.image_size, task.image_size,
                          spec.seed);
  FilterBank filters = gen_filters(task.filter_count, task.channels, k,
                                   spec.seed + 1);

  if (task.kernel == "special") {
    SpecialConfig cfg = spec.special;
    cfg.vec = n;
    RunResult r = run_special(image, filters, cfg, model);
    CostReport pred = predict_special(cfg, k, task.filter_count,
                                      task.image_size, task.image_size, model);
    bool agree_gm =
        r.metrics.gm_pixel_reads == static_cast<uint64_t>(pred.gm_reads_pred);
    bool agree_sm = true;
    {
      // Ragged tail threads load shorter windows; only blocks whose width
      // divides n have the exact per-thread count.
      auto blocks = plan_blocks(task.image_size - k + 1,
                                task.image_size - k + 1, k, cfg);
      for (size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].eff_w % n != 0) continue;
        uint64_t expect = static_cast<uint64_t>(n + k - 1) *
                          (blocks[i].eff_w / n) * blocks[i].eff_h;
        if (r.blocks[i].sm_row_load_elems != expect) agree_sm = false;
      }
    }
    bool agree_regs = r.metrics.registers_per_thread ==
                      static_cast<uint64_t>(pred.registers_pred);
    row << cfg.block_w << ',' << cfg.block_h << ',' << n << ",,,,,,"
        << r.metrics.csv_row() << ',' << pred.csv_row() << ','
        << bool_str(agree_gm) << ',' << bool_str(agree_sm) << ','
        << bool_str(agree_regs);
    return row.str();
  }

  GeneralConfig cfg = spec.general;
  if (spec.config_source == "enumerate-best") {
    auto ranked = enumerate_configs(k, task.channels, task.filter_count,
                                    model);
    if (ranked.empty())
      throw ConfigError("no valid general configuration in the search space");
    cfg = ranked.front().first;
  }
  cfg.pad = resolved_pad(cfg, model);
  RunResult r = run_general(image, filters, cfg, model);
  CostReport pred = predict_general(cfg, k, task.channels, task.filter_count,
                                    task.image_size, task.image_size, model);
  bool agree_gm =
      r.metrics.gm_pixel_reads == static_cast<uint64_t>(pred.gm_reads_pred);
  bool agree_sm = true;
  {
    LayoutPlan plan = plan_general_layout(task.image_size - k + 1,
                                          task.image_size - k + 1,
                                          task.filter_count, cfg);
    uint64_t threads = static_cast<uint64_t>(thread_grid_x(cfg)) *
                       thread_grid_y(cfg);
    for (size_t i = 0; i < plan.tbs.size(); ++i) {
      const TbAssignment& tb = plan.tbs[i];
      if (tb.block.eff_w != cfg.block_w || tb.block.eff_h != cfg.block_h ||
          tb.filter_count != cfg.filters_per_tb)
        continue;
      uint64_t expect = static_cast<uint64_t>(cfg.pixels_per_thread + k - 1) *
                        k * threads * task.channels;
      if (r.blocks[i].sm_img_elems_read != expect) agree_sm = false;
    }
  }
  bool agree_regs = r.metrics.registers_per_thread ==
                    static_cast<uint64_t>(pred.registers_pred);
  row << cfg.block_w << ',' << cfg.block_h << ',' << n << ','
      << cfg.filters_per_tb << ',' << cfg.pixels_per_thread << ','
      << cfg.filters_per_thread << ',' << cfg.channels_staged << ','
      << cfg.pad << ',' << r.metrics.csv_row() << ',' << pred.csv_row() << ','
      << bool_str(agree_gm) << ',' << bool_str(agree_sm) << ','
      << bool_str(agree_regs);
  return row.str();
}

}  // namespace

SweepSpec parse_sweep_spec(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open sweep spec: " + path);
  SweepSpec spec;
  std::string line;
  int line_no = 0;
  bool n_set = false;
  while (std::getline(f, line)) {
    ++line_no;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("line " + std::to_string(line_no) +
                        ": expected key = value");
    auto trim = [](std::string s) {
      size_t b2 = s.find_first_not_of(" \t\r");
      size_t e2 = s.find_last_not_of(" \t\r");
      return b2 == std::string::npos ? std::string()
                                     : s.substr(b2, e2 - b2 + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "kernel") {
      if (value != "special" && value != "general" && value != "both")
        throw FormatError("line " + std::to_string(line_no) +
                          ": kernel must be special, general, or both");
      spec.kernel = value;
    } else if (key == "N") {
      spec.image_sizes = parse_int_list(value, line_no);
    } else if (key == "K") {
      spec.filter_sizes = parse_int_list(value, line_no);
    } else if (key == "C") {
      spec.channel_counts = parse_int_list(value, line_no);
    } else if (key == "F") {
      spec.filter_counts = parse_int_list(value, line_no);
    } else if (key == "config") {
      if (value != "explicit" && value != "enumerate-best")
        throw FormatError("line " + std::to_string(line_no) +
                          ": config must be explicit or enumerate-best");
      spec.config_source = value;
    } else if (key == "W") {
      spec.special.block_w = spec.general.block_w = parse_int(value, line_no);
    } else if (key == "H") {
      spec.special.block_h = spec.general.block_h = parse_int(value, line_no);
    } else if (key == "n") {
      spec.special.vec = parse_int(value, line_no);
      n_set = true;
    } else if (key == "F_TB") {
      spec.general.filters_per_tb = parse_int(value, line_no);
    } else if (key == "W_T") {
      spec.general.pixels_per_thread = parse_int(value, line_no);
    } else if (key == "F_T") {
      spec.general.filters_per_thread = parse_int(value, line_no);
    } else if (key == "C_SH") {
      spec.general.channels_staged = parse_int(value, line_no);
    } else if (key == "pad") {
      spec.general.pad = parse_int(value, line_no);
    } else if (key == "bank_width") {
      spec.bank_width = parse_int(value, line_no);
    } else if (key == "elem_width") {
      spec.elem_width = parse_int(value, line_no);
    } else if (key == "seed") {
      spec.seed = static_cast<uint64_t>(parse_int(value, line_no));
    } else if (key == "out") {
      spec.out_path = value;
    } else {
      throw FormatError("line " + std::to_string(line_no) +
                        ": unknown key '" + key + "'");
    }
  }
  if (spec.image_sizes.empty())
    throw FormatError("sweep spec: N list is empty");
  if (spec.filter_sizes.empty())
    throw FormatError("sweep spec: K list is empty");
  if (spec.filter_counts.empty())
    throw FormatError("sweep spec: F list is empty");
  if (spec.kernel != "special" && spec.channel_counts.empty())
    throw FormatError("sweep spec: C list is empty");
  if (!n_set) spec.special.vec = spec.bank_width / std::max(1, spec.elem_width);
  return spec;
}

std::string sweep_csv_header() {
  return "kernel,N,K,C,F,W,H,n,F_TB,W_T,F_T,C_SH,pad," +
         Metrics::csv_header() + "," + CostReport::csv_header() +
         ",agree_gm_reads,agree_sm_loads,agree_registers";
}

std::string run_sweep(const SweepSpec& spec, int threads) {
  MemModel model;
  model.bank_width_bytes = spec.bank_width;
  model.elem_width_bytes = spec.elem_width;
  model.validate();

  std::vector<RowTask> tasks;
  auto add_kernel = [&](const std::string& kernel) {
    const std::vector<int> channels =
        kernel == "special" ? std::vector<int>{1} : spec.channel_counts;
    for (int n : spec.image_sizes)
      for (int k : spec.filter_sizes)
        for (int c : channels)
          for (int f : spec.filter_counts) {
            if (n < k) continue;  // no valid output domain
            tasks.push_back(RowTask{kernel, n, k, c, f});
          }
  };
  if (spec.kernel == "special" || spec.kernel == "both") add_kernel("special");
  if (spec.kernel == "general" || spec.kernel == "both") add_kernel("general");

  std::vector<std::string> rows(tasks.size());
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        rows[i] = run_row(spec, tasks[i], model);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  const int nthreads = std::max(1, threads);
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  std::string csv = sweep_csv_header() + "\n";
  for (const auto& r : rows) {
    csv += r;
    csv += '\n';
  }
  return csv;
}

}  // namespace convsim
