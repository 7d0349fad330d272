// Command-line front end for the memory-hierarchy simulator: run the
// reference convolution or the kernel emulations on tensor files or
// generated data, sweep parameter grids, and validate tiling configurations.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "convsim/costmodel.hpp"
#include "convsim/kernel_general.hpp"
#include "convsim/kernel_special.hpp"
#include "convsim/sweep.hpp"
#include "convsim/tensor.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalidConfig = 1;  // cmd_validate violation report
constexpr int kExitUsage = 2;          // usage / shape / format errors
constexpr int kExitCapacity = 3;       // SM/CM capacity exceeded

struct GenSpec {
  int image_size = 0, channels = 0, filter_size = 0, filter_count = 0;
};

GenSpec parse_gen(const std::string& s) {
  GenSpec g;
  if (std::sscanf(s.c_str(), "%d,%d,%d,%d", &g.image_size, &g.channels,
                  &g.filter_size, &g.filter_count) != 4 ||
      g.image_size < 1 || g.channels < 1 || g.filter_size < 1 ||
      g.filter_count < 1)
    throw convsim::ConfigError("--gen expects N,C,K,F with positive values");
  return g;
}

int sweep_threads_from_env() {
  const char* env = std::getenv("CONV_MEMSIM_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1)
    throw convsim::ConfigError("CONV_MEMSIM_THREADS must be a positive integer");
  return static_cast<int>(v);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw convsim::FormatError("cannot open for writing: " + path);
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace convsim;

  CLI::App app{"Transaction-level simulator of a GPU memory hierarchy with "
               "tiled convolution kernel emulations"};
  app.require_subcommand(1);

  // ---- gen ----
  auto* gen_cmd = app.add_subcommand("gen", "Write a seeded random tensor");
  std::vector<uint32_t> gen_shape;
  uint64_t gen_seed = 0;
  std::string gen_out;
  gen_cmd->add_option("--shape", gen_shape, "dimensions")->required();
  gen_cmd->add_option("--seed", gen_seed, "generator seed");
  gen_cmd->add_option("--out", gen_out, "output tensor file")->required();

  // ---- oracle ----
  auto* oracle_cmd =
      app.add_subcommand("oracle", "Reference convolution on tensor files");
  std::string oracle_image, oracle_filters, oracle_out;
  oracle_cmd->add_option("--image", oracle_image)->required();
  oracle_cmd->add_option("--filters", oracle_filters)->required();
  oracle_cmd->add_option("--out", oracle_out)->required();

  // ---- run ----
  auto* run_cmd = app.add_subcommand("run", "Simulate one kernel run");
  std::string run_kernel, run_image, run_filters, run_gen, run_metrics,
      run_out;
  uint64_t run_seed = 1;
  bool run_unmatched = false;
  int bank_width = 8, elem_width = 4;
  SpecialConfig scfg;
  GeneralConfig gcfg;
  run_cmd->add_option("--kernel", run_kernel, "special | general")
      ->required()
      ->check(CLI::IsMember({"special", "general"}));
  run_cmd->add_option("--image", run_image, "input image tensor file");
  run_cmd->add_option("--filters", run_filters, "filter tensor file");
  run_cmd->add_option("--gen", run_gen, "generate inputs: N,C,K,F");
  run_cmd->add_option("--seed", run_seed, "generator seed");
  run_cmd->add_option("--W", scfg.block_w, "block width (output pixels)");
  run_cmd->add_option("--H", scfg.block_h, "block height (output rows)");
  run_cmd->add_option("--n", scfg.vec, "elements per lane unit");
  run_cmd->add_option("--F_TB", gcfg.filters_per_tb, "filters per TB");
  run_cmd->add_option("--W_T", gcfg.pixels_per_thread, "pixels per thread");
  run_cmd->add_option("--F_T", gcfg.filters_per_thread, "filters per thread");
  run_cmd->add_option("--C_SH", gcfg.channels_staged, "channels staged in SM");
  run_cmd->add_option("--pad", gcfg.pad, "filter-tile row padding");
  run_cmd->add_option("--bank-width", bank_width, "SM bank width in bytes");
  run_cmd->add_option("--elem-width", elem_width, "lane data width in bytes");
  run_cmd->add_flag("--unmatched", run_unmatched,
                    "scalar per-lane units (special kernel only)");
  run_cmd->add_option("--metrics", run_metrics, "metrics CSV output path");
  run_cmd->add_option("--out", run_out, "output tensor file");

  // ---- sweep ----
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter grid");
  std::string sweep_spec_path, sweep_out;
  sweep_cmd->add_option("--spec", sweep_spec_path, "key=value sweep spec")
      ->required();
  sweep_cmd->add_option("--out", sweep_out, "CSV output path override");

  // ---- validate ----
  auto* val_cmd = app.add_subcommand("validate", "Check a configuration");
  std::string val_kernel = "general";
  int val_k = 3, val_c = 1, val_f = 1;
  SpecialConfig val_scfg;
  GeneralConfig val_gcfg;
  int val_bank_width = 8, val_elem_width = 4;
  val_cmd->add_option("--kernel", val_kernel)
      ->check(CLI::IsMember({"special", "general"}));
  val_cmd->add_option("--K", val_k, "filter size");
  val_cmd->add_option("--C", val_c, "channels");
  val_cmd->add_option("--F", val_f, "filter count");
  val_cmd->add_option("--W", val_scfg.block_w);
  val_cmd->add_option("--H", val_scfg.block_h);
  val_cmd->add_option("--n", val_scfg.vec);
  val_cmd->add_option("--F_TB", val_gcfg.filters_per_tb);
  val_cmd->add_option("--W_T", val_gcfg.pixels_per_thread);
  val_cmd->add_option("--F_T", val_gcfg.filters_per_thread);
  val_cmd->add_option("--C_SH", val_gcfg.channels_staged);
  val_cmd->add_option("--pad", val_gcfg.pad);
  val_cmd->add_option("--bank-width", val_bank_width);
  val_cmd->add_option("--elem-width", val_elem_width);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) {
      write_tensor(gen_out, gen_tensor(gen_shape, gen_seed));
      return kExitOk;
    }

    if (oracle_cmd->parsed()) {
      Image image = image_from_tensor(read_tensor(oracle_image));
      FilterBank filters = filters_from_tensor(read_tensor(oracle_filters));
      write_tensor(oracle_out, to_tensor(naive_convolve(image, filters)));
      return kExitOk;
    }

    if (run_cmd->parsed()) {
      MemModel model;
      model.bank_width_bytes = bank_width;
      model.elem_width_bytes = elem_width;
      model.validate();

      Image image;
      FilterBank filters;
      if (!run_gen.empty()) {
        GenSpec g = parse_gen(run_gen);
        image = gen_image(g.channels, g.image_size, g.image_size, run_seed);
        filters = gen_filters(g.filter_count, g.channels, g.filter_size,
                              run_seed + 1);
      } else {
        if (run_image.empty() || run_filters.empty())
          throw ConfigError("provide --image and --filters, or --gen N,C,K,F");
        image = image_from_tensor(read_tensor(run_image));
        filters = filters_from_tensor(read_tensor(run_filters));
      }

      RunResult result;
      if (run_kernel == "special") {
        if (run_cmd->count("--n") == 0) scfg.vec = bandwidth_factor(model);
        result = run_unmatched
                     ? run_special_unmatched(image, filters, scfg, model)
                     : run_special(image, filters, scfg, model);
      } else {
        if (run_unmatched)
          throw ConfigError("--unmatched applies to the special kernel only");
        if (run_cmd->count("--W") > 0) gcfg.block_w = scfg.block_w;
        if (run_cmd->count("--H") > 0) gcfg.block_h = scfg.block_h;
        result = run_general(image, filters, gcfg, model);
      }

      if (!run_out.empty())
        write_tensor(run_out, to_tensor(result.output));
      if (!run_metrics.empty())
        write_text(run_metrics, Metrics::csv_header() + "\n" +
                                    result.metrics.csv_row() + "\n");
      std::cout << "kernel=" << run_kernel
                << " gm_tx=" << result.metrics.gm_transactions
                << " sm_cycles=" << result.metrics.sm_cycles
                << " conflicts=" << result.metrics.sm_conflict_excess << "\n";
      return kExitOk;
    }

    if (sweep_cmd->parsed()) {
      SweepSpec spec = parse_sweep_spec(sweep_spec_path);
      std::string csv = run_sweep(spec, sweep_threads_from_env());
      std::string out = !sweep_out.empty() ? sweep_out : spec.out_path;
      if (out.empty())
        std::cout << csv;
      else
        write_text(out, csv);
      return kExitOk;
    }

    if (val_cmd->parsed()) {
      MemModel model;
      model.bank_width_bytes = val_bank_width;
      model.elem_width_bytes = val_elem_width;
      model.validate();
      std::vector<std::string> violations;
      if (val_kernel == "special") {
        if (val_cmd->count("--n") == 0) val_scfg.vec = bandwidth_factor(model);
        violations = validate_config(val_scfg, val_k, val_f, model);
      } else {
        if (val_cmd->count("--W") > 0) val_gcfg.block_w = val_scfg.block_w;
        if (val_cmd->count("--H") > 0) val_gcfg.block_h = val_scfg.block_h;
        violations = validate_config(val_gcfg, val_k, val_c, val_f, model);
      }
      if (violations.empty()) {
        std::cout << "ok\n";
        return kExitOk;
      }
      for (const auto& v : violations) std::cout << v << "\n";
      return kExitInvalidConfig;
    }
  } catch (const CapacityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCapacity;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
