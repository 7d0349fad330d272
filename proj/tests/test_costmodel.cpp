#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "convsim/costmodel.hpp"

using namespace convsim;

namespace {

MemModel kepler() { return MemModel{}; }

}  // namespace

TEST_CASE("single-channel predictions") {
  SpecialConfig cfg{8, 4, 2};
  // 18x18 image, K=3: eight full 8x4 blocks, 60 reads each.
  CostReport r = predict_special(cfg, 3, 2, 18, 18, kepler());
  CHECK(r.gm_reads_pred == 8 * 60);
  CHECK(r.registers_pred == 3 * (3 + 2 - 1) + 2);
  CHECK(r.reuse_bound == 3 * 3 * 2);
  CHECK(r.bandwidth_factor == 2);

  // K=1: no halo, reads equal the output element count.
  CostReport one = predict_special(cfg, 1, 1, 16, 16, kepler());
  CHECK(one.gm_reads_pred == 256);
  CHECK(one.gm_reduction_factor == 1.0);
}

TEST_CASE("multi-channel predictions") {
  GeneralConfig cfg{32, 4, 64, 16, 4, 2};
  CostReport r = predict_general(cfg, 3, 4, 64, 34, 34, kepler());
  CHECK(r.sm_reduction_factor == doctest::Approx(18.0 / 48.0));
  CHECK(r.sm_pixel_loads_pred == (16 + 3 - 1) * 3);
  CHECK(r.registers_pred == 4 * 16 + 18 + 4);
  // shImg 2*6*34 + shFlt 2*9*(64+2), four bytes each.
  CHECK(r.sm_bytes_pred == (2 * 6 * 34 + 2 * 9 * 66) * 4);
  CHECK(r.sm_bytes_pred == 6384);

  GeneralConfig tall = cfg;
  tall.block_h = 64;
  CostReport t = predict_general(tall, 3, 4, 64, 130, 130, kepler());
  CHECK(t.gm_reduction_factor == doctest::Approx(66.0 / 192.0));
  CHECK(std::abs(t.gm_reduction_factor - 1.0 / 3.0) < 0.05 / 3.0);
}

TEST_CASE("reduction factors are monotone in the tile extents") {
  MemModel m = kepler();
  double prev_sm = 2.0, prev_gm = 2.0;
  for (int wt : {2, 4, 8, 16, 32}) {
    GeneralConfig cfg{32, 4, 64, wt, 4, 2};
    double f = predict_general(cfg, 3, 4, 64, 34, 34, m).sm_reduction_factor;
    CHECK(f < prev_sm);
    prev_sm = f;
  }
  for (int h : {2, 4, 8, 16, 32, 64}) {
    GeneralConfig cfg{32, h, 64, 16, 4, 2};
    double f = predict_general(cfg, 3, 4, 64, h + 2, 34, m).gm_reduction_factor;
    CHECK(f < prev_gm);
    prev_gm = f;
  }
}

TEST_CASE("reference tilings validate cleanly") {
  MemModel m = kepler();
  CHECK(validate_config(GeneralConfig{32, 4, 64, 16, 4, 2}, 3, 16, 64, m)
            .empty());
  CHECK(validate_config(GeneralConfig{32, 8, 32, 8, 8, 1}, 5, 16, 32, m)
            .empty());
  CHECK(validate_config(GeneralConfig{64, 4, 32, 8, 8, 1}, 7, 16, 32, m)
            .empty());
}

TEST_CASE("violations are reported, all of them") {
  MemModel m = kepler();
  GeneralConfig odd{32, 4, 64, 16, 5, 2};  // 64 % 5 != 0
  auto v = validate_config(odd, 3, 16, 64, m);
  REQUIRE(!v.empty());
  CHECK(v[0].find("T_X") != std::string::npos);

  GeneralConfig fat{64, 8, 64, 16, 4, 8};
  auto cap = validate_config(fat, 7, 16, 64, m);
  bool saw_sm = false;
  for (const auto& s : cap)
    if (s.find("capacity") != std::string::npos) saw_sm = true;
  CHECK(saw_sm);

  GeneralConfig multi{31, 4, 64, 16, 5, 2};  // two independent violations
  CHECK(validate_config(multi, 3, 16, 64, m).size() >= 2);

  SpecialConfig sp{9, 4, 2};
  auto spv = validate_config(sp, 3, 16, m);
  REQUIRE(!spv.empty());
  CHECK(spv[0].find("divisible") != std::string::npos);
  CHECK(validate_config(SpecialConfig{32, 8, 2}, 3, 16, m).empty());
}

TEST_CASE("validation failures throw the matching error class") {
  MemModel m = kepler();
  CHECK_THROWS_AS(
      throw_if_invalid(validate_config(GeneralConfig{32, 4, 64, 16, 5, 2}, 3,
                                       16, 64, m)),
      ConfigError);
  CHECK_THROWS_AS(
      throw_if_invalid(validate_config(GeneralConfig{64, 8, 64, 16, 4, 8}, 7,
                                       16, 64, m)),
      CapacityError);
  throw_if_invalid({});  // empty list is fine
}

TEST_CASE("enumeration finds the reference tiling and stays valid") {
  MemModel m = kepler();
  auto ranked = enumerate_configs(3, 64, 64, m);
  REQUIRE(!ranked.empty());
  bool found = false;
  for (const auto& [cfg, report] : ranked) {
    CHECK(validate_config(cfg, 3, 64, 64, m).empty());
    if (cfg.block_w == 32 && cfg.block_h == 4 && cfg.filters_per_tb == 64 &&
        cfg.pixels_per_thread == 16 && cfg.filters_per_thread == 4 &&
        cfg.channels_staged == 2)
      found = true;
  }
  CHECK(found);
}

TEST_CASE("enumeration is deterministic") {
  MemModel m = kepler();
  auto a = enumerate_configs(5, 16, 32, m);
  auto b = enumerate_configs(5, 16, 32, m);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first.block_w == b[i].first.block_w);
    CHECK(a[i].first.block_h == b[i].first.block_h);
    CHECK(a[i].first.filters_per_tb == b[i].first.filters_per_tb);
    CHECK(a[i].first.pixels_per_thread == b[i].first.pixels_per_thread);
    CHECK(a[i].first.filters_per_thread == b[i].first.filters_per_thread);
    CHECK(a[i].first.channels_staged == b[i].first.channels_staged);
  }
}

TEST_CASE("infeasible search space yields an empty list") {
  MemModel m = kepler();
  EnumBounds bounds;
  bounds.channels_staged = {8};  // more than the 4 channels available
  CHECK(enumerate_configs(3, 4, 64, m, bounds).empty());
}

TEST_CASE("cost report CSV layout") {
  CHECK(CostReport::csv_header() ==
        "gm_reads_pred,sm_pixel_loads_pred,sm_reduction_factor,"
        "gm_reduction_factor,registers_pred,sm_bytes_pred,bandwidth_factor,"
        "reuse_bound");
  CostReport r;
  r.gm_reads_pred = 480;
  r.sm_pixel_loads_pred = 54;
  r.sm_reduction_factor = 0.375;
  r.gm_reduction_factor = 0.5;
  r.registers_pred = 86;
  r.sm_bytes_pred = 6384;
  r.bandwidth_factor = 2;
  r.reuse_bound = 18;
  CHECK(r.csv_row() == "480,54,0.375,0.5,86,6384,2,18");
}
