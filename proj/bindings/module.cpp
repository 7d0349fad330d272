// Python bindings for the main simulator operations.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "convsim/costmodel.hpp"
#include "convsim/kernel_general.hpp"
#include "convsim/kernel_special.hpp"
#include "convsim/tensor.hpp"

namespace py = pybind11;
using namespace convsim;

namespace {

Image image_from_array(const py::array_t<float, py::array::c_style |
                                                    py::array::forcecast>& a) {
  if (a.ndim() != 3) throw ConfigError("image array must be [C, Ny, Nx]");
  std::vector<float> data(a.data(), a.data() + a.size());
  return make_image(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
                    static_cast<int>(a.shape(2)), std::move(data));
}

FilterBank filters_from_array(
    const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 4) throw ConfigError("filter array must be [F, C, K, K]");
  if (a.shape(2) != a.shape(3)) throw ConfigError("filters must be square");
  std::vector<float> data(a.data(), a.data() + a.size());
  return make_filter_bank(static_cast<int>(a.shape(0)),
                          static_cast<int>(a.shape(1)),
                          static_cast<int>(a.shape(2)), std::move(data));
}

py::array_t<float> output_to_array(const OutputMap& out) {
  py::array_t<float> a({out.maps, out.height, out.width});
  std::copy(out.data.begin(), out.data.end(), a.mutable_data());
  return a;
}

py::dict metrics_to_dict(const Metrics& m) {
  py::dict d;
  d["gm_transactions"] = m.gm_transactions;
  d["gm_bytes"] = m.gm_bytes;
  d["gm_pixel_reads"] = m.gm_pixel_reads;
  d["sm_access_requests"] = m.sm_access_requests;
  d["sm_cycles"] = m.sm_cycles;
  d["sm_conflict_excess"] = m.sm_conflict_excess;
  d["cm_requests"] = m.cm_requests;
  d["cm_broadcast_hits"] = m.cm_broadcast_hits;
  d["registers_per_thread"] = m.registers_per_thread;
  d["sm_bytes_used"] = m.sm_bytes_used;
  return d;
}

}  // namespace

PYBIND11_MODULE(_convsim, m) {
  m.doc() = "Transaction-level GPU memory-hierarchy simulator with tiled "
            "convolution kernel emulations";

  py::class_<MemModel>(m, "MemModel")
      .def(py::init<>())
      .def_readwrite("bank_count", &MemModel::bank_count)
      .def_readwrite("bank_width_bytes", &MemModel::bank_width_bytes)
      .def_readwrite("elem_width_bytes", &MemModel::elem_width_bytes)
      .def_readwrite("warp_size", &MemModel::warp_size)
      .def_readwrite("gm_segment_bytes", &MemModel::gm_segment_bytes)
      .def_readwrite("sm_capacity_bytes", &MemModel::sm_capacity_bytes)
      .def_readwrite("cm_capacity_bytes", &MemModel::cm_capacity_bytes)
      .def("validate", &MemModel::validate);

  py::class_<SpecialConfig>(m, "SpecialConfig")
      .def(py::init<>())
      .def_readwrite("block_w", &SpecialConfig::block_w)
      .def_readwrite("block_h", &SpecialConfig::block_h)
      .def_readwrite("vec", &SpecialConfig::vec)
      .def_readwrite("prefetch", &SpecialConfig::prefetch);

  py::class_<GeneralConfig>(m, "GeneralConfig")
      .def(py::init<>())
      .def_readwrite("block_w", &GeneralConfig::block_w)
      .def_readwrite("block_h", &GeneralConfig::block_h)
      .def_readwrite("filters_per_tb", &GeneralConfig::filters_per_tb)
      .def_readwrite("pixels_per_thread", &GeneralConfig::pixels_per_thread)
      .def_readwrite("filters_per_thread", &GeneralConfig::filters_per_thread)
      .def_readwrite("channels_staged", &GeneralConfig::channels_staged)
      .def_readwrite("pad", &GeneralConfig::pad);

  m.def("bandwidth_factor", &bandwidth_factor);

  m.def("gen_tensor", [](const std::vector<uint32_t>& shape, uint64_t seed) {
    Tensor t = gen_tensor(shape, seed);
    std::vector<py::ssize_t> dims(t.dims.begin(), t.dims.end());
    py::array_t<float> a(dims);
    std::copy(t.data.begin(), t.data.end(), a.mutable_data());
    return a;
  });

  m.def("naive_convolve", [](const py::array_t<float>& image,
                             const py::array_t<float>& filters) {
    return output_to_array(naive_convolve(image_from_array(image),
                                          filters_from_array(filters)));
  });

  auto run_result = [](const RunResult& r) {
    return py::make_tuple(output_to_array(r.output),
                          metrics_to_dict(r.metrics));
  };

  m.def("run_special",
        [run_result](const py::array_t<float>& image,
                     const py::array_t<float>& filters,
                     const SpecialConfig& cfg, const MemModel& model) {
          return run_result(run_special(image_from_array(image),
                                        filters_from_array(filters), cfg,
                                        model));
        });

  m.def("run_special_unmatched",
        [run_result](const py::array_t<float>& image,
                     const py::array_t<float>& filters,
                     const SpecialConfig& cfg, const MemModel& model) {
          return run_result(run_special_unmatched(
              image_from_array(image), filters_from_array(filters), cfg,
              model));
        });

  m.def("run_general",
        [run_result](const py::array_t<float>& image,
                     const py::array_t<float>& filters,
                     const GeneralConfig& cfg, const MemModel& model) {
          return run_result(run_general(image_from_array(image),
                                        filters_from_array(filters), cfg,
                                        model));
        });

  m.def("validate_special_config",
        [](const SpecialConfig& cfg, int filter_size, int filters,
           const MemModel& model) {
          return validate_config(cfg, filter_size, filters, model);
        });

  m.def("validate_general_config",
        [](const GeneralConfig& cfg, int filter_size, int channels,
           int filters, const MemModel& model) {
          return validate_config(cfg, filter_size, channels, filters, model);
        });

  m.def("enumerate_configs", [](int filter_size, int channels, int filters,
                                const MemModel& model) {
    py::list out;
    for (const auto& [cfg, report] :
         enumerate_configs(filter_size, channels, filters, model)) {
      py::dict d;
      d["W"] = cfg.block_w;
      d["H"] = cfg.block_h;
      d["F_TB"] = cfg.filters_per_tb;
      d["W_T"] = cfg.pixels_per_thread;
      d["F_T"] = cfg.filters_per_thread;
      d["C_SH"] = cfg.channels_staged;
      d["pad"] = cfg.pad;
      d["sm_reduction_factor"] = report.sm_reduction_factor;
      d["gm_reduction_factor"] = report.gm_reduction_factor;
      out.append(d);
    }
    return out;
  });

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<CapacityError>(m, "CapacityError", PyExc_ValueError);
  py::register_exception<ModelError>(m, "ModelError", PyExc_ValueError);
}
