#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "convsim/errors.hpp"

namespace convsim {

// Generic dense row-major float tensor, used for file I/O and data generation.
struct Tensor {
  std::vector<uint32_t> dims;
  std::vector<float> data;

  size_t element_count() const {
    size_t n = 1;
    for (uint32_t d : dims) n *= d;
    return dims.empty() ? 0 : n;
  }
};

// Input image: C channels of N_y x N_x pixels, indexed [c][y][x].
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  float at(int c, int y, int x) const {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
};

// Filter bank: F filters of C channels, each K x K, indexed [f][c][ky][kx].
struct FilterBank {
  int filters = 0;
  int channels = 0;
  int size = 0;  // K, square
  std::vector<float> data;

  float at(int f, int c, int ky, int kx) const {
    size_t k = size;
    return data[((static_cast<size_t>(f) * channels + c) * k + ky) * k + kx];
  }
};

// Output feature maps, valid-mode: O = N - K + 1, indexed [f][y][x].
struct OutputMap {
  int maps = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  float at(int f, int y, int x) const {
    return data[(static_cast<size_t>(f) * height + y) * width + x];
  }
  float& at(int f, int y, int x) {
    return data[(static_cast<size_t>(f) * height + y) * width + x];
  }
};

Image make_image(int channels, int height, int width, std::vector<float> data);
FilterBank make_filter_bank(int filters, int channels, int size,
                            std::vector<float> data);

// Reference convolution: cross-correlation, valid mode, stride 1.
// Accumulation order is fixed (channel outer, ky, kx inner) so the kernel
// emulations can be compared against it with a tight tolerance.
OutputMap naive_convolve(const Image& image, const FilterBank& filters);

// Deterministic generator: 64-bit LCG, values in [0,1).
Tensor gen_tensor(const std::vector<uint32_t>& shape, uint64_t seed);

Image gen_image(int channels, int height, int width, uint64_t seed);
FilterBank gen_filters(int filters, int channels, int size, uint64_t seed);

// Binary tensor file: "CTEN" magic, version 0x01, u32 rank, u32 dims,
// then row-major 32-bit IEEE-754 payload. Everything little-endian.
Tensor read_tensor(const std::string& path);
void write_tensor(const std::string& path, const Tensor& tensor);

Tensor to_tensor(const Image& image);
Tensor to_tensor(const FilterBank& filters);
Tensor to_tensor(const OutputMap& out);
Image image_from_tensor(const Tensor& t);
FilterBank filters_from_tensor(const Tensor& t);

}  // namespace convsim
