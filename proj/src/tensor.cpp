#include "convsim/tensor.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

namespace convsim {

Image make_image(int channels, int height, int width, std::vector<float> data) {
  if (channels < 1 || height < 1 || width < 1)
    throw ConfigError("image dimensions must be >= 1");
  if (data.size() != static_cast<size_t>(channels) * height * width)
    throw ConfigError("image data length does not match C*Ny*Nx");
  return Image{channels, height, width, std::move(data)};
}

FilterBank make_filter_bank(int filters, int channels, int size,
                            std::vector<float> data) {
  if (filters < 1 || channels < 1 || size < 1)
    throw ConfigError("filter bank dimensions must be >= 1");
  if (data.size() != static_cast<size_t>(filters) * channels * size * size)
    throw ConfigError("filter data length does not match F*C*K*K");
  return FilterBank{filters, channels, size, std::move(data)};
}

OutputMap naive_convolve(const Image& image, const FilterBank& filters) {
  if (image.channels != filters.channels)
    throw ConfigError("channel mismatch: image C=" +
                      std::to_string(image.channels) + ", filters C=" +
                      std::to_string(filters.channels));
  const int k = filters.size;
  if (image.height < k || image.width < k)
    throw ConfigError("image smaller than filter (valid mode needs N >= K)");

  OutputMap out;
  out.maps = filters.filters;
  out.height = image.height - k + 1;
  out.width = image.width - k + 1;
  out.data.assign(static_cast<size_t>(out.maps) * out.height * out.width, 0.0f);

  for (int f = 0; f < out.maps; ++f) {
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        float acc = 0.0f;
        for (int c = 0; c < image.channels; ++c)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx)
              acc += image.at(c, y + ky, x + kx) * filters.at(f, c, ky, kx);
        out.at(f, y, x) = acc;
      }
    }
  }
  return out;
}

Tensor gen_tensor(const std::vector<uint32_t>& shape, uint64_t seed) {
  Tensor t;
  t.dims = shape;
  size_t n = 1;
  for (uint32_t d : shape) {
    if (d < 1) throw ConfigError("tensor dimensions must be >= 1");
    n *= d;
  }
  if (shape.empty()) throw ConfigError("tensor rank must be >= 1");
  t.data.reserve(n);
  uint64_t s = seed;
  for (size_t i = 0; i < n; ++i) {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    t.data.push_back(static_cast<float>(s >> 40) / 16777216.0f);
  }
  return t;
}

Image gen_image(int channels, int height, int width, uint64_t seed) {
  Tensor t = gen_tensor({static_cast<uint32_t>(channels),
                         static_cast<uint32_t>(height),
                         static_cast<uint32_t>(width)},
                        seed);
  return make_image(channels, height, width, std::move(t.data));
}

FilterBank gen_filters(int filters, int channels, int size, uint64_t seed) {
  Tensor t = gen_tensor({static_cast<uint32_t>(filters),
                         static_cast<uint32_t>(channels),
                         static_cast<uint32_t>(size),
                         static_cast<uint32_t>(size)},
                        seed);
  return make_filter_bank(filters, channels, size, std::move(t.data));
}

namespace {

constexpr char kMagic[4] = {'C', 'T', 'E', 'N'};
constexpr uint8_t kVersion = 0x01;

void put_u32(std::string& buf, uint32_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
  buf.push_back(static_cast<char>((v >> 16) & 0xff));
  buf.push_back(static_cast<char>((v >> 24) & 0xff));
}

uint32_t get_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

}  // namespace

void write_tensor(const std::string& path, const Tensor& tensor) {
  std::string buf;
  buf.append(kMagic, 4);
  buf.push_back(static_cast<char>(kVersion));
  put_u32(buf, static_cast<uint32_t>(tensor.dims.size()));
  for (uint32_t d : tensor.dims) put_u32(buf, d);
  for (float v : tensor.data) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(buf, bits);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot open for writing: " + path);
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!f) throw FormatError("write failed: " + path);
}

Tensor read_tensor(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open: " + path);
  std::string raw((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
  if (raw.size() < 9 || std::memcmp(p, kMagic, 4) != 0)
    throw FormatError("bad magic in " + path);
  if (p[4] != kVersion) throw FormatError("unsupported version in " + path);
  uint32_t rank = get_u32(p + 5);
  if (rank == 0 || rank > 8) throw FormatError("bad rank in " + path);
  size_t header = 9 + 4ull * rank;
  if (raw.size() < header) throw FormatError("truncated header in " + path);

  Tensor t;
  size_t n = 1;
  for (uint32_t i = 0; i < rank; ++i) {
    uint32_t d = get_u32(p + 9 + 4ull * i);
    if (d == 0) throw FormatError("zero dimension in " + path);
    if (n > std::numeric_limits<size_t>::max() / d)
      throw FormatError("dimension overflow in " + path);
    n *= d;
    t.dims.push_back(d);
  }
  if (raw.size() != header + 4ull * n)
    throw FormatError("truncated or oversized payload in " + path);
  t.data.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    uint32_t bits = get_u32(p + header + 4ull * i);
    float v;
    std::memcpy(&v, &bits, 4);
    t.data.push_back(v);
  }
  return t;
}

Tensor to_tensor(const Image& image) {
  return Tensor{{static_cast<uint32_t>(image.channels),
                 static_cast<uint32_t>(image.height),
                 static_cast<uint32_t>(image.width)},
                image.data};
}

Tensor to_tensor(const FilterBank& filters) {
  return Tensor{{static_cast<uint32_t>(filters.filters),
                 static_cast<uint32_t>(filters.channels),
                 static_cast<uint32_t>(filters.size),
                 static_cast<uint32_t>(filters.size)},
                filters.data};
}

Tensor to_tensor(const OutputMap& out) {
  return Tensor{{static_cast<uint32_t>(out.maps),
                 static_cast<uint32_t>(out.height),
                 static_cast<uint32_t>(out.width)},
                out.data};
}

Image image_from_tensor(const Tensor& t) {
  if (t.dims.size() != 3)
    throw FormatError("image tensor must have rank 3 [C, Ny, Nx]");
  return make_image(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]),
                    static_cast<int>(t.dims[2]), t.data);
}

FilterBank filters_from_tensor(const Tensor& t) {
  if (t.dims.size() != 4)
    throw FormatError("filter tensor must have rank 4 [F, C, K, K]");
  if (t.dims[2] != t.dims[3]) throw FormatError("filters must be square");
  return make_filter_bank(static_cast<int>(t.dims[0]),
                          static_cast<int>(t.dims[1]),
                          static_cast<int>(t.dims[2]), t.data);
}

}  // namespace convsim
