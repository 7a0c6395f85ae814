#include "tomonet/rawio.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace tomonet {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'T', 'S', 'I', 'M', 'G', '\0', '\0', '\1'};

static_assert(std::endian::native == std::endian::little,
              "raw image I/O assumes a little-endian host");

}  // namespace

void write_raw_image(const std::string& path, const Tensor3& image,
                     const std::string& dtype) {
  if (dtype != "f32" && dtype != "f64")
    throw config_error("write_raw_image: dtype must be f32 or f64");

  json header{{"height", image.height()},
              {"width", image.width()},
              {"depth", image.depth()},
              {"dtype", dtype},
              {"endianness", "LE"}};
  std::string htext = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot write image file: " + path);
  out.write(kMagic, sizeof(kMagic));
  uint32_t hlen = static_cast<uint32_t>(htext.size());
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));

  for (int d = 0; d < image.depth(); ++d)
    for (int y = 0; y < image.height(); ++y)
      for (int x = 0; x < image.width(); ++x) {
        double v = image.at(x, y, d);
        if (dtype == "f64") {
          out.write(reinterpret_cast<const char*>(&v), sizeof(v));
        } else {
          float f = static_cast<float>(v);
          out.write(reinterpret_cast<const char*>(&f), sizeof(f));
        }
      }
  if (!out) throw data_error("short write on image file: " + path);
}

Tensor3 read_raw_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open image file: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw data_error("not a raw image file (bad magic): " + path);
  uint32_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string htext(hlen, '\0');
  in.read(htext.data(), hlen);
  if (!in) throw data_error("truncated image header: " + path);

  json header = json::parse(htext, nullptr, false);
  if (header.is_discarded())
    throw data_error("malformed image header: " + path);
  int h = header.at("height").get<int>();
  int w = header.at("width").get<int>();
  int d = header.at("depth").get<int>();
  std::string dtype = header.at("dtype").get<std::string>();
  std::string endian = header.at("endianness").get<std::string>();
  if (endian != "LE")
    throw data_error("unsupported endianness in image file: " + path);
  if (dtype != "f32" && dtype != "f64")
    throw data_error("unsupported dtype in image file: " + path);

  Tensor3 image(h, w, d);
  for (int dd = 0; dd < d; ++dd)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (dtype == "f64") {
          double v;
          in.read(reinterpret_cast<char*>(&v), sizeof(v));
          image.at(x, y, dd) = v;
        } else {
          float f;
          in.read(reinterpret_cast<char*>(&f), sizeof(f));
          image.at(x, y, dd) = f;
        }
      }
  if (!in) throw data_error("truncated image payload: " + path);
  return image;
}

void write_sinogram(const std::string& path, const Sinogram& sino) {
  Tensor3 as_image(sino.n_angles, sino.n_bins, 1);
  for (int a = 0; a < sino.n_angles; ++a)
    for (int b = 0; b < sino.n_bins; ++b) as_image.at(b, a, 0) = sino.at(a, b);
  write_raw_image(path, as_image);
}

Sinogram read_sinogram(const std::string& path) {
  Tensor3 as_image = read_raw_image(path);
  if (as_image.depth() != 1)
    throw data_error("sinogram file must have depth 1: " + path);
  Sinogram sino(as_image.height(), as_image.width());
  sino.angles = make_angles(sino.n_angles);
  for (int a = 0; a < sino.n_angles; ++a)
    for (int b = 0; b < sino.n_bins; ++b) sino.at(a, b) = as_image.at(b, a, 0);
  return sino;
}

void write_pgm(const std::string& path, const Tensor3& image) {
  if (image.depth() != 1)
    throw contract_error("write_pgm: image depth must be 1");
  double lo = image.data()[0], hi = image.data()[0];
  for (double v : image.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double span = hi > lo ? hi - lo : 1.0;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot write preview file: " + path);
  out << "P5\n" << image.width() << " " << image.height() << "\n255\n";
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) {
      double v = (image.at(x, y, 0) - lo) / span;
      out.put(static_cast<char>(std::clamp(v * 255.0 + 0.5, 0.0, 255.0)));
    }
}

}  // namespace tomonet
