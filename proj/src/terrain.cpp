#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "safex/error.hpp"
#include "safex/world.hpp"

namespace safex {

Vec3 TerrainImage::pixel(int col, int row) const {
  const std::size_t i = 3 * (static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col));
  return Vec3(rgb[i], rgb[i + 1], rgb[i + 2]);
}

void TerrainImage::validate() const {
  if (width < 1 || height < 1) throw ConfigError("terrain image is empty");
  if (rgb.size() != 3 * static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw ConfigError("terrain image buffer size mismatch");
  }
}

TerrainImage generate_terrain(int size, std::uint64_t seed, int regions, double blend) {
  if (size < 2 || regions < 1 || !(blend > 0.0)) throw ConfigError("invalid terrain parameters");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0.0, 10.0);
  std::uniform_real_distribution<double> col(0.1, 0.9);
  std::vector<Vec2> centers;
  std::vector<Vec3> colors;
  for (int k = 0; k < regions; ++k) {
    const double cx = pos(rng);
    const double cy = pos(rng);
    centers.emplace_back(cx, cy);
    const double r = col(rng);
    const double g = col(rng);
    const double b = col(rng);
    colors.emplace_back(r, g, b);
  }
  TerrainImage img;
  img.width = img.height = size;
  img.rgb.resize(3 * static_cast<std::size_t>(size) * static_cast<std::size_t>(size));
  const double cell = 10.0 / size;
  for (int row = 0; row < size; ++row) {
    for (int c = 0; c < size; ++c) {
      const Vec2 p((c + 0.5) * cell, 10.0 - (row + 0.5) * cell);
      Vec3 acc = Vec3::Zero();
      double wsum = 0.0;
      for (int k = 0; k < regions; ++k) {
        const double w = std::exp(-(p - centers[static_cast<std::size_t>(k)]).squaredNorm() / (2.0 * blend * blend));
        acc += w * colors[static_cast<std::size_t>(k)];
        wsum += w;
      }
      acc /= std::max(wsum, 1e-300);
      for (int ch = 0; ch < 3; ++ch) {
        const double q = std::round(std::clamp(acc[ch], 0.0, 1.0) * 255.0) / 255.0;
        img.rgb[3 * (static_cast<std::size_t>(row) * static_cast<std::size_t>(size) + static_cast<std::size_t>(c)) +
                static_cast<std::size_t>(ch)] = static_cast<float>(q);
      }
    }
  }
  return img;
}

namespace {

std::string next_token(std::istream& in) {
  std::string tok;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(ch);
  }
  return tok;
}

int parse_int(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw ConfigError(what);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError(what);
  }
}

}  // namespace

TerrainImage load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open terrain file: " + path);
  const std::string magic = next_token(in);
  if (magic != "P6" && magic != "P3") throw ConfigError("not a PPM (P3/P6) file: " + path);
  TerrainImage img;
  img.width = parse_int(next_token(in), "bad PPM width");
  img.height = parse_int(next_token(in), "bad PPM height");
  const int maxval = parse_int(next_token(in), "bad PPM maxval");
  if (img.width < 1 || img.height < 1 || maxval < 1 || maxval > 255) throw ConfigError("unsupported PPM header");
  const std::size_t count = 3 * static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  img.rgb.resize(count);
  if (magic == "P6") {
    std::vector<unsigned char> raw(count);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in.gcount()) != count) throw ConfigError("truncated PPM data");
    for (std::size_t i = 0; i < count; ++i) img.rgb[i] = static_cast<float>(raw[i]) / static_cast<float>(maxval);
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const int v = parse_int(next_token(in), "bad PPM sample");
      if (v < 0 || v > maxval) throw ConfigError("PPM sample out of range");
      img.rgb[i] = static_cast<float>(v) / static_cast<float>(maxval);
    }
  }
  return img;
}

void save_ppm(const TerrainImage& image, const std::string& path) {
  image.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  for (float v : image.rgb) {
    const auto b = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
    out.put(static_cast<char>(b));
  }
}

TerrainImage load_png(const std::string& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw ConfigError("cannot read PNG " + path + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&png);
    throw ConfigError("cannot decode PNG " + path + ": " + png.message);
  }
  TerrainImage img;
  img.width = static_cast<int>(png.width);
  img.height = static_cast<int>(png.height);
  img.rgb.resize(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) img.rgb[i] = static_cast<float>(buf[i]) / 255.0f;
  return img;
}

TerrainImage load_terrain(const std::string& path) {
  std::string ext;
  const auto dot = path.find_last_of('.');
  if (dot != std::string::npos) ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == "png") return load_png(path);
  if (ext == "ppm") return load_ppm(path);
  throw ConfigError("terrain must be .png or .ppm: " + path);
}

// ----------------------------------------------------------- DisturbanceField

namespace {

struct Bilinear {
  int c0, r0;
  double fx, fy;
  bool clamped_x, clamped_y;
};

Bilinear locate(const DisturbanceField& f, const Vec2& p) {
  const auto& img = f.image;
  const double cw = (f.extent.hi.x() - f.extent.lo.x()) / img.width;
  const double ch = (f.extent.hi.y() - f.extent.lo.y()) / img.height;
  double u = (p.x() - f.extent.lo.x()) / cw - 0.5;
  double v = (f.extent.hi.y() - p.y()) / ch - 0.5;
  Bilinear b{};
  b.clamped_x = u <= 0.0 || u >= img.width - 1;
  b.clamped_y = v <= 0.0 || v >= img.height - 1;
  u = std::clamp(u, 0.0, static_cast<double>(img.width - 1));
  v = std::clamp(v, 0.0, static_cast<double>(img.height - 1));
  b.c0 = std::min(static_cast<int>(std::floor(u)), std::max(img.width - 2, 0));
  b.r0 = std::min(static_cast<int>(std::floor(v)), std::max(img.height - 2, 0));
  b.fx = img.width > 1 ? u - b.c0 : 0.0;
  b.fy = img.height > 1 ? v - b.r0 : 0.0;
  return b;
}

}  // namespace

Vec2 DisturbanceField::pixel_center(int col, int row) const {
  const double cw = (extent.hi.x() - extent.lo.x()) / image.width;
  const double ch = (extent.hi.y() - extent.lo.y()) / image.height;
  return Vec2(extent.lo.x() + (col + 0.5) * cw, extent.hi.y() - (row + 0.5) * ch);
}

Vec3 DisturbanceField::color_at(const Vec2& p) const {
  const Bilinear b = locate(*this, p);
  const int c1 = std::min(b.c0 + 1, image.width - 1);
  const int r1 = std::min(b.r0 + 1, image.height - 1);
  const Vec3 top = (1.0 - b.fx) * image.pixel(b.c0, b.r0) + b.fx * image.pixel(c1, b.r0);
  const Vec3 bottom = (1.0 - b.fx) * image.pixel(b.c0, r1) + b.fx * image.pixel(c1, r1);
  return (1.0 - b.fy) * top + b.fy * bottom;
}

Eigen::Matrix<double, 3, 2> DisturbanceField::color_gradient(const Vec2& p) const {
  const Bilinear b = locate(*this, p);
  const int c1 = std::min(b.c0 + 1, image.width - 1);
  const int r1 = std::min(b.r0 + 1, image.height - 1);
  const double cw = (extent.hi.x() - extent.lo.x()) / image.width;
  const double ch = (extent.hi.y() - extent.lo.y()) / image.height;
  const Vec3 p00 = image.pixel(b.c0, b.r0), p10 = image.pixel(c1, b.r0);
  const Vec3 p01 = image.pixel(b.c0, r1), p11 = image.pixel(c1, r1);
  Eigen::Matrix<double, 3, 2> g = Eigen::Matrix<double, 3, 2>::Zero();
  if (!b.clamped_x) g.col(0) = ((1.0 - b.fy) * (p10 - p00) + b.fy * (p11 - p01)) / cw;
  if (!b.clamped_y) g.col(1) = -((1.0 - b.fx) * (p01 - p00) + b.fx * (p11 - p10)) / ch;
  return g;
}

Vec DisturbanceField::value(const Vec& x) const { return projection * color_at(x.head<2>()); }

Mat DisturbanceField::jacobian(const Vec& x) const {
  Mat j = Mat::Zero(projection.rows(), x.size());
  j.leftCols(2) = projection * color_gradient(x.head<2>());
  return j;
}

}  // namespace safex
