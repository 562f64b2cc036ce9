#pragma once

// Binary PGM (P5) images and the on-disk dataset layout
//
//   <root>/x/<class>/<id>.pgm
//   <root>/y/<class>/<id>.pgm
//
// Class ids follow the lexicographic order of the class directory names and
// samples are ordered lexicographically by id. Every id must exist in both views.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "planarcda/data.hpp"
#include "planarcda/error.hpp"

namespace planarcda {

namespace fs = std::filesystem;

namespace detail {

inline std::string pgm_token(std::istream& in) {
  std::string tok;
  char c = 0;
  while (in.get(c)) {
    if (c == '#') {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

inline std::string zero_pad(std::size_t value, std::size_t width) {
  std::string s = std::to_string(value);
  if (s.size() < width) s.insert(0, width - s.size(), '0');
  return s;
}

}  // namespace detail

// Reads an 8- or 16-bit P5 image scaled to [0, 1] by the header's max-gray.
inline Mat read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  if (detail::pgm_token(in) != "P5") throw IoError(path.string() + ": not a binary PGM (P5)");
  long width = 0;
  long height = 0;
  long maxval = 0;
  try {
    width = std::stol(detail::pgm_token(in));
    height = std::stol(detail::pgm_token(in));
    maxval = std::stol(detail::pgm_token(in));
  } catch (const std::exception&) {
    throw IoError(path.string() + ": malformed PGM header");
  }
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
    throw IoError(path.string() + ": invalid PGM header values");
  }
  const bool wide = maxval > 255;
  const std::size_t bytes = static_cast<std::size_t>(width * height) * (wide ? 2U : 1U);
  std::vector<unsigned char> raw(bytes);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes) throw IoError(path.string() + ": truncated pixel data");

  Mat out(height, width);
  const double scale = 1.0 / static_cast<double>(maxval);
  std::size_t k = 0;
  for (long i = 0; i < height; ++i) {
    for (long j = 0; j < width; ++j) {
      unsigned value = raw[k++];
      if (wide) value = (value << 8) | raw[k++];
      out(i, j) = static_cast<double>(value) * scale;
    }
  }
  return out;
}

// Writes values in [0, 1] as a P5 image; maxval > 255 selects 16-bit big-endian samples.
inline void write_pgm(const fs::path& path, const Mat& image, int maxval = 255) {
  if (maxval < 1 || maxval > 65535) throw IoError("write_pgm: maxval must be in [1, 65535]");
  if (image.size() == 0) throw ShapeError("write_pgm: empty image");
  if (!image.allFinite() || image.minCoeff() < 0.0 || image.maxCoeff() > 1.0) {
    throw NumericError("write_pgm: pixel values must lie in [0, 1]");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << image.cols() << ' ' << image.rows() << '\n' << maxval << '\n';
  const bool wide = maxval > 255;
  std::vector<unsigned char> raw;
  raw.reserve(static_cast<std::size_t>(image.size()) * (wide ? 2U : 1U));
  for (Eigen::Index i = 0; i < image.rows(); ++i) {
    for (Eigen::Index j = 0; j < image.cols(); ++j) {
      const auto value = static_cast<unsigned>(std::lround(image(i, j) * maxval));
      if (wide) raw.push_back(static_cast<unsigned char>(value >> 8));
      raw.push_back(static_cast<unsigned char>(value & 0xFFU));
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

inline LabeledPairSet load_image_dir(const fs::path& root) {
  const fs::path xdir = root / "x";
  const fs::path ydir = root / "y";
  if (!fs::is_directory(xdir) || !fs::is_directory(ydir)) {
    throw IoError(root.string() + ": expected x/ and y/ subdirectories");
  }

  // id -> class name, per view
  auto scan = [](const fs::path& view) {
    std::map<std::string, std::string> ids;
    for (const auto& cls : fs::directory_iterator(view)) {
      if (!cls.is_directory()) continue;
      const std::string cname = cls.path().filename().string();
      for (const auto& f : fs::directory_iterator(cls.path())) {
        if (!f.is_regular_file() || f.path().extension() != ".pgm") continue;
        const std::string id = f.path().stem().string();
        if (!ids.emplace(id, cname).second) {
          throw PairingError("sample id '" + id + "' appears in more than one class under " +
                             view.string());
        }
      }
    }
    return ids;
  };
  const auto xids = scan(xdir);
  const auto yids = scan(ydir);
  for (const auto& [id, cname] : xids) {
    const auto it = yids.find(id);
    if (it == yids.end()) throw PairingError("sample id '" + id + "' has no counterpart under y/");
    if (it->second != cname) {
      throw PairingError("sample id '" + id + "' is filed under different classes in x/ and y/");
    }
  }
  for (const auto& [id, cname] : yids) {
    if (!xids.count(id)) throw PairingError("sample id '" + id + "' has no counterpart under x/");
  }
  if (xids.empty()) throw EmptyInputError(root.string() + ": no .pgm samples found");

  std::vector<std::string> class_names;
  for (const auto& [id, cname] : xids) class_names.push_back(cname);
  std::sort(class_names.begin(), class_names.end());
  class_names.erase(std::unique(class_names.begin(), class_names.end()), class_names.end());

  LabeledPairSet out;
  out.classes = static_cast<int>(class_names.size());
  for (const auto& [id, cname] : xids) {  // std::map iterates ids lexicographically
    const auto label = std::lower_bound(class_names.begin(), class_names.end(), cname) - class_names.begin();
    out.x.push_back(read_pgm(xdir / cname / (id + ".pgm")));
    out.y.push_back(read_pgm(ydir / cname / (id + ".pgm")));
    out.labels.push_back(static_cast<int>(label) + 1);
    if (out.x.back().rows() != out.x.front().rows() || out.x.back().cols() != out.x.front().cols()) {
      throw ShapeError("mixed image shapes in x/ (sample '" + id + "')");
    }
    if (out.y.back().rows() != out.y.front().rows() || out.y.back().cols() != out.y.front().cols()) {
      throw ShapeError("mixed image shapes in y/ (sample '" + id + "')");
    }
  }
  out.validate();
  return out;
}

inline std::string class_dir_name(int label, int classes) {
  const std::size_t width = std::max<std::size_t>(2, std::to_string(classes).size());
  return "c" + detail::zero_pad(static_cast<std::size_t>(label), width);
}

// Writes the dataset layout. Pixel values must already lie in [0, 1] (see to_unit_range).
inline void write_image_dir(const fs::path& root, const LabeledPairSet& data, int maxval = 65535) {
  data.validate();
  const std::size_t id_width = std::max<std::size_t>(4, std::to_string(data.size()).size());
  for (const char* view : {"x", "y"}) {
    for (int k = 1; k <= data.classes; ++k) fs::create_directories(root / view / class_dir_name(k, data.classes));
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::string cname = class_dir_name(data.labels[i], data.classes);
    const std::string file = "s" + detail::zero_pad(i + 1, id_width) + ".pgm";
    write_pgm(root / "x" / cname / file, data.x[i], maxval);
    write_pgm(root / "y" / cname / file, data.y[i], maxval);
  }
}

}  // namespace planarcda
