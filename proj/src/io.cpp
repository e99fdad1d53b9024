#include "msbin/io.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "json.hpp"

#include "msbin/errors.hpp"

namespace msbin {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  for (char& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return e;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Raster read_png(const fs::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw LoadError("cannot open '" + path.string() + "'");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw LoadError("libpng initialisation failed");
  }
  Raster raster;
  std::vector<png_bytep> rows;
  std::vector<unsigned char> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw LoadError("malformed PNG '" + path.string() + "'");
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw LoadError("'" + path.string() + "' is not a grayscale PNG");
  }
  if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);

  raster.width = static_cast<int>(png_get_image_width(png, info));
  raster.height = static_cast<int>(png_get_image_height(png, info));
  raster.bit_depth = depth == 16 ? 16 : 8;
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * static_cast<std::size_t>(raster.height));
  rows.resize(static_cast<std::size_t>(raster.height));
  for (int y = 0; y < raster.height; ++y) rows[static_cast<std::size_t>(y)] = buffer.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  raster.pixels.resize(static_cast<std::size_t>(raster.width) * raster.height);
  for (int y = 0; y < raster.height; ++y) {
    const unsigned char* row = rows[static_cast<std::size_t>(y)];
    for (int x = 0; x < raster.width; ++x) {
      std::uint16_t v;
      if (raster.bit_depth == 16) {
        std::memcpy(&v, row + 2 * x, 2);
      } else {
        v = row[x];
      }
      raster.pixels[static_cast<std::size_t>(y) * raster.width + x] = v;
    }
  }
  return raster;
}

void write_png(const fs::path& path, const Raster& raster) {
  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw Error("cannot write '" + path.string() + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng initialisation failed");
  }
  const std::size_t bpp = raster.bit_depth == 16 ? 2 : 1;
  std::vector<unsigned char> buffer(static_cast<std::size_t>(raster.width) * raster.height * bpp);
  for (std::size_t i = 0; i < raster.pixels.size(); ++i) {
    if (bpp == 2) {
      buffer[2 * i] = static_cast<unsigned char>(raster.pixels[i] >> 8);
      buffer[2 * i + 1] = static_cast<unsigned char>(raster.pixels[i] & 0xff);
    } else {
      buffer[i] = static_cast<unsigned char>(raster.pixels[i]);
    }
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(raster.height));
  for (int y = 0; y < raster.height; ++y)
    rows[static_cast<std::size_t>(y)] = buffer.data() + static_cast<std::size_t>(y) * raster.width * bpp;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("PNG encoding failed for '" + path.string() + "'");
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(raster.width), static_cast<png_uint_32>(raster.height),
               raster.bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Binary PGM (P5). Header tokens may be separated by comments.
Raster read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path.string() + "'");
  auto token = [&]() {
    std::string t;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!t.empty()) break;
        continue;
      }
      t.push_back(c);
    }
    return t;
  };
  if (token() != "P5") throw LoadError("'" + path.string() + "' is not a binary PGM");
  Raster raster;
  int maxval = 0;
  try {
    raster.width = std::stoi(token());
    raster.height = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw LoadError("malformed PGM header in '" + path.string() + "'");
  }
  if (raster.width <= 0 || raster.height <= 0 || maxval <= 0 || maxval > 65535)
    throw LoadError("unsupported PGM header in '" + path.string() + "'");
  raster.bit_depth = maxval > 255 ? 16 : 8;
  const std::size_t n = static_cast<std::size_t>(raster.width) * raster.height;
  const std::size_t bpp = raster.bit_depth == 16 ? 2 : 1;
  std::vector<unsigned char> buf(n * bpp);
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
    throw LoadError("truncated PGM '" + path.string() + "'");
  const int full = raster.bit_depth == 16 ? 65535 : 255;
  raster.pixels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    unsigned v = bpp == 2 ? (unsigned{buf[2 * i]} << 8) | buf[2 * i + 1] : buf[i];
    // rescale to the full range of the nominal depth
    raster.pixels[i] = static_cast<std::uint16_t>((v * static_cast<unsigned>(full) + maxval / 2) / maxval);
  }
  return raster;
}

void write_pgm(const fs::path& path, const Raster& raster) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "P5\n" << raster.width << " " << raster.height << "\n" << (raster.bit_depth == 16 ? 65535 : 255) << "\n";
  for (auto v : raster.pixels) {
    if (raster.bit_depth == 16) {
      out.put(static_cast<char>(v >> 8));
      out.put(static_cast<char>(v & 0xff));
    } else {
      out.put(static_cast<char>(v));
    }
  }
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw LoadError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << j.dump(2) << "\n";
}

template <typename T>
T field(const json& j, const char* key, const fs::path& src) {
  if (!j.contains(key)) throw LoadError("'" + src.string() + "': missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw LoadError("'" + src.string() + "': bad field '" + key + "'");
  }
}

fs::path resolve(const fs::path& base_dir, const fs::path& p) { return p.is_absolute() ? p : base_dir / p; }

fs::path manifest_file(const fs::path& path) {
  return fs::is_directory(path) ? path / kImageManifestName : path;
}

}  // namespace

Raster read_raster(const fs::path& path) {
  if (!fs::exists(path)) throw LoadError("missing file '" + path.string() + "'");
  const auto ext = lower_ext(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm") return read_pgm(path);
  throw LoadError("unsupported raster format '" + path.string() + "'");
}

void write_raster(const fs::path& path, const Raster& raster) {
  if (raster.bit_depth != 8 && raster.bit_depth != 16) throw Error("bit depth must be 8 or 16");
  const auto ext = lower_ext(path);
  if (ext == ".png") return write_png(path, raster);
  if (ext == ".pgm") return write_pgm(path, raster);
  throw Error("unsupported raster format '" + path.string() + "'");
}

IntensityPlane raster_to_plane(const Raster& raster) {
  const float full = raster.bit_depth == 16 ? 65535.0f : 255.0f;
  std::vector<float> v(raster.pixels.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(raster.pixels[i]) / full;
  return IntensityPlane(raster.width, raster.height, std::move(v));
}

Raster plane_to_raster(const IntensityPlane& plane, int bit_depth) {
  Raster r{plane.width(), plane.height(), bit_depth, {}};
  const double full = bit_depth == 16 ? 65535.0 : 255.0;
  r.pixels.resize(plane.size());
  for (std::size_t i = 0; i < plane.size(); ++i)
    r.pixels[i] = static_cast<std::uint16_t>(std::lround(static_cast<double>(plane[i]) * full));
  return r;
}

ImageManifest read_image_manifest(const fs::path& path) {
  const json j = read_json_file(path);
  ImageManifest m;
  m.name = field<std::string>(j, "name", path);
  if (j.contains("protocol")) m.protocol = field<std::string>(j, "protocol", path);
  if (m.protocol != "BW01" && m.protocol != "BW10")
    throw LoadError("'" + path.string() + "': protocol must be BW01 or BW10");
  if (!j.contains("bands") || !j["bands"].is_array() || j["bands"].empty())
    throw LoadError("'" + path.string() + "': 'bands' must be a non-empty array");
  for (const auto& b : j["bands"]) {
    BandEntry e;
    e.file = field<std::string>(b, "file", path);
    if (b.contains("wavelength_nm")) e.wavelength_nm = field<double>(b, "wavelength_nm", path);
    if (b.contains("fwhm_nm")) e.fwhm_nm = field<double>(b, "fwhm_nm", path);
    m.bands.push_back(std::move(e));
  }
  if (j.contains("gt") && !j["gt"].is_null()) m.gt = field<std::string>(j, "gt", path);
  return m;
}

void write_image_manifest(const fs::path& path, const ImageManifest& m) {
  json bands = json::array();
  for (const auto& b : m.bands)
    bands.push_back({{"file", b.file}, {"wavelength_nm", b.wavelength_nm}, {"fwhm_nm", b.fwhm_nm}});
  json j = {{"name", m.name}, {"protocol", m.protocol}, {"bands", bands}};
  if (m.gt) j["gt"] = *m.gt;
  write_json_file(path, j);
}

MsImage load_ms(const fs::path& path) {
  const fs::path mpath = manifest_file(path);
  const ImageManifest m = read_image_manifest(mpath);
  const fs::path dir = mpath.parent_path();
  std::vector<IntensityPlane> bands;
  std::vector<BandMeta> meta;
  for (const auto& b : m.bands) {
    IntensityPlane plane = raster_to_plane(read_raster(resolve(dir, b.file)));
    if (!bands.empty() && (plane.width() != bands.front().width() || plane.height() != bands.front().height()))
      throw LoadError("'" + mpath.string() + "': band '" + b.file + "' has dimensions " +
                      std::to_string(plane.width()) + "x" + std::to_string(plane.height()) + ", expected " +
                      std::to_string(bands.front().width()) + "x" + std::to_string(bands.front().height()));
    if (m.protocol == "BW10") plane = flip_protocol(plane);
    bands.push_back(std::move(plane));
    meta.push_back({b.wavelength_nm, b.fwhm_nm});
  }
  return MsImage(m.name, std::move(bands), std::move(meta));
}

DatasetManifest read_dataset_manifest(const fs::path& path) {
  const json j = read_json_file(path);
  DatasetManifest d;
  d.name = j.value("name", std::string{});
  if (!j.contains("items") || !j["items"].is_array())
    throw LoadError("'" + path.string() + "': 'items' must be an array");
  for (const auto& it : j["items"]) {
    DatasetItem item;
    item.ms_dir = field<std::string>(it, "ms_dir", path);
    if (it.contains("gt_path") && !it["gt_path"].is_null()) item.gt_path = field<std::string>(it, "gt_path", path);
    d.items.push_back(std::move(item));
  }
  return d;
}

void write_dataset_manifest(const fs::path& path, const DatasetManifest& d) {
  json items = json::array();
  for (const auto& it : d.items) {
    json e = {{"ms_dir", it.ms_dir.generic_string()}};
    if (it.gt_path) e["gt_path"] = it.gt_path->generic_string();
    items.push_back(std::move(e));
  }
  write_json_file(path, {{"name", d.name}, {"items", items}});
}

std::vector<LabeledImage> load_dataset(const fs::path& manifest_path) {
  const DatasetManifest d = read_dataset_manifest(manifest_path);
  const fs::path base = manifest_path.parent_path();
  std::vector<LabeledImage> out;
  for (const auto& item : d.items) {
    const fs::path ms_path = manifest_file(resolve(base, item.ms_dir));
    LabeledImage li{load_ms(ms_path), std::nullopt};
    std::optional<fs::path> gt;
    if (item.gt_path) {
      gt = resolve(base, *item.gt_path);
    } else {
      const ImageManifest m = read_image_manifest(ms_path);
      if (m.gt) gt = resolve(ms_path.parent_path(), *m.gt);
    }
    if (gt) {
      li.gt = load_binary(*gt);
      if (li.gt->width() != li.image.width() || li.gt->height() != li.image.height())
        throw LoadError("'" + gt->string() + "': GT dimensions do not match image '" + li.image.name() + "'");
    }
    out.push_back(std::move(li));
  }
  return out;
}

std::vector<NamedMask> load_dataset_gt(const fs::path& manifest_path) {
  const DatasetManifest d = read_dataset_manifest(manifest_path);
  const fs::path base = manifest_path.parent_path();
  std::vector<NamedMask> out;
  for (const auto& item : d.items) {
    const fs::path ms_path = manifest_file(resolve(base, item.ms_dir));
    const ImageManifest m = read_image_manifest(ms_path);
    NamedMask nm{m.name, std::nullopt};
    if (item.gt_path) {
      nm.gt = load_binary(resolve(base, *item.gt_path));
    } else if (m.gt) {
      nm.gt = load_binary(resolve(ms_path.parent_path(), *m.gt));
    }
    out.push_back(std::move(nm));
  }
  return out;
}

fs::path dataset_manifest_path(const fs::path& path) {
  return fs::is_directory(path) ? path / kDatasetManifestName : path;
}

void save_binary(const BinaryImage& mask, const fs::path& path) {
  Raster r{mask.width(), mask.height(), 8, {}};
  r.pixels.resize(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) r.pixels[i] = mask[i] ? 0 : 255;
  write_raster(path, r);
}

BinaryImage load_binary(const fs::path& path) {
  const Raster r = read_raster(path);
  const unsigned half = r.bit_depth == 16 ? 32768u : 128u;
  std::vector<std::uint8_t> m(r.pixels.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = r.pixels[i] < half ? 1 : 0;
  return BinaryImage(r.width, r.height, std::move(m));
}

}  // namespace msbin
