#include "churngrid/image_store.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace churngrid::enc {
namespace {

constexpr char kMagic[8] = {'C', 'H', 'R', 'N', 'I', 'M', 'G', '1'};

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
  std::ifstream in;
  std::string path;

  void read(void* dst, size_t n) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n) {
      throw std::runtime_error("image set: truncated file " + path);
    }
  }
  uint16_t u16() {
    uint8_t b[2];
    read(b, 2);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
  }
  uint32_t u32() {
    uint8_t b[4];
    read(b, 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
  }
};

void write_atomic(const std::filesystem::path& path, const std::string& payload) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("image set: cannot open " + tmp.string());
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw std::runtime_error("image set: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string feature_header() {
  std::string header;
  for (int i = 0; i < kImagePixels; ++i) {
    header += "f" + std::to_string(i) + ",";
  }
  header += "offset,label";
  return header;
}

}  // namespace

void write_image_set(const std::vector<EncodedImage>& images, const std::filesystem::path& path) {
  std::string payload;
  payload.reserve(16 + images.size() * (kImageBytes + 32));
  payload.append(kMagic, sizeof(kMagic));
  put_u32(payload, static_cast<uint32_t>(images.size()));
  for (const EncodedImage& img : images) {
    if (img.customer_id.size() > 0xffff) {
      throw std::runtime_error("image set: customer id too long: " + img.customer_id);
    }
    put_u16(payload, static_cast<uint16_t>(img.customer_id.size()));
    payload.append(img.customer_id);
    payload.push_back(static_cast<char>(img.label));
    put_u16(payload, static_cast<uint16_t>(img.crop_offset));
    payload.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  }
  write_atomic(path, payload);
}

std::vector<EncodedImage> load_image_set(const std::filesystem::path& path) {
  Reader r{std::ifstream(path, std::ios::binary), path.string()};
  if (!r.in) throw std::runtime_error("image set: cannot open " + path.string());
  char magic[8];
  r.read(magic, sizeof(magic));
  if (std::string_view(magic, 8) != std::string_view(kMagic, 8)) {
    throw std::runtime_error("image set: bad magic in " + path.string());
  }
  const uint32_t count = r.u32();
  std::vector<EncodedImage> images;
  images.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    EncodedImage img;
    const uint16_t id_len = r.u16();
    img.customer_id.resize(id_len);
    if (id_len > 0) r.read(img.customer_id.data(), id_len);
    uint8_t label = 0;
    r.read(&label, 1);
    if (label > 1) throw std::runtime_error("image set: invalid label in " + path.string());
    img.label = static_cast<int>(label);
    img.crop_offset = r.u16();
    if (img.crop_offset >= events::kSlicesPerWeek) {
      throw std::runtime_error("image set: invalid crop offset in " + path.string());
    }
    r.read(img.pixels.data(), img.pixels.size());
    images.push_back(std::move(img));
  }
  // Trailing bytes indicate a corrupt or mismatched file.
  char extra;
  r.in.read(&extra, 1);
  if (r.in.gcount() != 0) throw std::runtime_error("image set: trailing bytes in " + path.string());
  return images;
}

void write_flattened_csv(const std::vector<EncodedImage>& images,
                         const std::filesystem::path& path) {
  std::string payload = feature_header();
  payload += '\n';
  char buf[16];
  for (const EncodedImage& img : images) {
    const FeatureVector features = flatten_image(img);
    for (int i = 0; i < kFeatureDim; ++i) {
      const int n = std::snprintf(buf, sizeof(buf), "%d,", static_cast<int>(features.values[i]));
      payload.append(buf, static_cast<size_t>(n));
    }
    payload += std::to_string(img.label);
    payload += '\n';
  }
  write_atomic(path, payload);
}

std::vector<FeatureVector> load_flattened_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("flattened csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("flattened csv: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != feature_header()) {
    throw std::runtime_error("flattened csv: missing or wrong header in " + path.string());
  }
  std::vector<FeatureVector> rows;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    FeatureVector fv;
    const char* p = line.data();
    const char* end = p + line.size();
    for (int i = 0; i < kFeatureDim + 1; ++i) {
      double value = 0.0;
      auto [next, ec] = std::from_chars(p, end, value);
      if (ec != std::errc{}) {
        throw std::runtime_error("flattened csv: bad value at line " + std::to_string(line_no));
      }
      p = next;
      if (i < kFeatureDim) {
        fv.values[i] = value;
        if (p == end || *p != ',') {
          throw std::runtime_error("flattened csv: wrong field count at line " +
                                   std::to_string(line_no));
        }
        ++p;
      } else {
        if (value != 0.0 && value != 1.0) {
          throw std::runtime_error("flattened csv: invalid label at line " +
                                   std::to_string(line_no));
        }
        fv.label = static_cast<int>(value);
        if (p != end) {
          throw std::runtime_error("flattened csv: trailing data at line " +
                                   std::to_string(line_no));
        }
      }
    }
    rows.push_back(fv);
  }
  return rows;
}

}  // namespace churngrid::enc
