#include "churngrid/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string_view>

namespace churngrid::nn {
namespace {

constexpr char kMagic[8] = {'W', 'I', 'S', 'E', 'N', 'E', 'T', '1'};

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<uint64_t>(v)); }

struct Reader {
  std::ifstream in;
  std::string path;

  void read(void* dst, size_t n) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n) {
      throw std::runtime_error("checkpoint: truncated file " + path);
    }
  }
  uint32_t u32() {
    uint8_t b[4];
    read(b, 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
  }
  uint64_t u64() {
    uint8_t b[8];
    read(b, 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
};

}  // namespace

std::string architecture_descriptor() {
  using W = WiseNet;
  std::string d;
  auto dim3 = [](int c, int h, int w) {
    return std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
  };
  d += "conv(" + dim3(W::kInC, W::kInH, W::kInW) + "->" + dim3(W::kConv1O, W::kConv1H, W::kConv1W) +
       ",k" + std::to_string(W::kConv1KH) + "x" + std::to_string(W::kConv1KW) + ",s1);prelu;";
  d += "maxpool(k1x" + std::to_string(W::kPool1K) + ",s" + std::to_string(W::kPool1S) + "->" +
       dim3(W::kConv1O, W::kConv1H, W::kPool1W) + ");";
  d += "conv(->" + dim3(W::kConv2O, W::kConv2H, W::kConv2W) + ",k" +
       std::to_string(W::kConv2KH) + "x" + std::to_string(W::kConv2KW) + ",s1);prelu;";
  d += "maxpool(k1x" + std::to_string(W::kPool2K) + ",s" + std::to_string(W::kPool2S) +
       ",ceil->" + dim3(W::kConv2O, W::kConv2H, W::kPool2W) + ");";
  d += "flatten(" + std::to_string(W::kFlat) + ");";
  d += "fc(" + std::to_string(W::kFlat) + "->" + std::to_string(W::kFc1) + ");prelu;dropout;";
  d += "fc(" + std::to_string(W::kFc1) + "->" + std::to_string(W::kFc2) + ");prelu;dropout;";
  d += "fc(" + std::to_string(W::kFc2) + "->" + std::to_string(W::kFc3) + ");prelu;dropout;";
  d += "fc(" + std::to_string(W::kFc3) + "->" + std::to_string(W::kOut) + ");softmax";
  return d;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const std::string descriptor = architecture_descriptor();
  std::string payload;
  payload.reserve(64 + descriptor.size() +
                  8 * (checkpoint.model.param_count() + checkpoint.mean.values.size()) + 32);
  payload.append(kMagic, sizeof(kMagic));
  put_u32(payload, static_cast<uint32_t>(descriptor.size()));
  payload.append(descriptor);
  put_u64(payload, checkpoint.model.param_count());
  for (const WiseNet::ParamView& view : checkpoint.model.param_views()) {
    for (size_t i = 0; i < view.size; ++i) put_f64(payload, view.data[i]);
  }
  for (double v : checkpoint.mean.values) put_f64(payload, v);
  payload.push_back(checkpoint.unit_scale ? 1 : 0);
  put_u64(payload, checkpoint.seed);
  put_u32(payload, checkpoint.best_epoch);
  put_f64(payload, checkpoint.val_logloss);

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + tmp.string());
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw std::runtime_error("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader r{std::ifstream(path, std::ios::binary), path.string()};
  if (!r.in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  char magic[8];
  r.read(magic, sizeof(magic));
  if (std::string_view(magic, 8) != std::string_view(kMagic, 8)) {
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  }
  const uint32_t descriptor_len = r.u32();
  if (descriptor_len > 4096) {
    throw std::runtime_error("checkpoint: implausible descriptor length in " + path.string());
  }
  std::string descriptor(descriptor_len, '\0');
  if (descriptor_len > 0) r.read(descriptor.data(), descriptor_len);
  if (descriptor != architecture_descriptor()) {
    throw std::runtime_error("checkpoint: architecture mismatch in " + path.string() + " (got '" +
                             descriptor + "')");
  }
  Checkpoint checkpoint;
  const uint64_t param_count = r.u64();
  if (param_count != checkpoint.model.param_count()) {
    throw std::runtime_error("checkpoint: parameter count mismatch in " + path.string());
  }
  for (WiseNet::ParamView& view : checkpoint.model.param_views()) {
    for (size_t i = 0; i < view.size; ++i) view.data[i] = r.f64();
  }
  for (double& v : checkpoint.mean.values) v = r.f64();
  uint8_t unit_scale = 0;
  r.read(&unit_scale, 1);
  if (unit_scale > 1) throw std::runtime_error("checkpoint: invalid unit_scale flag");
  checkpoint.unit_scale = unit_scale == 1;
  checkpoint.seed = r.u64();
  checkpoint.best_epoch = r.u32();
  checkpoint.val_logloss = r.f64();
  char extra;
  r.in.read(&extra, 1);
  if (r.in.gcount() != 0) throw std::runtime_error("checkpoint: trailing bytes in " + path.string());
  return checkpoint;
}

}  // namespace churngrid::nn
