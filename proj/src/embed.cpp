#include "churngrid/embed.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "churngrid/rng.hpp"
#include "churngrid/train.hpp"

namespace churngrid::embed {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<size_t> subsample_indices(size_t set_size, size_t sample_size, uint64_t seed) {
  if (sample_size > set_size) {
    throw std::invalid_argument("embed: sample size exceeds set size");
  }
  std::vector<size_t> order(set_size);
  for (size_t i = 0; i < set_size; ++i) order[i] = i;
  Rng rng(seed);
  shuffle(order, rng);
  order.resize(sample_size);
  std::sort(order.begin(), order.end());
  return order;
}

void extract_activations(const nn::Checkpoint& checkpoint,
                         const std::vector<enc::EncodedImage>& images, size_t sample_size,
                         uint64_t seed, const std::filesystem::path& activations_path,
                         const std::filesystem::path& sidecar_path) {
  const std::vector<size_t> picked = subsample_indices(images.size(), sample_size, seed);
  const size_t n = picked.size();
  constexpr int kUnits = nn::WiseNet::kFc3;

  std::vector<double> activations(n * kUnits);
  std::vector<double> probs(n);

  const int threads = nn::resolve_threads();
  auto run_range = [&](size_t begin, size_t end) {
    nn::Workspace ws;
    std::vector<double> input(enc::kImageBytes);
    const nn::ForwardOptions options;  // inference mode
    for (size_t i = begin; i < end; ++i) {
      const enc::EncodedImage& image = images[picked[i]];
      data::normalize_image(image, checkpoint.mean, checkpoint.unit_scale, input.data());
      probs[i] = nn::forward(checkpoint.model, input.data(), ws, options).churn_probability;
      std::copy(ws.act5.begin(), ws.act5.end(), activations.begin() + i * kUnits);
    }
  };
  const size_t workers = std::min<size_t>(std::max(threads, 1), std::max<size_t>(n, 1));
  if (workers <= 1) {
    run_range(0, n);
  } else {
    std::vector<std::thread> pool;
    const size_t chunk = (n + workers - 1) / workers;
    for (size_t w = 0; w < workers; ++w) {
      const size_t begin = w * chunk;
      const size_t end = std::min(n, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(run_range, begin, end);
    }
    for (std::thread& t : pool) t.join();
  }

  {
    const std::filesystem::path tmp = activations_path.string() + ".tmp";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("embed: cannot open " + tmp.string());
    std::string line;
    for (size_t i = 0; i < n; ++i) {
      line.clear();
      for (int j = 0; j < kUnits; ++j) {
        if (j > 0) line += '\t';
        line += fmt(activations[i * kUnits + j]);
      }
      line += '\n';
      out << line;
    }
    if (!out) throw std::runtime_error("embed: write failed for " + tmp.string());
    out.close();
    std::filesystem::rename(tmp, activations_path);
  }
  {
    const std::filesystem::path tmp = sidecar_path.string() + ".tmp";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("embed: cannot open " + tmp.string());
    out << "customer_id,probability,label\n";
    for (size_t i = 0; i < n; ++i) {
      const enc::EncodedImage& image = images[picked[i]];
      out << image.customer_id << ',' << fmt(probs[i]) << ',' << image.label << '\n';
    }
    if (!out) throw std::runtime_error("embed: write failed for " + tmp.string());
    out.close();
    std::filesystem::rename(tmp, sidecar_path);
  }
}

}  // namespace churngrid::embed
