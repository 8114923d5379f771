#include "specmatch/common.h"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace specmatch {

namespace {
std::atomic<bool> g_warnings_enabled{true};

inline uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ull;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}
}  // namespace

void warn(const std::string& msg) {
  if (g_warnings_enabled.load(std::memory_order_relaxed))
    std::fprintf(stderr, "[specmatch] warning: %s\n", msg.c_str());
}

void set_warnings_enabled(bool enabled) { g_warnings_enabled.store(enabled); }

uint64_t hash_bytes(const void* data, size_t size, uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

Rng::Rng(uint64_t seed, std::initializer_list<uint64_t> stream) {
  uint64_t x = seed ^ 0x5bf03635d33c2aebull;
  state_ = splitmix64(x);
  for (uint64_t id : stream) {
    x = state_ ^ (id + 0x9e3779b97f4a7c15ull);
    state_ = splitmix64(x);
  }
}

uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

uint64_t Rng::below(uint64_t n) {
  // Lemire's multiply-shift; bias is negligible for the sizes used here.
  return uint64_t((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  while (u1 <= 0.0) u1 = uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

void write_file_atomic(const std::string& path, const std::function<void(std::ostream&)>& writer) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw_data("cannot open '" + tmp.string() + "' for writing");
    writer(out);
    out.flush();
    if (!out) throw_data("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

}  // namespace specmatch
