#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <string>

namespace specmatch {

// Error categories map onto the CLI exit codes (usage=2, data=3, numerical=4).
enum class ErrorKind { usage, data, numerical };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_usage(const std::string& msg) { throw Error(ErrorKind::usage, msg); }
[[noreturn]] inline void throw_data(const std::string& msg) { throw Error(ErrorKind::data, msg); }
[[noreturn]] inline void throw_numerical(const std::string& msg) { throw Error(ErrorKind::numerical, msg); }

// Non-fatal diagnostics go to stderr; tests can silence them.
void warn(const std::string& msg);
void set_warnings_enabled(bool enabled);

// FNV-1a over raw bytes, used for cache validation.
uint64_t hash_bytes(const void* data, size_t size, uint64_t seed = 0xcbf29ce484222325ull);

// Deterministic counter-based stream: mixes a user seed with stream ids so that
// independent draws (per step / per shape / per purpose) never share a sequence.
class Rng {
public:
  explicit Rng(uint64_t seed, std::initializer_list<uint64_t> stream = {});

  uint64_t next_u64();
  // Uniform in [0, 1) with 53-bit resolution; identical across platforms.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n).
  uint64_t below(uint64_t n);
  double normal();

private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Writes through a temp file in the same directory and renames into place.
void write_file_atomic(const std::string& path, const std::function<void(std::ostream&)>& writer);

}  // namespace specmatch
