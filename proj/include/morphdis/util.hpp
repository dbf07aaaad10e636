#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace morphdis {

inline constexpr std::uint64_t kDefaultSeed = 12345;

/// Seeded generator whose draws are identical on every platform.
/// std::uniform_*_distribution and std::shuffle are implementation-defined,
/// so all sampling goes through these helpers instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = kDefaultSeed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Uniform real in [0, 1).
  double unit();
  /// Index drawn with probability proportional to weights[i].
  std::size_t weighted(const std::vector<double>& weights);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

namespace utf8 {
std::u32string decode(std::string_view s);
std::string encode(std::u32string_view s);
std::string encode(char32_t cp);
}  // namespace utf8

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// Calls fn(line_number, line) for each line; line numbers start at 1.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::size_t, const std::string&)>& fn);

std::string to_lower_ascii(std::string_view s);

}  // namespace morphdis
