#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ppikit {

// Calendar date at UTC day resolution. Kept as plain fields so ordering and
// serialization stay trivial and portable.
struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    friend auto operator<=>(const Date&, const Date&) = default;

    std::string to_string() const;

    // Parses "YYYY-MM-DD". Throws std::invalid_argument on malformed input.
    static Date parse(std::string_view text);
    static std::optional<Date> try_parse(std::string_view text);
};

// Deterministic 64-bit generator with portable derivations. The standard
// distributions are not bit-stable across library implementations, so the
// scaling is done by hand here.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

    std::uint64_t next_u64();

    // Uniform integer in [0, bound), bound > 0. Rejection sampling, unbiased.
    std::uint64_t next_below(std::uint64_t bound);

    // Uniform double in [0, 1) with 53 random bits.
    double next_double();

    // Uniform double in [lo, hi).
    double next_double(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

  private:
    std::uint64_t state_;
};

// -- string helpers ----------------------------------------------------------

std::vector<std::string> split(std::string_view text, char sep);
std::vector<std::string> split_ws(std::string_view text);
std::string trim(std::string_view text);
std::string to_lower(std::string_view text);
bool contains_ci(std::string_view haystack, std::string_view needle);

// Shortest decimal form that round-trips the double. Used everywhere a float
// reaches an artifact so re-runs stay byte-identical.
std::string format_double(double value);

// -- filesystem helpers ------------------------------------------------------

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);
void append_file(const std::string& path, std::string_view content);

// SHA-256 hex digest of a byte string.
std::string sha256_hex(std::string_view data);

// -- parallelism -------------------------------------------------------------

// Runs fn(begin, end) over disjoint chunks of [0, n) on up to `jobs` threads
// (0 means hardware concurrency). Exceptions from workers are rethrown.
void parallel_chunks(std::size_t n, unsigned jobs,
                     const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace ppikit
