#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace multion {

// Error hierarchy. Every error carries a class name so the CLI can report
// "error [ParseError]: ..." and map to a nonzero exit code.
struct Error : std::runtime_error {
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(msg), kind(std::move(kind)) {}
    std::string kind;
};

struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error("ParseError", msg) {}
};
struct ValidationError : Error {
    explicit ValidationError(const std::string& msg) : Error("ValidationError", msg) {}
};
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error("IoError", msg) {}
};
struct GenerationError : Error {
    explicit GenerationError(const std::string& msg) : Error("GenerationError", msg) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error("ConfigError", msg) {}
};
struct UnreachableError : Error {
    explicit UnreachableError(const std::string& msg) : Error("UnreachableError", msg) {}
};

// Deterministic RNG used everywhere randomness is needed. Gaussian draws are
// hand-rolled (Box-Muller) so sequences do not depend on the standard
// library's distribution implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed == 0 ? 0x9e3779b97f4a7c15ULL : seed) {}

    // splitmix64 step
    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return double(next_u64() >> 11) * (1.0 / 9007199254740992.0); }

    // uniform integer in [lo, hi] inclusive
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    double gaussian();

    // derive an independent stream for a named purpose
    Rng fork(std::uint64_t salt) {
        Rng r(state_ ^ (salt * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
        r.next_u64();
        return r;
    }

  private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Shortest round-trip decimal representation (std::to_chars); deterministic
// across runs, used by every text format we emit.
std::string format_double(double v);

std::vector<std::string> split_ws(const std::string& line);
std::vector<std::string> split_on(const std::string& s, char sep);
std::string join(const std::vector<std::string>& parts, const std::string& sep);
bool parse_i64(const std::string& s, std::int64_t& out);
bool parse_u64(const std::string& s, std::uint64_t& out);
bool parse_double(const std::string& s, double& out);

// throwing variants for contexts where a bad token is a ParseError
std::int64_t parse_i64(const std::string& s);
double parse_double(const std::string& s);

// FNV-1a over raw bytes; used for parameter checksums and byte-identity tests.
std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace multion
