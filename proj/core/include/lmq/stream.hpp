#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lmq {

// One stream element: `value` occurrences of `key` (cash-register model,
// value >= 1).
struct Tuple {
    std::uint32_t key = 0;
    std::uint32_t value = 1;

    friend bool operator==(const Tuple&, const Tuple&) = default;
};

// Parameters for synthetic Zipf stream generation.
struct StreamSpec {
    double z = 1.0;               // skew, >= 0
    std::uint32_t domain = 1;     // key universe size, keys are 0..domain-1
    std::uint64_t length = 0;     // tuple count
    std::uint64_t seed = 1;
};

// Deterministic Zipf sampler over ranks 0..domain-1 with P(rank) ~ (rank+1)^-z.
// Exact sampling via a precomputed cumulative table and binary search.
class ZipfGenerator {
public:
    explicit ZipfGenerator(double z, std::uint32_t domain, std::uint64_t seed);

    std::uint32_t next();

private:
    std::vector<double> cumulative_;
    std::uint64_t rng_state_;
};

std::vector<Tuple> gen_zipf(const StreamSpec& spec);

// Tuple-file errors are distinct kinds so callers can tell malformed inputs
// apart.
enum class TupleFileErrorKind { bad_magic, version_mismatch, truncated, io };

class TupleFileError : public std::runtime_error {
public:
    TupleFileError(TupleFileErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    TupleFileErrorKind kind() const { return kind_; }

private:
    TupleFileErrorKind kind_;
};

// Binary tuple file: header {magic "LMQS", version u16, tuple_count u64},
// body of {key u32, value u32} records, all little-endian.
inline constexpr std::uint16_t kTupleFileVersion = 1;

void write_tuples(const std::string& path, const std::vector<Tuple>& tuples);
std::vector<Tuple> read_tuples(const std::string& path);

// CSV fallback: one "key,value" record per line.
void write_tuples_csv(const std::string& path, const std::vector<Tuple>& tuples);
std::vector<Tuple> read_tuples_csv(const std::string& path);

// Round-robin split: tuple t goes to sub-stream t mod parts. Concatenation of
// the parts is a permutation of the input.
std::vector<std::vector<Tuple>> split_round_robin(const std::vector<Tuple>& tuples,
                                                  std::uint32_t parts);

// Total weight of a stream (sum of values).
std::uint64_t stream_weight(const std::vector<Tuple>& tuples);

}  // namespace lmq
