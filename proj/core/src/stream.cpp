#include "lmq/stream.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "lmq/hash.hpp"

namespace lmq {

namespace {

constexpr char kMagic[4] = {'L', 'M', 'Q', 'S'};

double next_unit_double(std::uint64_t& state) {
    // 53 random mantissa bits -> [0, 1)
    return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

}  // namespace

ZipfGenerator::ZipfGenerator(double z, std::uint32_t domain, std::uint64_t seed)
    : rng_state_(seed) {
    if (domain < 1) throw std::invalid_argument("zipf: domain must be >= 1");
    if (z < 0.0) throw std::invalid_argument("zipf: skew must be >= 0");
    cumulative_.resize(domain);
    double acc = 0.0;
    for (std::uint32_t r = 0; r < domain; ++r) {
        acc += std::pow(static_cast<double>(r) + 1.0, -z);
        cumulative_[r] = acc;
    }
    const double total = cumulative_.back();
    for (double& c : cumulative_) c /= total;
    cumulative_.back() = 1.0;  // guard against rounding at the top end
}

std::uint32_t ZipfGenerator::next() {
    const double u = next_unit_double(rng_state_);
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return static_cast<std::uint32_t>(it - cumulative_.begin());
}

std::vector<Tuple> gen_zipf(const StreamSpec& spec) {
    ZipfGenerator gen(spec.z, spec.domain, spec.seed);
    std::vector<Tuple> out;
    out.reserve(spec.length);
    for (std::uint64_t i = 0; i < spec.length; ++i) {
        out.push_back(Tuple{gen.next(), 1});
    }
    return out;
}

void write_tuples(const std::string& path, const std::vector<Tuple>& tuples) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw TupleFileError(TupleFileErrorKind::io, "cannot open for write: " + path);
    f.write(kMagic, 4);
    const std::uint16_t version = kTupleFileVersion;
    const std::uint64_t count = tuples.size();
    f.write(reinterpret_cast<const char*>(&version), sizeof version);
    f.write(reinterpret_cast<const char*>(&count), sizeof count);
    for (const Tuple& t : tuples) {
        f.write(reinterpret_cast<const char*>(&t.key), sizeof t.key);
        f.write(reinterpret_cast<const char*>(&t.value), sizeof t.value);
    }
    if (!f) throw TupleFileError(TupleFileErrorKind::io, "write failed: " + path);
}

std::vector<Tuple> read_tuples(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw TupleFileError(TupleFileErrorKind::io, "cannot open: " + path);
    char magic[4] = {};
    f.read(magic, 4);
    if (f.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
        throw TupleFileError(TupleFileErrorKind::bad_magic, "bad magic: " + path);
    }
    std::uint16_t version = 0;
    std::uint64_t count = 0;
    f.read(reinterpret_cast<char*>(&version), sizeof version);
    if (f.gcount() != sizeof version) {
        throw TupleFileError(TupleFileErrorKind::truncated, "truncated header: " + path);
    }
    if (version != kTupleFileVersion) {
        throw TupleFileError(TupleFileErrorKind::version_mismatch,
                             "unsupported version " + std::to_string(version) + ": " + path);
    }
    f.read(reinterpret_cast<char*>(&count), sizeof count);
    if (f.gcount() != sizeof count) {
        throw TupleFileError(TupleFileErrorKind::truncated, "truncated header: " + path);
    }
    std::vector<Tuple> out(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        f.read(reinterpret_cast<char*>(&out[i].key), sizeof out[i].key);
        f.read(reinterpret_cast<char*>(&out[i].value), sizeof out[i].value);
        if (!f) {
            throw TupleFileError(TupleFileErrorKind::truncated,
                                 "truncated body at record " + std::to_string(i) + ": " + path);
        }
    }
    return out;
}

void write_tuples_csv(const std::string& path, const std::vector<Tuple>& tuples) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw TupleFileError(TupleFileErrorKind::io, "cannot open for write: " + path);
    for (const Tuple& t : tuples) f << t.key << ',' << t.value << '\n';
    if (!f) throw TupleFileError(TupleFileErrorKind::io, "write failed: " + path);
}

std::vector<Tuple> read_tuples_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw TupleFileError(TupleFileErrorKind::io, "cannot open: " + path);
    std::vector<Tuple> out;
    std::string line;
    std::uint64_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        unsigned long long key = 0, value = 0;
        if (std::sscanf(line.c_str(), "%llu,%llu", &key, &value) != 2) {
            throw TupleFileError(TupleFileErrorKind::io,
                                 "bad csv record at line " + std::to_string(lineno) + ": " + path);
        }
        out.push_back(Tuple{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(value)});
    }
    return out;
}

std::vector<std::vector<Tuple>> split_round_robin(const std::vector<Tuple>& tuples,
                                                  std::uint32_t parts) {
    if (parts < 1) throw std::invalid_argument("split: parts must be >= 1");
    std::vector<std::vector<Tuple>> out(parts);
    for (std::uint32_t p = 0; p < parts; ++p) {
        out[p].reserve(tuples.size() / parts + 1);
    }
    for (std::size_t i = 0; i < tuples.size(); ++i) {
        out[i % parts].push_back(tuples[i]);
    }
    return out;
}

std::uint64_t stream_weight(const std::vector<Tuple>& tuples) {
    std::uint64_t w = 0;
    for (const Tuple& t : tuples) w += t.value;
    return w;
}

}  // namespace lmq
