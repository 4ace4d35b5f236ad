#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tower/value.hpp"

namespace tower {

struct SectionSpec {
    int block_words = 1;
    int count = 0;
};

struct HeapConfig {
    std::vector<SectionSpec> sections{{1, 16}, {4, 8}};
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class HeapError : public std::runtime_error {
public:
    enum class Kind { OutOfMemory, DeallocNonZero, NoSizeClass, DeallocNull, BadAddress };
    HeapError(Kind kind, Word addr, const std::string& msg) : std::runtime_error(msg), kind(kind), addr(addr) {}
    Kind kind;
    Word addr;
};

const char* kind_name(HeapError::Kind k);

struct PermutationSource {
    enum class Kind { Identity, Seeded, Explicit } kind = Kind::Identity;
    std::uint64_t seed = 0;
    std::vector<std::vector<int>> perms;  // Explicit: one bijection on [1..count] per section

    static constexpr const char* kAlgorithm = "mt19937_64+fisher-yates/v1";

    static PermutationSource identity() { return {}; }
    static PermutationSource seeded(std::uint64_t seed);
    static PermutationSource explicit_perms(std::vector<std::vector<int>> perms);
};

// Uniform permutation of [1..n] from the versioned generator.
std::vector<int> seeded_permutation(std::uint64_t seed, int n, int salt = 0);

struct Section {
    int block_words = 1;
    int count = 0;
    Word base = 1;  // address of the first block
    Word hp = 0;    // allocation register
};

class HeapState {
public:
    static HeapState init(const HeapConfig& cfg, const PermutationSource& src, int k = 8);

    // Smallest section whose blocks hold `words` words; -1 if none.
    int size_class(int words) const;
    int section_of(Word addr) const;

    Word alloc(int words);
    Word alloc_in(int section);
    void dealloc(Word addr);

    bool allocated(Word addr) const;
    std::vector<Word> allocated_blocks() const;
    std::size_t free_count(int section) const;

    std::vector<Word>& block(Word addr);
    const std::vector<Word>& block(Word addr) const;

    const std::vector<Section>& sections() const { return sections_; }
    int k() const { return k_; }
    std::size_t total_blocks() const { return blocks_.size() - 1; }

    // hp registers followed by every block word, in address order.
    std::string fingerprint() const;
    bool operator==(const HeapState& o) const;

    std::uint64_t touched = 0;  // cells read or written by alloc/dealloc

private:
    int k_ = 8;
    std::vector<Section> sections_;
    std::vector<std::vector<Word>> blocks_;  // index 0 is the null slot
    std::vector<char> live_;
};

struct OracleResult {
    bool equal = true;
    std::size_t permutations = 0;
    std::string detail;
};

// Runs one op sequence from a given initial heap and returns the physical
// representation it leaves behind.
using HeapRun = std::function<std::string(HeapState&)>;

// Compares fingerprint multisets over every explicit permutation of every
// section (or the identity alone).
OracleResult hi_distribution_oracle(const HeapConfig& cfg, int k, const HeapRun& a, const HeapRun& b,
                                    bool identity_only = false);

struct HeapOp {
    enum class Kind { Alloc, Dealloc } kind = Kind::Alloc;
    std::string handle;
    int words = 1;
};

std::vector<HeapOp> parse_heap_ops(const std::string& text);  // "alloc a; alloc b; dealloc a"
OracleResult hi_distribution_oracle(const std::vector<HeapOp>& a, const std::vector<HeapOp>& b, int n,
                                    bool identity_only = false);

std::vector<std::vector<int>> all_permutations(int n);

} // namespace tower
