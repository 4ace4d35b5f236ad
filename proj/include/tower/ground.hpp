#pragma once

#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tower/check.hpp"
#include "tower/circuit.hpp"
#include "tower/interp.hpp"
#include "tower/transform.hpp"

#ifndef TOWER_CORPUS_DIR
#define TOWER_CORPUS_DIR "corpus"
#endif

namespace tower::ground {

// Abstract value of an argument or result.
struct AValue {
    enum class Kind { Unit, Num, Bool, List, Str, Set } kind = Kind::Unit;
    Word n = 0;               // Num, Bool (0/1), Str length
    Word bits = 0;            // Str
    std::vector<Word> items;  // List in order; Set in insertion order

    static AValue unit() { return {}; }
    static AValue num(Word v);
    static AValue boolean(bool b);
    static AValue list(std::vector<Word> xs);
    static AValue str(Word len, Word bits);
    static AValue set(std::vector<Word> keys);
};

// Sets compare as sets.
bool operator==(const AValue& a, const AValue& b);
inline bool operator!=(const AValue& a, const AValue& b) { return !(a == b); }
std::string to_string(const AValue& v);
// [1,2]  {1,2}  "0110"  5  true  ()
AValue parse_avalue(const std::string& text);

class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ManifestError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CorpusEntry {
    std::string name;       // structure.op
    std::string file;       // relative to the corpus directory
    std::string entry;      // function name
    std::vector<std::string> params;  // parameter kinds, see corpus/README.md
    std::string result;     // unit uint bool str
    std::string bound;      // none n+1 k+1 depth+1
    std::string sweep;      // n or k
    std::string gates_form; // const affine poly2 exp
    std::string qubits_form;
    std::string paper_qubits, paper_gates;
    std::string structure;
    bool mutates = false;
    bool table1 = true;
    std::optional<bool> hi_expected;
};

std::vector<CorpusEntry> load_manifest(const std::string& path);

struct Sizes {
    int n = 3;      // elements
    int k = 8;
    int depth = 4;  // trie key width
};

std::optional<int> bound_for(const CorpusEntry& e, int n, int k, int depth);

struct ModelOutput {
    AValue result;
    std::vector<AValue> params;  // parameters after the call
};

// Classical reference semantics of each entry.
ModelOutput reference(const CorpusEntry& e, const std::vector<AValue>& in, int k, int depth);

// Inputs satisfying the entry's preconditions; n is clamped to what the
// entry accepts (e.g. at least one element for pop_front).
std::vector<AValue> random_inputs(const CorpusEntry& e, std::mt19937_64& rng, const Sizes& s);

// ---- heap encodings ----

// Pointee of a pointer type.
Type pointee_of(const Type& ptr);
// True for ptr<mu. (uint, ptr<...>)>.
bool is_list_ptr(const Type& t);

Value encode_list(HeapState& heap, const Type& ptr_ty, const std::vector<Word>& xs);
std::vector<Word> decode_list(const HeapState& heap, const Value& l);
Value encode_tree(HeapState& heap, const Type& ptr_ty, const std::vector<Word>& keys);
std::vector<Word> decode_tree(const HeapState& heap, const Value& t, int k);
std::vector<Word> decode_trie(const HeapState& heap, const Value& t, int depth);
std::vector<Word> decode_hash(const HeapState& heap, const Value& m, int k);
std::vector<Word> decode_sorted(const HeapState& heap, const Value& l);
Word hash_bucket(Word key, int k);

struct Fit {
    bool exact = false;
    int degree = -1;             // smallest degree that fits every point
    std::vector<double> coeffs;  // c0 + c1 x + c2 x^2 ...
    std::string law(char var) const;
};
// Exact polynomial fit (degree <= max_degree) over integer samples.
Fit fit_exact(const std::vector<long long>& xs, const std::vector<long long>& ys, int max_degree);

struct EntryRecord {
    std::string name;
    bool pass = true;
    std::string detail;
    int trials = 0;
    std::uint64_t steps = 0;   // total over the trials
    std::uint64_t gates = 0, qubits = 0;  // at the largest tested size
};

bool form_matches(const std::string& form, const std::vector<long long>& xs, const std::vector<long long>& ys,
                  Fit* fit = nullptr);

struct Sweep {
    char var = 'n';
    std::vector<long long> xs, steps, gates, qubits;
    Fit gates_fit, qubits_fit;
    bool gates_ok = false, qubits_ok = false;
};

struct HiCase {
    std::string name;
    std::string a, b;         // the two histories, as text
    bool expect_equal = true;
    OracleResult result;
    bool ok() const { return result.equal == expect_equal; }
};

class Harness;
// The insertion-order and allocator pairs used to probe history independence.
std::vector<HiCase> standard_hi_cases(Harness& h);

class Harness {
public:
    explicit Harness(std::string dir = TOWER_CORPUS_DIR);

    const std::string& dir() const { return dir_; }
    const std::vector<CorpusEntry>& entries() const { return entries_; }
    const CorpusEntry& entry(const std::string& name) const;

    // Parsed and checked; throws on diagnostics.
    const Program& program(const std::string& file);
    std::shared_ptr<const Lowered> lowered(const CorpusEntry& e, std::optional<int> bound, int k);

    struct Prepared {
        std::shared_ptr<const Lowered> low;
        Registers R;
        HeapState heap;
        std::optional<int> bound;
        int n = 0;
    };
    Prepared prepare(const CorpusEntry& e, const std::vector<AValue>& in, const RunConfig& cfg, int depth);

    struct Outcome {
        Prepared prep;
        RunResult run;
        AValue result;
        std::vector<AValue> params;
    };
    Outcome run(const CorpusEntry& e, const std::vector<AValue>& in, const RunConfig& cfg, int depth);

    // Decodes the parameters of `e` from a register file.
    std::vector<AValue> decode_params(const CorpusEntry& e, const Lowered& low, const Registers& R,
                                      const HeapState& heap, int k, int depth) const;

    // Runs an entry on raw argument values (in parameter order).
    RunResult run_raw(const CorpusEntry& e, const std::vector<Value>& args, HeapState heap, const RunConfig& cfg,
                      std::optional<int> bound, Direction dir = Direction::Forward);

    // Builds a set by running the structure's insert entry key by key.
    Value build_set(const std::string& structure, const std::vector<Word>& keys, HeapState& heap,
                    const RunConfig& cfg, int depth);

    // Fingerprint multisets of two insertion orders over every permutation
    // of the heap's initial free lists.
    OracleResult hi_check(const std::string& structure, const std::vector<Word>& a, const std::vector<Word>& b,
                          const HeapConfig& heap, int k, int depth, bool identity_only = false);

    // Forward run, reference check, then forward run of the inverse.
    EntryRecord check_entry(const CorpusEntry& e, int trials, std::uint64_t seed, const RunConfig& cfg,
                            const Sizes& max_sizes);

    // Cost of the entry compiled at a size (n or k per its sweep).
    CostReport cost_at(const CorpusEntry& e, int size, int k);

    // Gates and qubits over n = 1..6 (k = 8) or k = 4..12, fitted to the
    // entry's expected forms.
    Sweep sweep_costs(const CorpusEntry& e);

    // Interpreter steps on a list of each length (list entries only).
    std::vector<long long> list_steps(const CorpusEntry& e, const std::vector<int>& lengths, int k = 8);

private:
    std::string dir_;
    std::vector<CorpusEntry> entries_;
    std::map<std::string, Program> programs_;
    InlineCache cache_;
};

} // namespace tower::ground
