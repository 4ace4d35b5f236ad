#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tower/check.hpp"
#include "tower/interp.hpp"
#include "tower/syntax.hpp"

namespace tower::test {

std::string read_file(const std::string& path);
std::string test_dir();
std::string corpus_dir();

// mu t. (uint, ptr<t>)
Type list_type();
Type list_ptr();

Program checked(const std::string& source, int k = 8);

// A file of the negative suites: first line `// expect: RULE`, the offending
// line marked with `//!`.
struct NegativeCase {
    std::string path, expect;
    int line = 0;
};
std::vector<NegativeCase> negative_cases(const std::string& subdir);

struct NegativeOutcome {
    bool detected = false;
    std::string got;  // rule or step error kind
    int line = 0;
    std::string message;
};
// Static suite: the first checker diagnostic.
NegativeOutcome run_static_negative(const NegativeCase& c);
// Runtime suite: `main(x: uint)` run with x = 5. Programs rejected only by
// S-Return are forced through the interpreter to exercise the leak check.
NegativeOutcome run_runtime_negative(const NegativeCase& c);

// Random well-typed Core statements over a fixed parameter context.
class CoreFuzzer {
public:
    explicit CoreFuzzer(std::uint64_t seed) : rng_(seed) {}

    VarContext params() const;
    Registers initial_registers(HeapState& heap);
    // Accepted by check_stmt from params().
    StmtPtr statement(int length);

private:
    std::mt19937_64 rng_;
    int fresh_ = 0;

    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
    bool coin(int pct) { return pick(100) < pct; }
    std::string fresh() { return "v" + std::to_string(fresh_++); }
    std::vector<std::string> of_type(const VarContext& g, const Type& t) const;
    std::optional<Expr> expr_of(const VarContext& g, const Type& t);
    StmtPtr prim(VarContext& g, std::vector<std::pair<std::string, Expr>>& made);
    StmtPtr balanced(VarContext& g, int length);
};

} // namespace tower::test
