#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "tower/ast.hpp"
#include "tower/boson.hpp"
#include "tower/transform.hpp"

namespace tower {

using Registers = std::map<std::string, Value>;

enum class Direction { Forward, Reverse };

enum class StepErrorKind { StuckUnAssign, StuckSeqStep, Leak, OutOfMemory, StepLimitExceeded, InvalidState };

const char* kind_name(StepErrorKind k);

class StepError : public std::runtime_error {
public:
    StepError(StepErrorKind kind, SourcePos pos, const std::string& detail);

    StepErrorKind kind;
    SourcePos pos;
    std::string var;
    std::optional<Value> expected, held;
    std::string derivation;  // e.g. "Stuck-SeqStep x3 / Stuck-UnAssign"
    std::string detail;
    std::vector<Word> leaked_blocks;
    std::vector<std::string> leaked_vars;

    std::string format(const std::string& file = "") const;
};

struct Diagnostic {
    SourcePos pos;
    std::string kind;  // NullWrite-Ignored, BadAddress-Ignored
    std::string message;
};

struct TraceStats {
    std::uint64_t steps = 0;
    std::map<std::string, std::uint64_t> by_kind;  // skip, assign, unassign, swap, memswap, if
    std::size_t peak_registers = 0;
    std::uint64_t allocs = 0, deallocs = 0;
    // Where each live register / block came from, for leak reports.
    std::map<std::string, SourcePos> born;
    std::map<Word, SourcePos> alloc_site;
};

struct RunConfig {
    int k = 8;
    HeapConfig heap;
    PermutationSource perm;
    std::uint64_t step_limit = 200000000;
    bool validate = false;  // typing validity of the residual state at every step
};

RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& cfg);

// Expression evaluation against the register file; Alloc touches the heap.
Value eval_forward(const Expr& e, const Registers& R, HeapState& heap, int k, const Type& ty, TraceStats* st = nullptr);

// One primitive statement (no Seq / If) in either direction.
void exec_leaf(const Stmt& s, Direction dir, Registers& R, HeapState& heap, int k, TraceStats& st,
               std::vector<Diagnostic>& diags);

class Machine {
public:
    Machine(StmtPtr s, Registers R, HeapState heap, Direction dir, const RunConfig& cfg);

    bool done() const;
    // Applies one step rule; throws StepError when stuck.
    void step();
    void run_to_end();

    // Residual statement in the machine's own direction (its forward reading
    // when reversing is invert(residual())).
    StmtPtr residual() const;
    // Throws StepError(InvalidState) if the state is not valid.
    void check_valid() const;

    Registers& registers() { return R_; }
    const Registers& registers() const { return R_; }
    HeapState& heap() { return heap_; }
    const HeapState& heap() const { return heap_; }
    const TraceStats& stats() const { return stats_; }
    const std::vector<Diagnostic>& diagnostics() const { return diags_; }

private:
    StmtPtr cur_;
    std::vector<StmtPtr> cont_;
    Registers R_;
    HeapState heap_;
    Direction dir_;
    RunConfig cfg_;
    TraceStats stats_;
    std::vector<Diagnostic> diags_;
};

struct RunResult {
    Registers R;
    HeapState heap;
    TraceStats stats;
    std::vector<Diagnostic> diagnostics;
};

// Runs s to completion, then checks that R holds exactly `keep` and that
// every allocated block is reachable from those registers.
RunResult run_statement(const StmtPtr& s, Registers R, HeapState heap, Direction dir, const RunConfig& cfg,
                        const std::set<std::string>& keep);

// Blocks reachable from the registers through typed pointers.
std::set<Word> reachable_blocks(const Registers& R, const HeapState& heap);

// Reads the value stored at a pointer (typed by its pointee annotation).
Value load(const HeapState& heap, const Value& ptr);

// Whole-program run of an inlined entry. Forward: R starts as the inputs and
// ends with inputs plus output. Reverse: the converse.
RunResult run_lowered(const Lowered& low, Registers R, HeapState heap, Direction dir, const RunConfig& cfg);

// Direct interpretation of calls (no inlining): frames with parameter
// aliasing by copy-in/copy-out. Used to cross-check inline_program.
RunResult run_with_calls(const Program& checked, const std::string& entry, std::optional<int> bound, Registers R,
                         HeapState heap, Direction dir, const RunConfig& cfg);

} // namespace tower
