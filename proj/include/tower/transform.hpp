#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tower/ast.hpp"

namespace tower {

class InlineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Program inversion: sequences reverse, assign and un-assign trade places,
// swaps stay, conditionals invert their bodies.
StmtPtr invert(const StmtPtr& s);

// Renames variables (binders and uses). Names absent from the map are kept.
StmtPtr rename(const StmtPtr& s, const std::map<std::string, std::string>& names);
Expr rename(const Expr& e, const std::map<std::string, std::string>& names);

struct InlineOptions {
    std::string entry = "main";
    std::optional<int> bound;          // value for the entry's bound variable
    std::size_t max_statements = 4000000;
};

struct Lowered {
    StmtPtr core;                      // call-free Core statement
    std::vector<Param> inputs;         // entry parameters (free variables of core)
    std::string output;                // entry return variable
    Type output_type;
    std::map<std::string, Type> var_types;  // every register name in core
    std::size_t expansions = 0;
};

// Unrolls every call reachable from the entry. Requires a checked program.
Lowered inline_program(const Program& checked, const InlineOptions& opts = {});

// Inlined entries keyed by (program text hash, entry, bound, word size).
class InlineCache {
public:
    std::shared_ptr<const Lowered> get(const Program& checked, const InlineOptions& opts, int k);
    std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<const Lowered>> entries_;
};

std::uint64_t program_hash(const Program& p);

} // namespace tower
