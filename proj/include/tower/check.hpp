#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tower/ast.hpp"

namespace tower {

struct TypeError {
    std::string rule;     // e.g. "S-If", "TE-CallSelf", "TypOk-Ind"
    SourcePos pos;
    std::string message;

    std::string format(const std::string& file) const;
};

using VarContext = std::map<std::string, Type>;

struct FunSig {
    std::optional<std::string> bound_var;
    std::vector<Type> params;
    Type ret;
};

using FunctionContext = std::map<std::string, FunSig>;

struct CheckContext {
    const FunctionContext* phi = nullptr;
    const FunDecl* fn = nullptr;   // function being checked, if any
    int k = 8;                     // word size for literal range checks
    std::set<std::string> params;  // parameters may not be un-assigned
};

std::set<std::string> modified(const StmtPtr& s);

// Throw-free single judgments; return the error when the rule fails.
std::optional<TypeError> check_type_wf(const Type& t, SourcePos pos = {});
Type check_expr(const CheckContext& cx, const VarContext& gamma, const Expr& e,
                std::optional<TypeError>* err);
std::optional<TypeError> check_stmt(const CheckContext& cx, VarContext& gamma, const StmtPtr& s);

struct CheckResult {
    Program program;  // annotated: statement types filled, metavariables resolved
    FunctionContext phi;
    std::vector<TypeError> errors;
    bool ok() const { return errors.empty(); }
};

CheckResult check_program(const Program& p, int k = 8);

// Resolves metavariables inside a statement and replaces default<τ> by
// literal values.
StmtPtr zonk_stmt(const StmtPtr& s);

} // namespace tower
