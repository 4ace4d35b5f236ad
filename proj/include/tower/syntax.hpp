#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tower/ast.hpp"

namespace tower {

class ParseError : public std::runtime_error {
public:
    ParseError(SourcePos pos, const std::string& msg);
    SourcePos pos;
    std::string message;
};

class DesugarError : public std::runtime_error {
public:
    DesugarError(SourcePos pos, const std::string& msg);
    SourcePos pos;
    std::string message;
};

// Names produced by the toolchain start with this character; source
// identifiers cannot.
inline constexpr char kReservedPrefix = '$';

// ---- surface AST ----

enum class SExprKind { Var, Int, Bool, Null, Unit, Pair, Proj, Unop, Binop, Call, Alloc, Default };

struct SExpr;
using SExprPtr = std::shared_ptr<SExpr>;

struct SExpr {
    SExprKind kind = SExprKind::Unit;
    std::string name;      // Var, Call
    unsigned long long n = 0;  // Int, Bool
    int index = 1;         // Proj
    UnOp uop = UnOp::Not;
    BinOp bop = BinOp::Add;
    Type ty;               // Alloc / Default
    std::optional<Bound> bound;
    std::vector<SExprPtr> kids;
    SourcePos pos;
};

enum class SPatKind { Var, Lit, Pair };

struct SPat;
using SPatPtr = std::shared_ptr<SPat>;

struct SPat {
    SPatKind kind = SPatKind::Var;
    std::string name;
    SExprPtr lit;  // Lit: a literal expression (number, bool, null, ())
    SPatPtr a, b;
    SourcePos pos;
};

enum class SStmtKind { Skip, Let, Swap, MemSwap, If, With, Return };

struct SStmt;
using SStmtPtr = std::shared_ptr<SStmt>;
using SBlock = std::vector<SStmtPtr>;

struct SStmt {
    SStmtKind kind = SStmtKind::Skip;
    SPatPtr pat;
    bool forward = true;  // Let: `<-` (true) or `->`
    SExprPtr e;           // Let rhs, If condition, Return value
    std::string x, y;     // Swap / MemSwap
    SBlock body;          // If then-branch, With block
    std::optional<SBlock> other;  // If else-branch, With do-block
    SourcePos pos;
};

struct SFun {
    std::string name;
    std::optional<std::string> bound_var;
    std::vector<Param> params;
    Type ret;
    SBlock body;
    SourcePos pos;
};

struct SurfaceProgram {
    std::string file = "<input>";
    std::vector<TypeDecl> types;
    std::vector<SFun> funs;
};

struct ParseOptions {
    bool allow_reserved = false;  // accept `$`-prefixed names (printed kernel code)
};

SurfaceProgram parse(const std::string& source, const std::string& file = "<input>",
                     ParseOptions opts = {});

// A single type; names without a binder in the text stay type variables.
Type parse_type(const std::string& text);

Program desugar(const SurfaceProgram& p);

// Renames re-bound variables inside each function so binders are unique.
Program alpha_rename(const Program& p);

// parse + desugar + alpha_rename.
Program load_program(const std::string& source, const std::string& file = "<input>",
                     ParseOptions opts = {});

} // namespace tower
