#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tower/types.hpp"
#include "tower/value.hpp"

namespace tower {

struct SourcePos {
    int line = 0;
    int col = 0;
};

enum class UnOp { Not, Test };

enum class BinOp {
    And, Or,            // bool
    Add, Sub, Mul,      // uint arithmetic modulo 2^k
    Eq, Ne, Lt, Le, Gt, Ge,
    BitAnd, BitOr, BitXor, Shl, Shr,
};

const char* op_text(UnOp op);
const char* op_text(BinOp op);

struct Bound {
    enum class Kind { Const, Var, VarMinus } kind = Kind::Const;
    std::string var;
    int n = 0;
};

std::string to_string(const Bound& b);

enum class ExprKind { Var, Lit, Pair, Proj, Unop, Binop, Alloc, Default, Call };

// Kernel expression: operands are variables only.
struct Expr {
    ExprKind kind = ExprKind::Lit;
    std::string x, y;  // operands
    Value lit;
    int index = 1;     // Proj: 1 or 2
    UnOp uop = UnOp::Not;
    BinOp bop = BinOp::Add;
    Type ty;           // Alloc / Default payload type
    std::string fn;    // Call
    std::optional<Bound> bound;
    std::vector<std::string> args;
    SourcePos pos;

    static Expr var(std::string x);
    static Expr literal(Value v);
    static Expr make_pair(std::string a, std::string b);
    static Expr proj(int i, std::string x);
    static Expr unop(UnOp op, std::string x);
    static Expr binop(BinOp op, std::string a, std::string b);
    static Expr alloc(Type t);
    static Expr default_of(Type t);
    static Expr call(std::string fn, std::optional<Bound> b, std::vector<std::string> args);
};

bool operator==(const Expr& a, const Expr& b);

// Variables read by the expression.
std::vector<std::string> expr_vars(const Expr& e);

enum class StmtKind { Skip, Seq, Assign, UnAssign, Swap, MemSwap, If };

struct Stmt;
using StmtPtr = std::shared_ptr<const Stmt>;

struct Stmt {
    StmtKind kind = StmtKind::Skip;
    std::string x, y;  // Assign/UnAssign: x; Swap/MemSwap: x, y; If: condition x
    Expr e;
    Type ty;           // Assign/UnAssign: type of e once checked
    StmtPtr a, b;      // Seq: a; b. If: body in a.
    SourcePos pos;
};

StmtPtr mk_skip();
StmtPtr mk_seq(StmtPtr a, StmtPtr b);
StmtPtr mk_seq(const std::vector<StmtPtr>& parts);
StmtPtr mk_assign(std::string x, Expr e, SourcePos pos = {}, Type ty = nullptr);
StmtPtr mk_unassign(std::string x, Expr e, SourcePos pos = {}, Type ty = nullptr);
StmtPtr mk_swap(std::string x, std::string y, SourcePos pos = {});
StmtPtr mk_memswap(std::string x, std::string y, SourcePos pos = {});
StmtPtr mk_if(std::string x, StmtPtr body, SourcePos pos = {});

// Structural equality (positions ignored, types compared by printing).
bool stmt_equal(const StmtPtr& a, const StmtPtr& b);

// Flattens nested Seq nodes left to right, dropping skips.
void flatten_seq(const StmtPtr& s, std::vector<StmtPtr>& out);
std::size_t stmt_size(const StmtPtr& s);

std::vector<std::string> free_vars(const StmtPtr& s);

struct Param {
    std::string name;
    Type ty;
};

struct FunDecl {
    std::string name;
    std::optional<std::string> bound_var;
    std::vector<Param> params;
    Type ret;
    StmtPtr body;          // statements before the final return
    std::string ret_var;
    SourcePos pos;
    SourcePos ret_pos;
};

struct TypeDecl {
    std::string name;
    Type ty;
    SourcePos pos;
};

struct Program {
    std::string file = "<input>";
    std::vector<TypeDecl> types;
    std::vector<FunDecl> funs;

    const FunDecl* find(const std::string& name) const;
};

// Kernel pretty printer; output re-parses with reserved names enabled.
std::string print_expr(const Expr& e);
std::string print_stmt(const StmtPtr& s, int indent = 0);
std::string pretty_print(const Program& p);

} // namespace tower
