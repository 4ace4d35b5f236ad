#include "tower/ast.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace tower {

const char* op_text(UnOp op) {
    return op == UnOp::Not ? "not" : "test";
}

const char* op_text(BinOp op) {
    switch (op) {
    case BinOp::And: return "&&";
    case BinOp::Or: return "||";
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
    case BinOp::BitAnd: return "&";
    case BinOp::BitOr: return "|";
    case BinOp::BitXor: return "^";
    case BinOp::Shl: return "<<";
    case BinOp::Shr: return ">>";
    }
    return "?";
}

std::string to_string(const Bound& b) {
    switch (b.kind) {
    case Bound::Kind::Const: return std::to_string(b.n);
    case Bound::Kind::Var: return b.var;
    case Bound::Kind::VarMinus: return b.var + "-" + std::to_string(b.n);
    }
    return "?";
}

Expr Expr::var(std::string x) {
    Expr e;
    e.kind = ExprKind::Var;
    e.x = std::move(x);
    return e;
}
Expr Expr::literal(Value v) {
    Expr e;
    e.kind = ExprKind::Lit;
    e.lit = std::move(v);
    return e;
}
Expr Expr::make_pair(std::string a, std::string b) {
    Expr e;
    e.kind = ExprKind::Pair;
    e.x = std::move(a);
    e.y = std::move(b);
    return e;
}
Expr Expr::proj(int i, std::string x) {
    Expr e;
    e.kind = ExprKind::Proj;
    e.index = i;
    e.x = std::move(x);
    return e;
}
Expr Expr::unop(UnOp op, std::string x) {
    Expr e;
    e.kind = ExprKind::Unop;
    e.uop = op;
    e.x = std::move(x);
    return e;
}
Expr Expr::binop(BinOp op, std::string a, std::string b) {
    Expr e;
    e.kind = ExprKind::Binop;
    e.bop = op;
    e.x = std::move(a);
    e.y = std::move(b);
    return e;
}
Expr Expr::alloc(Type t) {
    Expr e;
    e.kind = ExprKind::Alloc;
    e.ty = std::move(t);
    return e;
}
Expr Expr::default_of(Type t) {
    Expr e;
    e.kind = ExprKind::Default;
    e.ty = std::move(t);
    return e;
}
Expr Expr::call(std::string fn, std::optional<Bound> b, std::vector<std::string> args) {
    Expr e;
    e.kind = ExprKind::Call;
    e.fn = std::move(fn);
    e.bound = std::move(b);
    e.args = std::move(args);
    return e;
}

static bool same_type_text(const Type& a, const Type& b) {
    if (!a || !b) return !a && !b;
    return to_string(a) == to_string(b);
}

bool operator==(const Expr& a, const Expr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
    case ExprKind::Var: return a.x == b.x;
    case ExprKind::Lit: return a.lit.kind == b.lit.kind && a.lit == b.lit;
    case ExprKind::Pair: return a.x == b.x && a.y == b.y;
    case ExprKind::Proj: return a.index == b.index && a.x == b.x;
    case ExprKind::Unop: return a.uop == b.uop && a.x == b.x;
    case ExprKind::Binop: return a.bop == b.bop && a.x == b.x && a.y == b.y;
    case ExprKind::Alloc:
    case ExprKind::Default: return same_type_text(a.ty, b.ty);
    case ExprKind::Call:
        if (a.fn != b.fn || a.args != b.args || a.bound.has_value() != b.bound.has_value())
            return false;
        return !a.bound || to_string(*a.bound) == to_string(*b.bound);
    }
    return false;
}

std::vector<std::string> expr_vars(const Expr& e) {
    switch (e.kind) {
    case ExprKind::Var:
    case ExprKind::Proj:
    case ExprKind::Unop: return {e.x};
    case ExprKind::Pair:
    case ExprKind::Binop: return {e.x, e.y};
    case ExprKind::Call: return e.args;
    default: return {};
    }
}

StmtPtr mk_skip() {
    static const StmtPtr s = std::make_shared<Stmt>();
    return s;
}

StmtPtr mk_seq(StmtPtr a, StmtPtr b) {
    auto s = std::make_shared<Stmt>();
    s->kind = StmtKind::Seq;
    s->a = std::move(a);
    s->b = std::move(b);
    return s;
}

StmtPtr mk_seq(const std::vector<StmtPtr>& parts) {
    if (parts.empty()) return mk_skip();
    StmtPtr acc = parts.back();
    for (std::size_t i = parts.size() - 1; i-- > 0;) acc = mk_seq(parts[i], acc);
    return acc;
}

StmtPtr mk_assign(std::string x, Expr e, SourcePos pos, Type ty) {
    auto s = std::make_shared<Stmt>();
    s->kind = StmtKind::Assign;
    s->x = std::move(x);
    s->e = std::move(e);
    s->pos = pos;
    s->ty = std::move(ty);
    return s;
}

StmtPtr mk_unassign(std::string x, Expr e, SourcePos pos, Type ty) {
    auto s = std::make_shared<Stmt>();
    s->kind = StmtKind::UnAssign;
    s->x = std::move(x);
    s->e = std::move(e);
    s->pos = pos;
    s->ty = std::move(ty);
    return s;
}

StmtPtr mk_swap(std::string x, std::string y, SourcePos pos) {
    auto s = std::make_shared<Stmt>();
    s->kind = StmtKind::Swap;
    s->x = std::move(x);
    s->y = std::move(y);
    s->pos = pos;
    return s;
}

StmtPtr mk_memswap(std::string x, std::string y, SourcePos pos) {
    auto s = std::make_shared<Stmt>();
    s->kind = StmtKind::MemSwap;
    s->x = std::move(x);
    s->y = std::move(y);
    s->pos = pos;
    return s;
}

StmtPtr mk_if(std::string x, StmtPtr body, SourcePos pos) {
    auto s = std::make_shared<Stmt>();
    s->kind = StmtKind::If;
    s->x = std::move(x);
    s->a = std::move(body);
    s->pos = pos;
    return s;
}

bool stmt_equal(const StmtPtr& a, const StmtPtr& b) {
    if (a.get() == b.get()) return true;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
    case StmtKind::Skip: return true;
    case StmtKind::Seq: return stmt_equal(a->a, b->a) && stmt_equal(a->b, b->b);
    case StmtKind::Assign:
    case StmtKind::UnAssign: return a->x == b->x && a->e == b->e;
    case StmtKind::Swap:
    case StmtKind::MemSwap: return a->x == b->x && a->y == b->y;
    case StmtKind::If: return a->x == b->x && stmt_equal(a->a, b->a);
    }
    return false;
}

void flatten_seq(const StmtPtr& s, std::vector<StmtPtr>& out) {
    if (s->kind == StmtKind::Seq) {
        flatten_seq(s->a, out);
        flatten_seq(s->b, out);
    } else if (s->kind != StmtKind::Skip) {
        out.push_back(s);
    }
}

std::size_t stmt_size(const StmtPtr& s) {
    switch (s->kind) {
    case StmtKind::Seq: return stmt_size(s->a) + stmt_size(s->b);
    case StmtKind::If: return 1 + stmt_size(s->a);
    default: return 1;
    }
}

namespace {

// Free variables of a statement, in first-occurrence order.
void collect_free(const StmtPtr& s, std::set<std::string>& bound, std::set<std::string>& seen,
                  std::vector<std::string>& out) {
    auto use = [&](const std::string& v) {
        if (!bound.count(v) && seen.insert(v).second) out.push_back(v);
    };
    switch (s->kind) {
    case StmtKind::Skip: break;
    case StmtKind::Seq:
        collect_free(s->a, bound, seen, out);
        collect_free(s->b, bound, seen, out);
        break;
    case StmtKind::Assign:
        for (const auto& v : expr_vars(s->e)) use(v);
        bound.insert(s->x);
        break;
    case StmtKind::UnAssign:
        for (const auto& v : expr_vars(s->e)) use(v);
        use(s->x);
        bound.erase(s->x);
        break;
    case StmtKind::Swap:
    case StmtKind::MemSwap:
        use(s->x);
        use(s->y);
        break;
    case StmtKind::If: {
        use(s->x);
        auto inner = bound;
        collect_free(s->a, inner, seen, out);
        break;
    }
    }
}

void indent_to(std::ostringstream& os, int indent) {
    for (int i = 0; i < indent; ++i) os << "    ";
}

void print_into(std::ostringstream& os, const StmtPtr& s, int indent) {
    switch (s->kind) {
    case StmtKind::Skip:
        indent_to(os, indent);
        os << "skip;\n";
        break;
    case StmtKind::Seq: {
        std::vector<StmtPtr> parts;
        flatten_seq(s, parts);
        if (parts.empty()) {
            indent_to(os, indent);
            os << "skip;\n";
        }
        for (const auto& p : parts) print_into(os, p, indent);
        break;
    }
    case StmtKind::Assign:
    case StmtKind::UnAssign:
        indent_to(os, indent);
        os << "let " << s->x << (s->kind == StmtKind::Assign ? " <- " : " -> ")
           << print_expr(s->e) << ";\n";
        break;
    case StmtKind::Swap:
        indent_to(os, indent);
        os << s->x << " <-> " << s->y << ";\n";
        break;
    case StmtKind::MemSwap:
        indent_to(os, indent);
        os << "*" << s->x << " <-> " << s->y << ";\n";
        break;
    case StmtKind::If:
        indent_to(os, indent);
        os << "if " << s->x << " {\n";
        if (s->a->kind != StmtKind::Skip) print_into(os, s->a, indent + 1);
        indent_to(os, indent);
        os << "}\n";
        break;
    }
}

} // namespace

std::vector<std::string> free_vars(const StmtPtr& s) {
    std::set<std::string> bound, seen;
    std::vector<std::string> out;
    collect_free(s, bound, seen, out);
    return out;
}

std::string print_expr(const Expr& e) {
    switch (e.kind) {
    case ExprKind::Var: return e.x;
    case ExprKind::Lit: return to_string(e.lit);
    case ExprKind::Pair: return "(" + e.x + ", " + e.y + ")";
    case ExprKind::Proj: return e.x + "." + std::to_string(e.index);
    case ExprKind::Unop: return std::string(op_text(e.uop)) + " " + e.x;
    case ExprKind::Binop: return e.x + " " + op_text(e.bop) + " " + e.y;
    case ExprKind::Alloc: return "alloc<" + to_string(e.ty) + ">";
    case ExprKind::Default: return "default<" + to_string(e.ty) + ">";
    case ExprKind::Call: {
        std::string out = e.fn;
        if (e.bound) out += "[" + to_string(*e.bound) + "]";
        out += "(";
        for (std::size_t i = 0; i < e.args.size(); ++i) {
            if (i) out += ", ";
            out += e.args[i];
        }
        return out + ")";
    }
    }
    return "?";
}

std::string print_stmt(const StmtPtr& s, int indent) {
    std::ostringstream os;
    print_into(os, s, indent);
    return os.str();
}

const FunDecl* Program::find(const std::string& name) const {
    for (const auto& f : funs)
        if (f.name == name) return &f;
    return nullptr;
}

std::string pretty_print(const Program& p) {
    std::ostringstream os;
    for (const auto& t : p.types) {
        Type ty = resolve(t.ty);
        std::string body = (ty->kind == TypeKind::Ind && ty->name == t.name) ? to_string(ty->a)
                                                                              : to_string(ty);
        os << "type " << t.name << " = " << body << ";\n";
    }
    if (!p.types.empty()) os << "\n";
    for (const auto& f : p.funs) {
        os << "fun " << f.name;
        if (f.bound_var) os << "[" << *f.bound_var << "]";
        os << "(";
        for (std::size_t i = 0; i < f.params.size(); ++i) {
            if (i) os << ", ";
            os << f.params[i].name << ": " << to_string(f.params[i].ty);
        }
        os << ")";
        if (f.ret && resolve(f.ret)->kind != TypeKind::Unit) os << " -> " << to_string(f.ret);
        os << " {\n";
        std::vector<StmtPtr> parts;
        flatten_seq(f.body, parts);
        for (const auto& s : parts) print_into(os, s, 1);
        os << "    return " << f.ret_var << ";\n}\n\n";
    }
    return os.str();
}

} // namespace tower
