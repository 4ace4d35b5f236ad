#include "tower/check.hpp"

#include <algorithm>

namespace tower {

std::string TypeError::format(const std::string& file) const {
    return file + ":" + std::to_string(pos.line) + ":" + std::to_string(pos.col) + ": error[" + rule +
           "]: " + message;
}

std::set<std::string> modified(const StmtPtr& s) {
    std::set<std::string> out;
    switch (s->kind) {
    case StmtKind::Skip: break;
    case StmtKind::Seq: {
        out = modified(s->a);
        auto rest = modified(s->b);
        out.insert(rest.begin(), rest.end());
        break;
    }
    case StmtKind::Assign:
    case StmtKind::UnAssign:
        out.insert(s->x);
        if (s->e.kind == ExprKind::Call) out.insert(s->e.args.begin(), s->e.args.end());
        break;
    case StmtKind::Swap:
        out.insert(s->x);
        out.insert(s->y);
        break;
    case StmtKind::MemSwap: out.insert(s->y); break;
    case StmtKind::If: out = modified(s->a); break;
    }
    return out;
}

namespace {

struct Fail {
    TypeError err;
};

[[noreturn]] void fail(const std::string& rule, SourcePos pos, const std::string& msg) {
    throw Fail{TypeError{rule, pos, msg}};
}

void require_wf(const Type& t, SourcePos pos) {
    std::string why = type_wf({}, t);
    if (why.empty()) return;
    fail(why.find("exposed") != std::string::npos ? "TypOk-Ind" : "TypOk-Var", pos, why);
}

std::string q(const std::string& v) { return "'" + v + "'"; }

Type literal_type(const Value& v, int k, SourcePos pos) {
    switch (v.kind) {
    case ValueKind::UInt:
        if (k < 32 && v.n >= (Word(1) << k))
            fail("TV-Num", pos, "literal " + std::to_string(v.n) + " does not fit in " +
                                    std::to_string(k) + "-bit word");
        return uint_type();
    case ValueKind::Pair:
        return pair_type(literal_type(v.first(), k, pos), literal_type(v.second(), k, pos));
    case ValueKind::Addr:
        if (k < 32 && v.n >= (Word(1) << k)) fail("TV-Ptr", pos, "address out of range");
        if (v.pointee) {
            std::string why = type_wf({}, v.pointee);
            if (!why.empty()) fail("TV-Ptr", pos, "pointer to ill-formed type: " + why);
        }
        return value_type(v);
    default: return value_type(v);
    }
}

class Checker {
public:
    explicit Checker(const CheckContext& cx) : cx_(cx) {}

    Type var(const VarContext& g, const std::string& x, SourcePos pos) const {
        auto it = g.find(x);
        if (it == g.end()) fail("TV-Var", pos, "unbound variable " + q(x));
        return it->second;
    }

    Type expr(const VarContext& g, const Expr& e, SourcePos pos) const {
        if (e.pos.line) pos = e.pos;
        switch (e.kind) {
        case ExprKind::Var: return var(g, e.x, pos);
        case ExprKind::Lit: return literal_type(e.lit, cx_.k, pos);
        case ExprKind::Pair: return pair_type(var(g, e.x, pos), var(g, e.y, pos));
        case ExprKind::Proj: {
            Type t = head(var(g, e.x, pos));
            if (t->kind != TypeKind::Pair)
                fail("TE-Proj", pos, "projection ." + std::to_string(e.index) + " from " + q(e.x) +
                                         " of non-pair type " + to_string(t));
            return e.index == 1 ? t->a : t->b;
        }
        case ExprKind::Unop: {
            Type t = var(g, e.x, pos);
            if (e.uop == UnOp::Not) {
                if (!type_equiv(t, bool_type())) fail("TE-Not", pos, "'not' needs bool, found " + to_string(t));
                return bool_type();
            }
            Type h = head(t);
            if (h->kind == TypeKind::Meta) type_equiv(h, uint_type());
            h = head(t);
            if (h->kind != TypeKind::UInt && h->kind != TypeKind::Ptr)
                fail("TE-Test", pos, "'test' needs uint or pointer, found " + to_string(t));
            return bool_type();
        }
        case ExprKind::Binop: return binop(g, e, pos);
        case ExprKind::Alloc: {
            std::string why = type_wf({}, e.ty);
            if (!why.empty()) fail("TE-Alloc", pos, "alloc of ill-formed type: " + why);
            return ptr_type(e.ty);
        }
        case ExprKind::Default: require_wf(e.ty, pos); return e.ty;
        case ExprKind::Call: return call(g, e, pos);
        }
        return unit_type();
    }

    Type binop(const VarContext& g, const Expr& e, SourcePos pos) const {
        Type a = var(g, e.x, pos), b = var(g, e.y, pos);
        auto need = [&](const Type& want, const char* rule) {
            if (!type_equiv(a, want) || !type_equiv(b, want))
                fail(rule, pos, std::string("operator '") + op_text(e.bop) + "' needs " + to_string(want) +
                                    " operands, found " + to_string(a) + " and " + to_string(b));
        };
        switch (e.bop) {
        case BinOp::And:
        case BinOp::Or: need(bool_type(), "TE-Lop"); return bool_type();
        case BinOp::Add:
        case BinOp::Sub:
        case BinOp::Mul: need(uint_type(), "TE-Aop"); return uint_type();
        case BinOp::Eq:
        case BinOp::Ne: {
            Type ha = head(a);
            if (ha->kind == TypeKind::Bool) {
                need(bool_type(), "TE-Cmp");
            } else {
                need(uint_type(), "TE-Cmp");
            }
            return bool_type();
        }
        case BinOp::Lt:
        case BinOp::Le:
        case BinOp::Gt:
        case BinOp::Ge: need(uint_type(), "TE-Cmp"); return bool_type();
        default: need(uint_type(), "TE-Bit"); return uint_type();
        }
    }

    Type call(const VarContext& g, const Expr& e, SourcePos pos) const {
        bool self = cx_.fn && cx_.fn->name == e.fn;
        std::string rule = self ? "TE-CallSelf" : e.bound ? "TE-CallBounded" : "TE-CallUnbounded";
        const FunSig* sig = nullptr;
        if (cx_.phi) {
            auto it = cx_.phi->find(e.fn);
            if (it != cx_.phi->end()) sig = &it->second;
        }
        if (!sig) fail(rule, pos, "unknown function " + q(e.fn));
        const auto& caller_bound = cx_.fn ? cx_.fn->bound_var : std::nullopt;
        if (self) {
            if (!sig->bound_var) fail(rule, pos, "recursive call to " + q(e.fn) + " requires a recursion bound");
            if (!e.bound || e.bound->kind != Bound::Kind::VarMinus || e.bound->var != *sig->bound_var)
                fail(rule, pos, "recursive call must use bound " + *sig->bound_var + "-n with n >= 1, found " +
                                    (e.bound ? to_string(*e.bound) : std::string("no bound")));
        } else if (!sig->bound_var) {
            if (e.bound) fail("TE-CallUnbounded", pos, q(e.fn) + " has no recursion bound but is called with one");
        } else {
            if (!e.bound) fail("TE-CallBounded", pos, q(e.fn) + " must be called with a recursion bound");
            if (e.bound->kind != Bound::Kind::Const && (!caller_bound || *caller_bound != e.bound->var))
                fail("TE-CallBounded", pos, "bound " + q(e.bound->var) + " is not the caller's bound variable");
        }
        if (e.args.size() != sig->params.size())
            fail(rule, pos, q(e.fn) + " expects " + std::to_string(sig->params.size()) + " arguments, got " +
                                std::to_string(e.args.size()));
        std::set<std::string> seen;
        for (std::size_t i = 0; i < e.args.size(); ++i) {
            if (!seen.insert(e.args[i]).second)
                fail(rule, pos, "argument " + q(e.args[i]) + " is passed more than once");
            Type t = var(g, e.args[i], pos);
            if (!type_equiv(t, sig->params[i]))
                fail(rule, pos, "argument " + std::to_string(i + 1) + " of " + q(e.fn) + ": expected " +
                                    to_string(sig->params[i]) + ", found " + to_string(t));
        }
        return sig->ret;
    }

    StmtPtr stmt(VarContext& g, const StmtPtr& s) const {
        switch (s->kind) {
        case StmtKind::Skip: return s;
        case StmtKind::Seq: {
            StmtPtr a = stmt(g, s->a);
            StmtPtr b = stmt(g, s->b);
            return mk_seq(a, b);
        }
        case StmtKind::Assign: {
            if (g.count(s->x)) fail("S-Assign", s->pos, "variable " + q(s->x) + " is already defined");
            Type t = expr(g, s->e, s->pos);
            g[s->x] = t;
            return mk_assign(s->x, s->e, s->pos, t);
        }
        case StmtKind::UnAssign: {
            auto it = g.find(s->x);
            if (it == g.end()) fail("S-UnAssign", s->pos, "variable " + q(s->x) + " is not defined");
            if (cx_.params.count(s->x))
                fail("S-UnAssign", s->pos, "parameter " + q(s->x) + " cannot be un-assigned");
            Type tx = it->second;
            g.erase(it);
            Type t = expr(g, s->e, s->pos);
            if (!type_equiv(tx, t))
                fail("S-UnAssign", s->pos, q(s->x) + " has type " + to_string(tx) + " but the expression has type " +
                                               to_string(t));
            return mk_unassign(s->x, s->e, s->pos, tx);
        }
        case StmtKind::Swap: {
            Type a = var(g, s->x, s->pos), b = var(g, s->y, s->pos);
            if (!type_equiv(a, b))
                fail("S-Swap", s->pos, "cannot swap " + q(s->x) + ": " + to_string(a) + " with " + q(s->y) + ": " +
                                           to_string(b));
            return s;
        }
        case StmtKind::MemSwap: {
            Type a = var(g, s->x, s->pos), b = var(g, s->y, s->pos);
            Type h = head(a);
            if (h->kind == TypeKind::Meta) {
                type_equiv(h, ptr_type(b));
                h = head(a);
            }
            if (h->kind != TypeKind::Ptr)
                fail("S-MemSwap", s->pos, q(s->x) + " is not a pointer (type " + to_string(a) + ")");
            if (s->x == s->y) fail("S-MemSwap", s->pos, "pointer and value must be distinct variables");
            if (!type_equiv(h->a, b))
                fail("S-MemSwap", s->pos, q(s->x) + " points to " + to_string(h->a) + " but " + q(s->y) + " has type " +
                                              to_string(b));
            return s;
        }
        case StmtKind::If: {
            Type c = var(g, s->x, s->pos);
            if (!type_equiv(c, bool_type()))
                fail("S-If", s->pos, "condition " + q(s->x) + " must be bool, found " + to_string(c));
            if (modified(s->a).count(s->x))
                fail("S-If", s->pos, "condition " + q(s->x) + " is modified by the branch");
            VarContext inner = g;
            StmtPtr body = stmt(inner, s->a);
            std::vector<std::string> diff;
            for (const auto& [v, t] : inner)
                if (!g.count(v)) diff.push_back("+" + v);
            for (const auto& [v, t] : g) {
                auto it = inner.find(v);
                if (it == inner.end()) {
                    diff.push_back("-" + v);
                } else if (!type_equiv(t, it->second)) {
                    diff.push_back("~" + v);
                }
            }
            if (!diff.empty()) {
                std::string list;
                for (const auto& d : diff) list += (list.empty() ? "" : ", ") + d;
                fail("S-If", s->pos, "branch must leave the context unchanged (" + list + ")");
            }
            return mk_if(s->x, body, s->pos);
        }
        }
        return s;
    }

private:
    const CheckContext& cx_;
};

Value zonk_value(const Value& v) {
    switch (v.kind) {
    case ValueKind::Pair: return Value::make_pair(zonk_value(v.first()), zonk_value(v.second()));
    case ValueKind::Null:
    case ValueKind::Addr: return Value::addr(zonk(v.pointee ? v.pointee : unit_type(), true), v.n);
    default: return v;
    }
}

Expr zonk_expr(const Expr& e) {
    Expr r = e;
    switch (e.kind) {
    case ExprKind::Lit: r.lit = zonk_value(e.lit); break;
    case ExprKind::Alloc: r.ty = zonk(e.ty, true); break;
    case ExprKind::Default:
        r = Expr::literal(default_value(zonk(e.ty, true)));
        r.pos = e.pos;
        break;
    default: break;
    }
    return r;
}

} // namespace

StmtPtr zonk_stmt(const StmtPtr& s) {
    switch (s->kind) {
    case StmtKind::Seq: return mk_seq(zonk_stmt(s->a), zonk_stmt(s->b));
    case StmtKind::Assign:
        return mk_assign(s->x, zonk_expr(s->e), s->pos, s->ty ? zonk(s->ty, true) : nullptr);
    case StmtKind::UnAssign:
        return mk_unassign(s->x, zonk_expr(s->e), s->pos, s->ty ? zonk(s->ty, true) : nullptr);
    case StmtKind::If: return mk_if(s->x, zonk_stmt(s->a), s->pos);
    default: return s;
    }
}

std::optional<TypeError> check_type_wf(const Type& t, SourcePos pos) {
    try {
        require_wf(t, pos);
    } catch (const Fail& f) {
        return f.err;
    }
    return std::nullopt;
}

Type check_expr(const CheckContext& cx, const VarContext& gamma, const Expr& e, std::optional<TypeError>* err) {
    try {
        Checker c(cx);
        return c.expr(gamma, e, e.pos);
    } catch (const Fail& f) {
        if (err) *err = f.err;
        return nullptr;
    }
}

std::optional<TypeError> check_stmt(const CheckContext& cx, VarContext& gamma, const StmtPtr& s) {
    try {
        Checker c(cx);
        c.stmt(gamma, s);
    } catch (const Fail& f) {
        return f.err;
    }
    return std::nullopt;
}

CheckResult check_program(const Program& p, int k) {
    CheckResult res;
    res.program = p;
    for (const auto& td : p.types)
        if (auto e = check_type_wf(td.ty, td.pos)) res.errors.push_back(*e);
    std::set<std::string> names;
    for (auto& f : res.program.funs) {
        try {
            if (!names.insert(f.name).second) fail("Fun-Decl", f.pos, "function " + q(f.name) + " is defined twice");
            std::set<std::string> pnames;
            FunSig sig;
            sig.bound_var = f.bound_var;
            for (const auto& prm : f.params) {
                if (!pnames.insert(prm.name).second)
                    fail("Fun-Decl", f.pos, "parameter " + q(prm.name) + " is declared twice");
                require_wf(prm.ty, f.pos);
                sig.params.push_back(prm.ty);
            }
            require_wf(f.ret, f.pos);
            sig.ret = f.ret;
            // Φ grows in declaration order: f sees itself and earlier functions only.
            res.phi[f.name] = sig;

            CheckContext cx;
            cx.phi = &res.phi;
            cx.fn = &f;
            cx.k = k;
            cx.params = pnames;
            VarContext g;
            for (const auto& prm : f.params) g[prm.name] = prm.ty;
            Checker c(cx);
            StmtPtr body = c.stmt(g, f.body);
            // annotated even if the return check fails, so the runtime leak check can be exercised
            f.body = zonk_stmt(body);

            auto rit = g.find(f.ret_var);
            if (rit == g.end()) fail("S-Return", f.ret_pos, "returned variable " + q(f.ret_var) + " is not defined");
            if (!type_equiv(rit->second, f.ret))
                fail("S-Return", f.ret_pos, "returns " + to_string(rit->second) + " but " + q(f.name) + " declares " +
                                                to_string(f.ret));
            std::vector<std::string> leaked, consumed;
            for (const auto& [v, t] : g)
                if (v != f.ret_var && !pnames.count(v)) leaked.push_back(v);
            for (const auto& prm : f.params)
                if (!g.count(prm.name)) consumed.push_back(prm.name);
            if (!leaked.empty()) {
                std::string list;
                for (const auto& v : leaked) list += (list.empty() ? "" : ", ") + v;
                fail("S-Return", f.ret_pos, "variables not uncomputed before return: " + list);
            }
            if (!consumed.empty()) fail("S-Return", f.ret_pos, "parameter " + q(consumed.front()) + " was consumed");
        } catch (const Fail& fl) {
            res.errors.push_back(fl.err);
        }
    }
    return res;
}

} // namespace tower
