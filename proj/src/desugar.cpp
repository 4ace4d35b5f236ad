#include <algorithm>
#include <functional>
#include <set>

#include "tower/syntax.hpp"
#include "tower/transform.hpp"

namespace tower {

namespace {

bool is_literal(const SExprPtr& e) {
    switch (e->kind) {
    case SExprKind::Int:
    case SExprKind::Bool:
    case SExprKind::Null:
    case SExprKind::Unit: return true;
    case SExprKind::Pair: return is_literal(e->kids[0]) && is_literal(e->kids[1]);
    default: return false;
    }
}

Value literal_value(const SExprPtr& e) {
    switch (e->kind) {
    case SExprKind::Int: return Value::uint(static_cast<Word>(e->n));
    case SExprKind::Bool: return Value::boolean(e->n != 0);
    case SExprKind::Null: return Value::null(fresh_meta());
    case SExprKind::Pair: return Value::make_pair(literal_value(e->kids[0]), literal_value(e->kids[1]));
    default: return Value::unit();
    }
}

struct NetEffect {
    std::set<std::string> added, removed;
};

NetEffect net_effect(const StmtPtr& s) {
    std::vector<StmtPtr> parts;
    flatten_seq(s, parts);
    NetEffect ne;
    for (const auto& p : parts) {
        if (p->kind == StmtKind::Assign) {
            if (!ne.removed.erase(p->x)) ne.added.insert(p->x);
        } else if (p->kind == StmtKind::UnAssign) {
            if (!ne.added.erase(p->x)) ne.removed.insert(p->x);
        }
    }
    return ne;
}

class Desugarer {
public:
    Program run(const SurfaceProgram& sp) {
        Program p;
        p.file = sp.file;
        p.types = sp.types;
        for (const auto& f : sp.funs) p.funs.push_back(fun(f));
        return p;
    }

private:
    int counter_ = 0;

    std::string fresh(const std::string& base) {
        std::string stem = !base.empty() && base[0] == kReservedPrefix ? base.substr(1) : base;
        return std::string(1, kReservedPrefix) + stem + std::to_string(++counter_);
    }

    FunDecl fun(const SFun& f) {
        FunDecl d;
        d.name = f.name;
        d.bound_var = f.bound_var;
        d.params = f.params;
        d.ret = f.ret;
        d.pos = f.pos;
        if (f.body.empty() || f.body.back()->kind != SStmtKind::Return)
            throw DesugarError(f.pos, "function '" + f.name + "' must end with a return statement");
        std::vector<StmtPtr> out;
        for (std::size_t i = 0; i + 1 < f.body.size(); ++i) stmt(*f.body[i], out);
        const SStmt& ret = *f.body.back();
        d.ret_pos = ret.pos;
        if (ret.e->kind == SExprKind::Var) {
            d.ret_var = ret.e->name;
        } else {
            d.ret_var = fresh("ret");
            assign_expr(d.ret_var, ret.e, ret.pos, out);
        }
        d.body = mk_seq(out);
        return d;
    }

    StmtPtr block(const SBlock& b) {
        std::vector<StmtPtr> out;
        for (const auto& s : b) stmt(*s, out);
        return mk_seq(out);
    }

    void stmt(const SStmt& s, std::vector<StmtPtr>& out) {
        switch (s.kind) {
        case SStmtKind::Skip: out.push_back(mk_skip()); break;
        case SStmtKind::Return:
            throw DesugarError(s.pos, "return must be the last statement of a function");
        case SStmtKind::Swap: out.push_back(mk_swap(s.x, s.y, s.pos)); break;
        case SStmtKind::MemSwap: out.push_back(mk_memswap(s.x, s.y, s.pos)); break;
        case SStmtKind::Let: {
            std::vector<StmtPtr> fwd;
            let(s.pat, s.e, s.pos, fwd);
            if (s.forward) {
                out.insert(out.end(), fwd.begin(), fwd.end());
            } else {
                out.push_back(invert(mk_seq(fwd)));
            }
            break;
        }
        case SStmtKind::With: {
            StmtPtr a = block(s.body);
            StmtPtr b = block(*s.other);
            out.push_back(mk_seq({a, b, invert(a)}));
            break;
        }
        case SStmtKind::If: if_stmt(s, out); break;
        }
    }

    void if_stmt(const SStmt& s, std::vector<StmtPtr>& out) {
        if (s.e->kind != SExprKind::Var) {
            // with { let c <- e; } do if c ...
            std::string c = fresh("cond");
            std::vector<StmtPtr> pre;
            assign_expr(c, s.e, s.pos, pre);
            StmtPtr a = mk_seq(pre);
            std::vector<StmtPtr> mid;
            branch(c, s, mid);
            out.push_back(mk_seq({a, mk_seq(mid), invert(a)}));
            return;
        }
        branch(s.e->name, s, out);
    }

    void branch(const std::string& c, const SStmt& s, std::vector<StmtPtr>& out) {
        StmtPtr then_s = block(s.body);
        if (!s.other) {
            out.push_back(mk_if(c, then_s, s.pos));
            return;
        }
        StmtPtr else_s = block(*s.other);
        NetEffect ea = net_effect(then_s), eb = net_effect(else_s);
        if (ea.added != eb.added || ea.removed != eb.removed)
            throw DesugarError(s.pos, "if/else branches must define and consume the same variables");
        std::vector<StmtPtr> before, after;
        auto adapt = [&](StmtPtr body) {
            std::map<std::string, std::string> names;
            std::vector<StmtPtr> pro, epi;
            for (const auto& v : ea.added) {
                std::string local = fresh(v + "_");
                names[v] = local;
                epi.push_back(mk_swap(v, local, s.pos));
                epi.push_back(mk_unassign(local, Expr::default_of(fresh_meta()), s.pos));
            }
            for (const auto& v : ea.removed) {
                std::string local = fresh(v + "_");
                names[v] = local;
                pro.push_back(mk_assign(local, Expr::default_of(fresh_meta()), s.pos));
                pro.push_back(mk_swap(v, local, s.pos));
            }
            if (names.empty()) return body;
            std::vector<StmtPtr> parts = pro;
            parts.push_back(rename(body, names));
            parts.insert(parts.end(), epi.begin(), epi.end());
            return mk_seq(parts);
        };
        for (const auto& v : ea.added)
            before.push_back(mk_assign(v, Expr::default_of(fresh_meta()), s.pos));
        for (const auto& v : ea.removed)
            after.push_back(mk_unassign(v, Expr::default_of(fresh_meta()), s.pos));
        StmtPtr a = adapt(then_s), b = adapt(else_s);
        std::string nc = fresh("nc");
        out.insert(out.end(), before.begin(), before.end());
        out.push_back(mk_assign(nc, Expr::unop(UnOp::Not, c), s.pos));
        out.push_back(mk_if(c, a, s.pos));
        out.push_back(mk_if(nc, b, s.pos));
        out.push_back(mk_unassign(nc, Expr::unop(UnOp::Not, c), s.pos));
        out.insert(out.end(), after.begin(), after.end());
    }

    void pattern_vars(const SPatPtr& p, std::set<std::string>& seen) {
        if (p->kind == SPatKind::Var) {
            if (!seen.insert(p->name).second)
                throw DesugarError(p->pos, "pattern binds '" + p->name + "' more than once");
        } else if (p->kind == SPatKind::Pair) {
            pattern_vars(p->a, seen);
            pattern_vars(p->b, seen);
        }
    }

    void let(const SPatPtr& pat, const SExprPtr& e, SourcePos pos, std::vector<StmtPtr>& out) {
        std::set<std::string> seen;
        pattern_vars(pat, seen);
        if (pat->kind == SPatKind::Var) {
            assign_expr(pat->name, e, pos, out);
            return;
        }
        if (e->kind == SExprKind::Var) {
            bind(pat, e->name, false, pos, out);
            return;
        }
        std::string t = fresh("t");
        assign_expr(t, e, pos, out);
        bind(pat, t, true, pos, out);
    }

    // Destructures `src` into the pattern; a consumable source is un-assigned.
    void bind(const SPatPtr& pat, const std::string& src, bool consumable, SourcePos pos,
              std::vector<StmtPtr>& out) {
        switch (pat->kind) {
        case SPatKind::Var:
            out.push_back(mk_assign(pat->name, Expr::var(src), pos));
            if (consumable) out.push_back(mk_unassign(src, Expr::var(pat->name), pos));
            return;
        case SPatKind::Lit:
            if (consumable) out.push_back(mk_unassign(src, Expr::literal(literal_value(pat->lit)), pos));
            return;
        case SPatKind::Pair: {
            SPatPtr kids[2] = {pat->a, pat->b};
            std::string names[2];
            for (int i = 0; i < 2; ++i) {
                names[i] = kids[i]->kind == SPatKind::Var ? kids[i]->name : fresh("p");
                out.push_back(mk_assign(names[i], Expr::proj(i + 1, src), pos));
            }
            if (consumable) out.push_back(mk_unassign(src, Expr::make_pair(names[0], names[1]), pos));
            for (int i = 0; i < 2; ++i)
                if (kids[i]->kind != SPatKind::Var) bind(kids[i], names[i], true, pos, out);
            return;
        }
        }
    }

    // Evaluates a nested operand into a variable; temporaries are recorded
    // in `pre` so the caller can uncompute them in reverse order.
    std::string atom(const SExprPtr& e, SourcePos pos, std::vector<StmtPtr>& pre) {
        if (e->kind == SExprKind::Var) return e->name;
        std::string t = fresh("t");
        assign_expr(t, e, pos, pre);
        return t;
    }

    void assign_expr(const std::string& x, const SExprPtr& e, SourcePos pos, std::vector<StmtPtr>& out) {
        std::vector<StmtPtr> pre;
        Expr k;
        switch (e->kind) {
        case SExprKind::Var: k = Expr::var(e->name); break;
        case SExprKind::Int:
        case SExprKind::Bool:
        case SExprKind::Null:
        case SExprKind::Unit: k = Expr::literal(literal_value(e)); break;
        case SExprKind::Pair:
            if (is_literal(e)) {
                k = Expr::literal(literal_value(e));
            } else {
                std::string a = atom(e->kids[0], pos, pre);
                std::string b = atom(e->kids[1], pos, pre);
                k = Expr::make_pair(a, b);
            }
            break;
        case SExprKind::Proj: k = Expr::proj(e->index, atom(e->kids[0], pos, pre)); break;
        case SExprKind::Unop: k = Expr::unop(e->uop, atom(e->kids[0], pos, pre)); break;
        case SExprKind::Binop: {
            const auto& l = e->kids[0];
            const auto& r = e->kids[1];
            bool null_cmp = (e->bop == BinOp::Eq || e->bop == BinOp::Ne) &&
                            (l->kind == SExprKind::Null || r->kind == SExprKind::Null);
            if (null_cmp) {
                const auto& other = l->kind == SExprKind::Null ? r : l;
                std::string v = atom(other, pos, pre);
                if (e->bop == BinOp::Eq) {
                    k = Expr::unop(UnOp::Test, v);
                } else {
                    std::string t = fresh("t");
                    pre.push_back(mk_assign(t, Expr::unop(UnOp::Test, v), pos));
                    k = Expr::unop(UnOp::Not, t);
                }
            } else {
                std::string a = atom(l, pos, pre);
                std::string b = atom(r, pos, pre);
                k = Expr::binop(e->bop, a, b);
            }
            break;
        }
        case SExprKind::Call: {
            std::vector<std::string> args;
            for (const auto& a : e->kids) {
                if (a->kind != SExprKind::Var)
                    throw DesugarError(a->pos, "call arguments must be variables");
                args.push_back(a->name);
            }
            k = Expr::call(e->name, e->bound, args);
            break;
        }
        case SExprKind::Alloc: k = Expr::alloc(e->ty); break;
        case SExprKind::Default:
            // ill-formed types are left for the checker to report
            k = has_meta(e->ty) || !type_wf({}, e->ty).empty() ? Expr::default_of(e->ty)
                                                                : Expr::literal(default_value(e->ty));
            break;
        }
        k.pos = e->pos;
        out.insert(out.end(), pre.begin(), pre.end());
        out.push_back(mk_assign(x, k, pos));
        for (auto it = pre.rbegin(); it != pre.rend(); ++it) out.push_back(invert(*it));
    }
};

// Gives each re-binding of a name a fresh name so binders are unique per
// function. A variable live at the entry of an `if` keeps its name when the
// body consumes and re-creates it, since the body must restore the context.
class Renamer {
public:
    FunDecl run(const FunDecl& f) {
        FunDecl out = f;
        std::set<std::string> live;
        for (const auto& p : f.params) {
            ever_.insert(p.name);
            live.insert(p.name);
        }
        std::set<std::string> protect;
        out.body = walk(f.body, live, protect);
        out.ret_var = name(f.ret_var);
        return out;
    }

private:
    std::map<std::string, std::string> cur_;
    std::set<std::string> ever_;
    int counter_ = 0;

    std::string name(const std::string& v) const {
        auto it = cur_.find(v);
        return it == cur_.end() ? v : it->second;
    }

    Expr expr(const Expr& e) const {
        Expr r = e;
        switch (e.kind) {
        case ExprKind::Var:
        case ExprKind::Proj:
        case ExprKind::Unop: r.x = name(e.x); break;
        case ExprKind::Pair:
        case ExprKind::Binop:
            r.x = name(e.x);
            r.y = name(e.y);
            break;
        case ExprKind::Call:
            for (auto& a : r.args) a = name(a);
            break;
        default: break;
        }
        return r;
    }

    StmtPtr walk(const StmtPtr& s, std::set<std::string>& live, const std::set<std::string>& protect) {
        switch (s->kind) {
        case StmtKind::Skip: return s;
        case StmtKind::Seq: {
            StmtPtr a = walk(s->a, live, protect);
            StmtPtr b = walk(s->b, live, protect);
            return mk_seq(a, b);
        }
        case StmtKind::Assign: {
            Expr e = expr(s->e);
            std::string x = s->x;
            if (protect.count(x) || live.count(x)) {
                // still live: keep the name so the double binding is reported
                cur_[x] = name(x);
            } else if (ever_.count(x)) {
                std::string stem = x[0] == kReservedPrefix ? x.substr(1) : x;
                cur_[x] = std::string(1, kReservedPrefix) + stem + "'" + std::to_string(++counter_);
            } else {
                cur_[x] = x;
            }
            ever_.insert(x);
            live.insert(x);
            return mk_assign(cur_[x], e, s->pos, s->ty);
        }
        case StmtKind::UnAssign: {
            Expr e = expr(s->e);
            live.erase(s->x);
            return mk_unassign(name(s->x), e, s->pos, s->ty);
        }
        case StmtKind::Swap: return mk_swap(name(s->x), name(s->y), s->pos);
        case StmtKind::MemSwap: return mk_memswap(name(s->x), name(s->y), s->pos);
        case StmtKind::If: {
            std::string c = name(s->x);
            auto saved = cur_;
            auto inner_live = live;
            std::set<std::string> inner_protect = protect;
            inner_protect.insert(live.begin(), live.end());
            StmtPtr body = walk(s->a, inner_live, inner_protect);
            cur_ = saved;
            return mk_if(c, body, s->pos);
        }
        }
        return s;
    }
};

} // namespace

Program desugar(const SurfaceProgram& p) {
    Desugarer d;
    return d.run(p);
}

Program alpha_rename(const Program& p) {
    Program out = p;
    for (auto& f : out.funs) {
        Renamer r;
        f = r.run(f);
    }
    return out;
}

Program load_program(const std::string& source, const std::string& file, ParseOptions opts) {
    return alpha_rename(desugar(parse(source, file, opts)));
}

} // namespace tower
