#include "tower/transform.hpp"

#include <functional>

#include "tower/syntax.hpp"

namespace tower {

StmtPtr invert(const StmtPtr& s) {
    switch (s->kind) {
    case StmtKind::Skip:
    case StmtKind::Swap:
    case StmtKind::MemSwap: return s;
    case StmtKind::Seq: return mk_seq(invert(s->b), invert(s->a));
    case StmtKind::Assign: return mk_unassign(s->x, s->e, s->pos, s->ty);
    case StmtKind::UnAssign: return mk_assign(s->x, s->e, s->pos, s->ty);
    case StmtKind::If: return mk_if(s->x, invert(s->a), s->pos);
    }
    return s;
}

static const std::string& lookup(const std::map<std::string, std::string>& names, const std::string& v) {
    auto it = names.find(v);
    return it == names.end() ? v : it->second;
}

Expr rename(const Expr& e, const std::map<std::string, std::string>& names) {
    Expr r = e;
    switch (e.kind) {
    case ExprKind::Var:
    case ExprKind::Proj:
    case ExprKind::Unop: r.x = lookup(names, e.x); break;
    case ExprKind::Pair:
    case ExprKind::Binop:
        r.x = lookup(names, e.x);
        r.y = lookup(names, e.y);
        break;
    case ExprKind::Call:
        for (auto& a : r.args) a = lookup(names, a);
        break;
    default: break;
    }
    return r;
}

StmtPtr rename(const StmtPtr& s, const std::map<std::string, std::string>& names) {
    switch (s->kind) {
    case StmtKind::Skip: return s;
    case StmtKind::Seq: return mk_seq(rename(s->a, names), rename(s->b, names));
    case StmtKind::Assign: return mk_assign(lookup(names, s->x), rename(s->e, names), s->pos, s->ty);
    case StmtKind::UnAssign:
        return mk_unassign(lookup(names, s->x), rename(s->e, names), s->pos, s->ty);
    case StmtKind::Swap: return mk_swap(lookup(names, s->x), lookup(names, s->y), s->pos);
    case StmtKind::MemSwap: return mk_memswap(lookup(names, s->x), lookup(names, s->y), s->pos);
    case StmtKind::If: return mk_if(lookup(names, s->x), rename(s->a, names), s->pos);
    }
    return s;
}

namespace {

class Inliner {
public:
    Inliner(const Program& p, const InlineOptions& opts) : prog_(p), opts_(opts) {}

    Lowered run() {
        const FunDecl* entry = prog_.find(opts_.entry);
        if (!entry) throw InlineError("no function named '" + opts_.entry + "'");
        std::optional<int> bound;
        if (entry->bound_var) {
            if (!opts_.bound) throw InlineError("'" + entry->name + "' needs a recursion bound");
            bound = std::max(0, *opts_.bound);
        }
        Frame fr;
        fr.fn = entry;
        fr.bound = bound;
        for (const auto& p : entry->params) {
            fr.names[p.name] = p.name;
            out_.var_types[p.name] = p.ty;
        }
        Lowered res;
        res.core = body(entry->body, fr);
        res.inputs = entry->params;
        res.output = entry->ret_var;
        res.output_type = entry->ret;
        res.var_types = std::move(out_.var_types);
        res.expansions = expansions_;
        return res;
    }

private:
    struct Frame {
        const FunDecl* fn = nullptr;
        std::optional<int> bound;
        std::string prefix;  // empty for the entry
        std::map<std::string, std::string> names;
    };

    const Program& prog_;
    const InlineOptions& opts_;
    Lowered out_;
    std::size_t expansions_ = 0;
    std::size_t emitted_ = 0;
    int instance_ = 0;

    std::string local(Frame& fr, const std::string& v) {
        auto it = fr.names.find(v);
        if (it != fr.names.end()) return it->second;
        std::string n = fr.prefix.empty() ? v : fr.prefix + v;
        fr.names[v] = n;
        return n;
    }

    Expr expr(const Expr& e, Frame& fr) {
        Expr r = e;
        switch (e.kind) {
        case ExprKind::Var:
        case ExprKind::Proj:
        case ExprKind::Unop: r.x = local(fr, e.x); break;
        case ExprKind::Pair:
        case ExprKind::Binop:
            r.x = local(fr, e.x);
            r.y = local(fr, e.y);
            break;
        case ExprKind::Call:
            for (auto& a : r.args) a = local(fr, a);
            break;
        default: break;
        }
        return r;
    }

    void note(const std::string& name, const Type& t) {
        if (t) out_.var_types.emplace(name, t);
    }

    StmtPtr body(const StmtPtr& s, Frame& fr) {
        switch (s->kind) {
        case StmtKind::Skip: return s;
        case StmtKind::Seq: {
            StmtPtr a = body(s->a, fr);
            StmtPtr b = body(s->b, fr);
            return mk_seq(a, b);
        }
        case StmtKind::Assign:
        case StmtKind::UnAssign: {
            bool fwd = s->kind == StmtKind::Assign;
            std::string x = local(fr, s->x);
            note(x, s->ty);
            if (s->e.kind == ExprKind::Call) {
                StmtPtr expanded = call(s->e, x, s->ty, s->pos, fr);
                return fwd ? expanded : invert(expanded);
            }
            if (++emitted_ > opts_.max_statements)
                throw InlineError("inlined program exceeds " + std::to_string(opts_.max_statements) +
                                  " statements");
            Expr e = expr(s->e, fr);
            return fwd ? mk_assign(x, e, s->pos, s->ty) : mk_unassign(x, e, s->pos, s->ty);
        }
        case StmtKind::Swap: return mk_swap(local(fr, s->x), local(fr, s->y), s->pos);
        case StmtKind::MemSwap: return mk_memswap(local(fr, s->x), local(fr, s->y), s->pos);
        case StmtKind::If: {
            std::string c = local(fr, s->x);
            return mk_if(c, body(s->a, fr), s->pos);
        }
        }
        return s;
    }

    int resolve_bound(const Bound& b, const Frame& fr) {
        switch (b.kind) {
        case Bound::Kind::Const: return b.n;
        case Bound::Kind::Var:
            if (!fr.bound) throw InlineError("bound variable '" + b.var + "' has no value");
            return *fr.bound;
        case Bound::Kind::VarMinus:
            if (!fr.bound) throw InlineError("bound variable '" + b.var + "' has no value");
            return std::max(0, *fr.bound - b.n);
        }
        return 0;
    }

    // Forward expansion of `let dest <- f[b](args)`.
    StmtPtr call(const Expr& e, const std::string& dest, const Type& ty, SourcePos pos, Frame& fr) {
        const FunDecl* callee = prog_.find(e.fn);
        if (!callee) throw InlineError("call to unknown function '" + e.fn + "'");
        std::optional<int> bound;
        if (callee->bound_var) {
            if (!e.bound) throw InlineError("call to '" + e.fn + "' lacks a bound");
            int v = resolve_bound(*e.bound, fr);
            if (callee == fr.fn && fr.bound && v >= *fr.bound)
                throw InlineError("recursive call to '" + e.fn + "' does not decrease its bound");
            if (v == 0) {
                Type rt = ty ? ty : callee->ret;
                return mk_assign(dest, Expr::literal(default_value(rt)), pos, rt);
            }
            bound = v;
        }
        ++expansions_;
        Frame inner;
        inner.fn = callee;
        inner.bound = bound;
        inner.prefix = (fr.prefix.empty() ? std::string(1, kReservedPrefix) : fr.prefix) + callee->name +
                       "#" + std::to_string(++instance_) + "/";
        bool ret_is_param = false;
        for (std::size_t i = 0; i < callee->params.size(); ++i) {
            const std::string& p = callee->params[i].name;
            inner.names[p] = local(fr, e.args.at(i));
            if (p == callee->ret_var) ret_is_param = true;
        }
        if (!ret_is_param) inner.names[callee->ret_var] = dest;
        StmtPtr b = body(callee->body, inner);
        if (ret_is_param) {
            Type rt = ty ? ty : callee->ret;
            b = mk_seq(b, mk_assign(dest, Expr::var(inner.names[callee->ret_var]), pos, rt));
        }
        return b;
    }
};

} // namespace

Lowered inline_program(const Program& checked, const InlineOptions& opts) {
    Inliner in(checked, opts);
    return in.run();
}

std::uint64_t program_hash(const Program& p) {
    std::string text = pretty_print(p);
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::shared_ptr<const Lowered> InlineCache::get(const Program& checked, const InlineOptions& opts, int k) {
    std::string key = std::to_string(program_hash(checked)) + "|" + opts.entry + "|" +
                      (opts.bound ? std::to_string(*opts.bound) : "-") + "|" + std::to_string(k);
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = entries_.find(key);
        if (it != entries_.end()) return it->second;
    }
    auto lowered = std::make_shared<const Lowered>(inline_program(checked, opts));
    std::lock_guard<std::mutex> lock(mu_);
    entries_.emplace(key, lowered);
    return lowered;
}

std::size_t InlineCache::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.size();
}

} // namespace tower
