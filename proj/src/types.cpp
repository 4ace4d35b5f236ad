#include "tower/types.hpp"

#include <atomic>
#include <functional>
#include <map>
#include <utility>

namespace tower {

namespace {

Type make(TypeKind k) {
    auto n = std::make_shared<TypeNode>();
    n->kind = k;
    return n;
}

std::atomic<int> g_meta_counter{0};

} // namespace

Type unit_type() {
    static const Type t = make(TypeKind::Unit);
    return t;
}
Type uint_type() {
    static const Type t = make(TypeKind::UInt);
    return t;
}
Type bool_type() {
    static const Type t = make(TypeKind::Bool);
    return t;
}

Type pair_type(Type a, Type b) {
    auto n = std::make_shared<TypeNode>();
    n->kind = TypeKind::Pair;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

Type ptr_type(Type a) {
    auto n = std::make_shared<TypeNode>();
    n->kind = TypeKind::Ptr;
    n->a = std::move(a);
    return n;
}

Type var_type(const std::string& name) {
    auto n = std::make_shared<TypeNode>();
    n->kind = TypeKind::Var;
    n->name = name;
    return n;
}

Type ind_type(const std::string& name, Type body, bool named) {
    auto n = std::make_shared<TypeNode>();
    n->kind = TypeKind::Ind;
    n->name = name;
    n->a = std::move(body);
    n->named = named;
    return n;
}

Type fresh_meta() {
    auto n = std::make_shared<TypeNode>();
    n->kind = TypeKind::Meta;
    n->meta = std::make_shared<MetaCell>();
    n->meta->id = ++g_meta_counter;
    return n;
}

Type resolve(const Type& t) {
    Type cur = t;
    while (cur && cur->kind == TypeKind::Meta && cur->meta->binding)
        cur = cur->meta->binding;
    return cur;
}

Type head(const Type& t) {
    Type cur = resolve(t);
    for (int guard = 0; cur && cur->kind == TypeKind::Ind && guard < 64; ++guard)
        cur = resolve(unfold(cur));
    return cur;
}

bool has_meta(const Type& t) {
    Type r = resolve(t);
    if (!r) return false;
    switch (r->kind) {
    case TypeKind::Meta: return true;
    case TypeKind::Pair: return has_meta(r->a) || has_meta(r->b);
    case TypeKind::Ptr:
    case TypeKind::Ind: return has_meta(r->a);
    default: return false;
    }
}

Type zonk(const Type& t, bool default_unbound) {
    Type r = resolve(t);
    if (!r) return r;
    switch (r->kind) {
    case TypeKind::Meta: return default_unbound ? unit_type() : r;
    case TypeKind::Pair: {
        if (!has_meta(r)) return r;
        return pair_type(zonk(r->a, default_unbound), zonk(r->b, default_unbound));
    }
    case TypeKind::Ptr: {
        if (!has_meta(r)) return r;
        return ptr_type(zonk(r->a, default_unbound));
    }
    case TypeKind::Ind: {
        if (!has_meta(r)) return r;
        return ind_type(r->name, zonk(r->a, default_unbound), r->named);
    }
    default: return r;
    }
}

std::set<std::string> free_type_vars(const Type& t) {
    Type r = resolve(t);
    std::set<std::string> out;
    if (!r) return out;
    switch (r->kind) {
    case TypeKind::Var: out.insert(r->name); break;
    case TypeKind::Pair: {
        out = free_type_vars(r->a);
        auto rest = free_type_vars(r->b);
        out.insert(rest.begin(), rest.end());
        break;
    }
    case TypeKind::Ptr: out = free_type_vars(r->a); break;
    case TypeKind::Ind:
        out = free_type_vars(r->a);
        out.erase(r->name);
        break;
    default: break;
    }
    return out;
}

static bool occurs_free(const std::string& v, const Type& t) {
    Type r = resolve(t);
    if (!r) return false;
    switch (r->kind) {
    case TypeKind::Var: return r->name == v;
    case TypeKind::Pair: return occurs_free(v, r->a) || occurs_free(v, r->b);
    case TypeKind::Ptr: return occurs_free(v, r->a);
    case TypeKind::Ind: return r->name != v && occurs_free(v, r->a);
    default: return false;
    }
}

Type subst(const Type& t, const std::string& var, const Type& by) {
    Type r = resolve(t);
    if (!occurs_free(var, r)) return r;
    switch (r->kind) {
    case TypeKind::Var: return by;
    case TypeKind::Pair: return pair_type(subst(r->a, var, by), subst(r->b, var, by));
    case TypeKind::Ptr: return ptr_type(subst(r->a, var, by));
    case TypeKind::Ind: return ind_type(r->name, subst(r->a, var, by), r->named);
    default: return r;
    }
}

Type unfold(const Type& ind) {
    if (!ind || ind->kind != TypeKind::Ind) return ind;
    if (!ind->unfolded) ind->unfolded = subst(ind->a, ind->name, ind);
    return ind->unfolded;
}

std::set<std::string> exposed(const Type& t) {
    Type r = resolve(t);
    std::set<std::string> out;
    if (!r) return out;
    switch (r->kind) {
    case TypeKind::Var: out.insert(r->name); break;
    case TypeKind::Pair: {
        out = exposed(r->a);
        auto rest = exposed(r->b);
        out.insert(rest.begin(), rest.end());
        break;
    }
    case TypeKind::Ind:
        out = exposed(r->a);
        out.erase(r->name);
        break;
    default: break; // (), uint, bool, ptr, meta
    }
    return out;
}

std::string type_wf(const std::vector<std::string>& delta, const Type& t) {
    Type r = resolve(t);
    if (!r) return "missing type";
    switch (r->kind) {
    case TypeKind::Unit:
    case TypeKind::UInt:
    case TypeKind::Bool:
    case TypeKind::Meta: return {};
    case TypeKind::Var:
        for (const auto& d : delta)
            if (d == r->name) return {};
        return "unbound type variable '" + r->name + "'";
    case TypeKind::Pair: {
        auto e = type_wf(delta, r->a);
        return e.empty() ? type_wf(delta, r->b) : e;
    }
    case TypeKind::Ptr: return type_wf(delta, r->a);
    case TypeKind::Ind: {
        auto inner = delta;
        inner.push_back(r->name);
        auto e = type_wf(inner, r->a);
        if (!e.empty()) return e;
        if (exposed(r->a).count(r->name))
            return "type variable '" + r->name + "' is exposed (must occur under ptr<>)";
        return {};
    }
    }
    return {};
}

namespace {

bool bind_meta(const Type& m, const Type& other) {
    Type o = resolve(other);
    if (o.get() == m.get()) return true;
    // occurs check: a meta cannot contain itself
    std::function<bool(const Type&)> occurs = [&](const Type& x) {
        Type y = resolve(x);
        if (!y) return false;
        if (y.get() == m.get()) return true;
        switch (y->kind) {
        case TypeKind::Pair: return occurs(y->a) || occurs(y->b);
        case TypeKind::Ptr:
        case TypeKind::Ind: return occurs(y->a);
        default: return false;
        }
    };
    if (occurs(o)) return false;
    m->meta->binding = o;
    return true;
}

struct Equiv {
    bool unify;
    std::set<std::pair<const TypeNode*, const TypeNode*>> assumed;

    bool go(const Type& x0, const Type& y0) {
        Type x = resolve(x0), y = resolve(y0);
        if (x.get() == y.get()) return true;
        if (x->kind == TypeKind::Meta || y->kind == TypeKind::Meta) {
            if (!unify) return false;
            return x->kind == TypeKind::Meta ? bind_meta(x, y) : bind_meta(y, x);
        }
        auto key = std::make_pair(x.get(), y.get());
        if (assumed.count(key)) return true;
        if (x->kind == TypeKind::Ind || y->kind == TypeKind::Ind) {
            assumed.insert(key);
            Type xu = x->kind == TypeKind::Ind ? unfold(x) : x;
            Type yu = y->kind == TypeKind::Ind ? unfold(y) : y;
            return go(xu, yu);
        }
        if (x->kind != y->kind) return false;
        switch (x->kind) {
        case TypeKind::Var: return x->name == y->name;
        case TypeKind::Pair:
            assumed.insert(key);
            return go(x->a, y->a) && go(x->b, y->b);
        case TypeKind::Ptr:
            assumed.insert(key);
            return go(x->a, y->a);
        default: return true;
        }
    }
};

} // namespace

bool type_equiv(const Type& a, const Type& b, bool unify) {
    Equiv eq{unify, {}};
    return eq.go(a, b);
}

std::string to_string(const Type& t) {
    Type r = resolve(t);
    if (!r) return "?";
    switch (r->kind) {
    case TypeKind::Unit: return "()";
    case TypeKind::UInt: return "uint";
    case TypeKind::Bool: return "bool";
    case TypeKind::Pair: return "(" + to_string(r->a) + ", " + to_string(r->b) + ")";
    case TypeKind::Ptr: return "ptr<" + to_string(r->a) + ">";
    case TypeKind::Var: return r->name;
    case TypeKind::Ind:
        if (r->named) return r->name;
        return "mu " + r->name + ". " + to_string(r->a);
    case TypeKind::Meta: return "_";
    }
    return "?";
}

int word_count(const Type& t) {
    Type r = head(t);
    if (!r) return 0;
    switch (r->kind) {
    case TypeKind::UInt:
    case TypeKind::Bool:
    case TypeKind::Ptr: return 1;
    case TypeKind::Pair: return word_count(r->a) + word_count(r->b);
    default: return 0;
    }
}

} // namespace tower
