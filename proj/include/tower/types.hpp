#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

namespace tower {

enum class TypeKind { Unit, UInt, Bool, Pair, Ptr, Var, Ind, Meta };

struct TypeNode;
using Type = std::shared_ptr<const TypeNode>;

// Inference cell for holes (`_`, bare `null`, hoisted defaults).
struct MetaCell {
    int id = 0;
    Type binding;
};

struct TypeNode {
    TypeKind kind = TypeKind::Unit;
    std::string name;  // Var: variable; Ind: binder
    Type a, b;         // Pair: (a, b); Ptr: a; Ind: a is the body
    bool named = false; // Ind introduced by a `type` declaration
    std::shared_ptr<MetaCell> meta;
    mutable Type unfolded; // memoized one-step unfolding of an Ind
};

Type unit_type();
Type uint_type();
Type bool_type();
Type pair_type(Type a, Type b);
Type ptr_type(Type a);
Type var_type(const std::string& name);
Type ind_type(const std::string& name, Type body, bool named = false);
Type fresh_meta();

// Follow bound metavariables at the head.
Type resolve(const Type& t);
// Follow metas and unfold inductives until the head is structural.
Type head(const Type& t);
// Deep resolution; unbound metas become unit when `default_unbound` is set.
Type zonk(const Type& t, bool default_unbound = false);
bool has_meta(const Type& t);

Type subst(const Type& t, const std::string& var, const Type& by);
Type unfold(const Type& ind);

std::set<std::string> free_type_vars(const Type& t);
std::set<std::string> exposed(const Type& t);

// Returns an empty string when well formed, else a diagnostic.
std::string type_wf(const std::vector<std::string>& delta, const Type& t);

// Coinductive equivalence; binds unresolved metas when `unify` is set.
bool type_equiv(const Type& a, const Type& b, bool unify = true);

std::string to_string(const Type& t);

// Machine words occupied by a value of the type (unit = 0, pointer = 1).
int word_count(const Type& t);

} // namespace tower
