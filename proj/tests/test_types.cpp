#include <gtest/gtest.h>

#include <filesystem>
#include <functional>

#include "support.hpp"
#include "tower/transform.hpp"

using namespace tower;
using namespace tower::test;

namespace {

// Tree prefix of a type to a given depth, unfolding inductives as needed.
std::string prefix(const Type& t, int depth) {
    Type h = head(t);
    if (depth == 0) return "?";
    switch (h->kind) {
    case TypeKind::Unit: return "unit";
    case TypeKind::UInt: return "uint";
    case TypeKind::Bool: return "bool";
    case TypeKind::Pair: return "(" + prefix(h->a, depth - 1) + "," + prefix(h->b, depth - 1) + ")";
    case TypeKind::Ptr: return "ptr<" + prefix(h->a, depth - 1) + ">";
    default: return "!";
    }
}

Type mu(const std::string& v, Type body) { return ind_type(v, std::move(body)); }

CheckContext ctx_for(const FunctionContext& phi, const FunDecl& f) {
    CheckContext cx;
    cx.phi = &phi;
    cx.fn = &f;
    for (const auto& prm : f.params) cx.params.insert(prm.name);
    return cx;
}

} // namespace

TEST(WellFormed, Examples) {
    EXPECT_EQ(type_wf({}, list_type()), "");
    EXPECT_NE(type_wf({}, mu("t", pair_type(uint_type(), var_type("t")))), "");
    EXPECT_EQ(type_wf({}, uint_type()), "");
    EXPECT_NE(type_wf({}, var_type("q")), "");
    EXPECT_TRUE(check_type_wf(mu("t", var_type("t"))).has_value());
    EXPECT_EQ(check_type_wf(mu("t", var_type("t")))->rule, "TypOk-Ind");
}

TEST(Equiv, Examples) {
    EXPECT_TRUE(type_equiv(list_type(), pair_type(uint_type(), list_ptr()), false));
    EXPECT_FALSE(type_equiv(uint_type(), bool_type(), false));
    Type a = mu("t", ptr_type(var_type("t")));
    Type b = mu("s", ptr_type(ptr_type(var_type("s"))));
    EXPECT_TRUE(type_equiv(a, b, false));
    EXPECT_EQ(prefix(a, 8), prefix(b, 8));
}

TEST(Equiv, AgreesWithPrefixUnfoldingOracle) {
    std::vector<Type> ts = {
        list_type(),
        pair_type(uint_type(), list_ptr()),
        mu("t", pair_type(uint_type(), ptr_type(pair_type(uint_type(), ptr_type(var_type("t")))))),
        mu("t", pair_type(bool_type(), ptr_type(var_type("t")))),
        mu("t", ptr_type(var_type("t"))),
        mu("s", ptr_type(ptr_type(var_type("s")))),
        ptr_type(mu("t", ptr_type(var_type("t")))),
        mu("t", pair_type(uint_type(), pair_type(ptr_type(var_type("t")), ptr_type(var_type("t"))))),
        mu("t", pair_type(uint_type(), pair_type(ptr_type(var_type("t")), ptr_type(uint_type())))),
        uint_type(),
        pair_type(uint_type(), uint_type()),
    };
    for (const auto& a : ts)
        for (const auto& b : ts)
            EXPECT_EQ(type_equiv(a, b, false), prefix(a, 8) == prefix(b, 8))
                << to_string(a) << " vs " << to_string(b);
}

TEST(Default, Examples) {
    EXPECT_EQ(default_value(list_ptr()).kind, ValueKind::Null);
    Value ub = default_value(pair_type(uint_type(), bool_type()));
    EXPECT_EQ(ub, Value::make_pair(Value::uint(0), Value::boolean(false)));
    EXPECT_EQ(default_value(list_type()), Value::make_pair(Value::uint(0), Value::null(list_type())));
}

TEST(Modified, Examples) {
    EXPECT_EQ(modified(mk_swap("x1", "x2")), (std::set<std::string>{"x1", "x2"}));
    EXPECT_TRUE(modified(mk_skip()).empty());
    EXPECT_EQ(modified(mk_if("b", mk_memswap("p", "y"))), (std::set<std::string>{"y"}));
    EXPECT_EQ(modified(mk_assign("r", Expr::call("f", std::nullopt, {"a", "b"}))),
              (std::set<std::string>{"r", "a", "b"}));
}

TEST(CheckExpr, CallBounds) {
    auto src = R"(type list = (uint, ptr<list>);
fun f[b](x: ptr<list>) -> uint {
  let r <- 0;
  return r;
})";
    auto res = check_program(load_program(src));
    ASSERT_TRUE(res.ok());
    const FunDecl& f = res.program.funs[0];
    CheckContext cx = ctx_for(res.phi, f);
    VarContext g{{"x", list_ptr()}};
    std::optional<TypeError> err;
    Type t = check_expr(cx, g, Expr::call("f", Bound{Bound::Kind::VarMinus, "b", 1}, {"x"}), &err);
    EXPECT_FALSE(err) << err->message;
    EXPECT_TRUE(type_equiv(t, uint_type(), false));
    check_expr(cx, g, Expr::call("f", Bound{Bound::Kind::Var, "b", 0}, {"x"}), &err);
    ASSERT_TRUE(err);
    EXPECT_EQ(err->rule, "TE-CallSelf");
}

TEST(CheckExpr, AllocAndLiterals) {
    CheckContext cx;
    std::optional<TypeError> err;
    Type t = check_expr(cx, {}, Expr::alloc(list_type()), &err);
    EXPECT_FALSE(err);
    EXPECT_TRUE(type_equiv(t, list_ptr(), false));
    // an address literal is typed by its annotation
    t = check_expr(cx, {}, Expr::literal(Value::addr(list_type(), 3)), &err);
    EXPECT_FALSE(err);
    EXPECT_TRUE(type_equiv(t, list_ptr(), false));
    // ... which must itself be well formed
    check_expr(cx, {}, Expr::literal(Value::addr(mu("t", pair_type(uint_type(), var_type("t"))), 3)), &err);
    ASSERT_TRUE(err);
    EXPECT_EQ(err->rule, "TV-Ptr");
    cx.k = 4;
    check_expr(cx, {}, Expr::literal(Value::uint(16)), &err);
    ASSERT_TRUE(err);
    EXPECT_EQ(err->rule, "TV-Num");
}

TEST(CheckStmt, IfConditionModified) {
    CheckContext cx;
    VarContext g{{"b", bool_type()}, {"c", bool_type()}};
    auto err = check_stmt(cx, g, mk_if("b", mk_swap("b", "c")));
    ASSERT_TRUE(err);
    EXPECT_EQ(err->rule, "S-If");
}

TEST(CheckStmt, AssignExtendsContext) {
    CheckContext cx;
    VarContext g;
    EXPECT_FALSE(check_stmt(cx, g, mk_assign("x", Expr::literal(Value::uint(5)))));
    ASSERT_EQ(g.size(), 1u);
    EXPECT_TRUE(type_equiv(g.at("x"), uint_type(), false));
}

TEST(CheckStmt, PushFrontEndsWithOnlyTheResult) {
    auto res = check_program(load_program(read_file(corpus_dir() + "/stack.twr")));
    ASSERT_TRUE(res.ok());
    const FunDecl& f = *res.program.find("push_front");
    CheckContext cx = ctx_for(res.phi, f);
    VarContext g{{"l", list_ptr()}, {"x", uint_type()}};
    ASSERT_FALSE(check_stmt(cx, g, f.body));
    // params plus the unit result variable
    EXPECT_EQ(g.size(), 3u);
    ASSERT_TRUE(g.count(f.ret_var));
    EXPECT_EQ(resolve(g.at(f.ret_var))->kind, TypeKind::Unit);
}

TEST(CheckProgram, CorpusAccepted) {
    int files = 0;
    for (const auto& ent : std::filesystem::directory_iterator(corpus_dir())) {
        if (ent.path().extension() != ".twr") continue;
        ++files;
        auto res = check_program(load_program(read_file(ent.path().string()), ent.path().string()));
        EXPECT_TRUE(res.ok()) << (res.ok() ? "" : res.errors[0].format(ent.path().string()));
    }
    EXPECT_GE(files, 9);
}

TEST(CheckProgram, UnknownFunction) {
    auto res = check_program(load_program("fun main(x: uint) -> uint { let r <- g(x); return r; }"));
    ASSERT_FALSE(res.ok());
    EXPECT_NE(res.errors[0].message.find("unknown function"), std::string::npos);
}

TEST(CheckProgram, MutualRecursionRejected) {
    auto res = check_program(load_program(R"(fun f(x: uint) -> uint { let r <- g(x); return r; }
fun g(x: uint) -> uint { let r <- f(x); return r; })"));
    ASSERT_FALSE(res.ok());
    EXPECT_NE(res.errors[0].message.find("'g'"), std::string::npos);
}

// Checking s from Γ gives Γ'; its inverse must check from Γ' back to Γ.
TEST(CheckProgram, InversionDuality) {
    for (const auto& ent : std::filesystem::directory_iterator(corpus_dir())) {
        if (ent.path().extension() != ".twr") continue;
        auto res = check_program(load_program(read_file(ent.path().string())));
        ASSERT_TRUE(res.ok());
        for (const auto& f : res.program.funs) {
            CheckContext cx = ctx_for(res.phi, f);
            VarContext g0;
            for (const auto& p : f.params) g0[p.name] = p.ty;
            VarContext g1 = g0;
            ASSERT_FALSE(check_stmt(cx, g1, f.body)) << f.name;
            CheckContext inv = cx;
            inv.params.clear();
            VarContext g2 = g1;
            auto err = check_stmt(inv, g2, invert(f.body));
            ASSERT_FALSE(err) << f.name << ": " << err->message;
            ASSERT_EQ(g2.size(), g0.size()) << f.name;
            for (const auto& [x, t] : g0) {
                ASSERT_TRUE(g2.count(x)) << f.name << " " << x;
                EXPECT_TRUE(type_equiv(g2.at(x), t, false)) << f.name << " " << x;
            }
        }
    }
}
