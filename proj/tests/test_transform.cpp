#include <gtest/gtest.h>

#include <filesystem>
#include <functional>

#include "support.hpp"
#include "tower/ground.hpp"
#include "tower/transform.hpp"

using namespace tower;
using namespace tower::test;
namespace g = tower::ground;

TEST(Invert, Sequence) {
    StmtPtr s1 = mk_assign("x", Expr::literal(Value::uint(1)));
    StmtPtr s2 = mk_swap("x", "y");
    StmtPtr want = mk_seq(invert(s2), invert(s1));
    EXPECT_TRUE(stmt_equal(invert(mk_seq(s1, s2)), want));
}

TEST(Invert, Primitives) {
    EXPECT_EQ(invert(mk_skip())->kind, StmtKind::Skip);
    EXPECT_EQ(invert(mk_assign("x", Expr::var("y")))->kind, StmtKind::UnAssign);
    EXPECT_EQ(invert(mk_unassign("x", Expr::var("y")))->kind, StmtKind::Assign);
    EXPECT_TRUE(stmt_equal(invert(mk_swap("a", "b")), mk_swap("a", "b")));
    EXPECT_TRUE(stmt_equal(invert(mk_memswap("p", "v")), mk_memswap("p", "v")));
}

TEST(Invert, Conditional) {
    StmtPtr body = mk_seq(mk_assign("t", Expr::var("y")), mk_swap("t", "z"));
    EXPECT_TRUE(stmt_equal(invert(mk_if("x", body)), mk_if("x", invert(body))));
}

TEST(Invert, CallsFlipDirection) {
    StmtPtr s = mk_assign("r", Expr::call("f", std::nullopt, {"a"}));
    StmtPtr i = invert(s);
    EXPECT_EQ(i->kind, StmtKind::UnAssign);
    EXPECT_EQ(i->e.fn, "f");
}

TEST(Invert, InvolutionOnCorpus) {
    for (const auto& ent : std::filesystem::directory_iterator(corpus_dir())) {
        if (ent.path().extension() != ".twr") continue;
        auto res = check_program(load_program(read_file(ent.path().string())));
        ASSERT_TRUE(res.ok());
        for (const auto& f : res.program.funs) EXPECT_TRUE(stmt_equal(invert(invert(f.body)), f.body)) << f.name;
    }
}

TEST(Inline, FindPosIsCallFree) {
    g::Harness h;
    const auto& e = h.entry("list.find_pos");
    InlineOptions o;
    o.entry = e.entry;
    o.bound = 3;
    Lowered low = inline_program(h.program(e.file), o);
    std::function<bool(const StmtPtr&)> has_call = [&](const StmtPtr& s) {
        switch (s->kind) {
        case StmtKind::Seq: return has_call(s->a) || has_call(s->b);
        case StmtKind::If: return has_call(s->a);
        case StmtKind::Assign:
        case StmtKind::UnAssign: return s->e.kind == ExprKind::Call;
        default: return false;
        }
    };
    EXPECT_FALSE(has_call(low.core));

    RunConfig cfg;
    HeapState heap = HeapState::init(cfg.heap, cfg.perm, cfg.k);
    Value l = g::encode_list(heap, low.inputs[0].ty, {4, 7});
    Registers R{{"l", l}, {"x", Value::uint(7)}, {"acc", Value::uint(0)}};
    auto res = run_lowered(low, R, heap, Direction::Forward, cfg);
    EXPECT_EQ(res.R.at(low.output), Value::uint(1));
}

TEST(Inline, BoundZeroYieldsDefault) {
    auto p = checked(R"(type list = (uint, ptr<list>);
fun f[n](l: ptr<list>) -> uint {
  let r <- 9;
  return r;
}
fun main(l: ptr<list>) -> uint {
  let r <- f[0](l);
  return r;
})");
    Lowered low = inline_program(p);
    RunConfig cfg;
    auto res = run_lowered(low, {{"l", Value::null(list_type())}}, HeapState::init(cfg.heap, cfg.perm, cfg.k),
                           Direction::Forward, cfg);
    EXPECT_EQ(res.R.at(low.output), Value::uint(0));
}

TEST(Inline, InvertedCoreUndoesTheRun) {
    g::Harness h;
    std::mt19937_64 rng(21);
    RunConfig cfg;
    cfg.heap.sections = {{4, 24}};
    for (const char* name : {"list.remove", "queue.push_back", "radix.insert", "string.concat"}) {
        const auto& e = h.entry(name);
        auto out = h.run(e, g::random_inputs(e, rng, g::Sizes{}), cfg, 4);
        std::set<std::string> keep;
        for (const auto& p : out.prep.low->inputs) keep.insert(p.name);
        auto back = run_statement(invert(out.prep.low->core), out.run.R, out.run.heap, Direction::Forward, cfg, keep);
        EXPECT_EQ(back.R, out.prep.R) << name;
        EXPECT_TRUE(back.heap == out.prep.heap) << name;
    }
}

TEST(Rename, KeepsUnmappedNames) {
    StmtPtr s = mk_seq(mk_assign("a", Expr::binop(BinOp::Add, "b", "c")), mk_swap("a", "d"));
    StmtPtr r = rename(s, {{"a", "z"}, {"c", "y"}});
    EXPECT_EQ(print_stmt(r), "let z <- b + y;\nz <-> d;\n");
}
