#include <gtest/gtest.h>

#include "support.hpp"
#include "tower/ground.hpp"

using namespace tower;
using namespace tower::test;
namespace g = tower::ground;

namespace {

HeapState fresh_heap(const RunConfig& cfg) { return HeapState::init(cfg.heap, cfg.perm, cfg.k); }

Registers run_machine(StmtPtr s, Registers R, Direction dir = Direction::Forward, TraceStats* st = nullptr) {
    RunConfig cfg;
    Machine m(std::move(s), std::move(R), fresh_heap(cfg), dir, cfg);
    m.run_to_end();
    if (st) *st = m.stats();
    return m.registers();
}

} // namespace

TEST(Eval, Arithmetic) {
    RunConfig cfg;
    HeapState h = fresh_heap(cfg);
    Registers R{{"x1", Value::uint(3)}, {"x2", Value::uint(4)}};
    EXPECT_EQ(eval_forward(Expr::binop(BinOp::Add, "x1", "x2"), R, h, 8, uint_type()), Value::uint(7));
    R = {{"x1", Value::uint(200)}, {"x2", Value::uint(100)}};
    EXPECT_EQ(eval_forward(Expr::binop(BinOp::Add, "x1", "x2"), R, h, 8, uint_type()), Value::uint(44));
    EXPECT_EQ(eval_forward(Expr::binop(BinOp::Sub, "x2", "x1"), R, h, 8, uint_type()), Value::uint(156));
    EXPECT_EQ(eval_forward(Expr::binop(BinOp::Mul, "x1", "x2"), R, h, 8, uint_type()), Value::uint(20000 % 256));
}

TEST(Eval, TestOfNull) {
    RunConfig cfg;
    HeapState h = fresh_heap(cfg);
    Registers R{{"x", Value::null(list_type())}};
    EXPECT_EQ(eval_forward(Expr::unop(UnOp::Test, "x"), R, h, 8, bool_type()), Value::boolean(true));
}

TEST(Eval, ModularArithmeticMatchesWordOracle) {
    RunConfig cfg;
    HeapState h = fresh_heap(cfg);
    std::mt19937 rng(7);
    for (int k : {4, 8, 12}) {
        Word mask = (Word(1) << k) - 1;
        for (int i = 0; i < 200; ++i) {
            Word a = rng() & mask, b = rng() & mask;
            Registers R{{"a", Value::uint(a)}, {"b", Value::uint(b)}};
            auto ev = [&](BinOp op) { return eval_forward(Expr::binop(op, "a", "b"), R, h, k, uint_type()).n; };
            EXPECT_EQ(ev(BinOp::Add), (a + b) & mask);
            EXPECT_EQ(ev(BinOp::Sub), (a - b) & mask);
            EXPECT_EQ(ev(BinOp::Mul), (a * b) & mask);
            EXPECT_EQ(ev(BinOp::BitXor), a ^ b);
        }
    }
}

TEST(UnAssign, MatchingValueRemovesRegister) {
    Registers R{{"x1", Value::uint(3)}, {"x2", Value::uint(4)}, {"s", Value::uint(7)}};
    R = run_machine(mk_unassign("s", Expr::binop(BinOp::Add, "x1", "x2"), {}, uint_type()), R);
    EXPECT_FALSE(R.count("s"));
}

TEST(UnAssign, MismatchIsStuck) {
    Registers R{{"x1", Value::uint(3)}, {"x2", Value::uint(4)}, {"s", Value::uint(8)}};
    try {
        run_machine(mk_unassign("s", Expr::binop(BinOp::Add, "x1", "x2"), {4, 3}, uint_type()), R);
        FAIL() << "not stuck";
    } catch (const StepError& e) {
        EXPECT_EQ(e.kind, StepErrorKind::StuckUnAssign);
        EXPECT_EQ(e.pos.line, 4);
        ASSERT_TRUE(e.expected && e.held);
        EXPECT_EQ(*e.expected, Value::uint(7));
        EXPECT_EQ(*e.held, Value::uint(8));
    }
}

TEST(UnAssign, FieldOfNode) {
    // let head -> node.2 where head equals the node's second field
    Value node = Value::make_pair(Value::uint(6), Value::addr(list_type(), 2));
    Registers R{{"node", node}, {"head", Value::addr(list_type(), 2)}};
    R = run_machine(mk_unassign("head", Expr::proj(2, "node"), {}, list_ptr()), R);
    EXPECT_FALSE(R.count("head"));
}

TEST(Step, Swap) {
    Registers R = run_machine(mk_swap("x1", "x2"), {{"x1", Value::uint(1)}, {"x2", Value::uint(2)}});
    EXPECT_EQ(R.at("x1"), Value::uint(2));
    EXPECT_EQ(R.at("x2"), Value::uint(1));
}

TEST(Step, MemSwapThroughNullLeavesState) {
    RunConfig cfg;
    HeapState h = fresh_heap(cfg);
    Registers R{{"p", Value::null(list_type())}, {"y", default_value(list_type())}};
    Machine m(mk_memswap("p", "y"), R, h, Direction::Forward, cfg);
    m.run_to_end();
    EXPECT_EQ(m.registers(), R);
    EXPECT_TRUE(m.heap() == h);
}

TEST(Step, IfFalseBecomesSkip) {
    RunConfig cfg;
    Registers R{{"b", Value::boolean(false)}, {"x", Value::uint(1)}, {"y", Value::uint(2)}};
    Machine m(mk_if("b", mk_swap("x", "y")), R, fresh_heap(cfg), Direction::Forward, cfg);
    m.step();
    EXPECT_TRUE(m.done() || m.residual()->kind == StmtKind::Skip);
    EXPECT_EQ(m.registers(), R);
}

TEST(Step, ReverseAssignRemoves) {
    Registers R = run_machine(mk_assign("x", Expr::literal(Value::uint(5)), {}, uint_type()),
                              {{"x", Value::uint(5)}}, Direction::Reverse);
    EXPECT_TRUE(R.empty());
}

TEST(Step, SkipIsOneStep) {
    TraceStats st;
    run_machine(mk_skip(), {}, Direction::Forward, &st);
    EXPECT_EQ(st.steps, 1u);
}

TEST(Step, ReverseUndoesForward) {
    CoreFuzzer fz(11);
    RunConfig cfg;
    for (int i = 0; i < 300; ++i) {
        StmtPtr s = fz.statement(12);
        HeapState h0 = fresh_heap(cfg);
        Registers R0 = fz.initial_registers(h0);
        try {
            Machine fwd(s, R0, h0, Direction::Forward, cfg);
            fwd.run_to_end();
            Machine back(s, fwd.registers(), fwd.heap(), Direction::Reverse, cfg);
            back.run_to_end();
            EXPECT_EQ(back.registers(), R0) << print_stmt(s);
            EXPECT_TRUE(back.heap() == h0) << print_stmt(s);
        } catch (const StepError& e) {
            EXPECT_EQ(e.kind, StepErrorKind::StuckUnAssign) << e.format();
        }
    }
}

TEST(Run, PushFrontAndPopFront) {
    g::Harness h;
    RunConfig cfg;
    auto out = h.run(h.entry("stack.push_front"), {g::AValue::list({1, 2}), g::AValue::num(6)}, cfg, 4);
    EXPECT_EQ(g::to_string(out.params[0]), "[6,1,2]");
    out = h.run(h.entry("stack.pop_front"), {g::AValue::list({6, 1, 2})}, cfg, 4);
    EXPECT_EQ(out.result, g::AValue::num(6));
    EXPECT_EQ(g::to_string(out.params[0]), "[1,2]");
}

TEST(Run, IdentityMain) {
    Program p = checked("fun main(x: uint) -> uint { let y <- x; return y; }");
    Lowered low = inline_program(p);
    RunConfig cfg;
    auto res = run_lowered(low, {{"x", Value::uint(42)}}, fresh_heap(cfg), Direction::Forward, cfg);
    EXPECT_EQ(res.R.at(low.output), Value::uint(42));
}

TEST(Run, CorpusOps) {
    g::Harness h;
    RunConfig cfg;
    auto length = h.run(h.entry("list.length"), {g::AValue::list({1, 2, 3}), g::AValue::num(0)}, cfg, 4);
    EXPECT_EQ(length.result, g::AValue::num(3));
    auto pos = h.run(h.entry("list.find_pos"), {g::AValue::list({4, 7, 9}), g::AValue::num(7), g::AValue::num(0)},
                     cfg, 4);
    EXPECT_EQ(pos.result, g::AValue::num(1));
}

TEST(Run, ReverseConsumesOutput) {
    g::Harness h;
    RunConfig cfg;
    const auto& e = h.entry("list.sum");
    auto out = h.run(e, {g::AValue::list({3, 4, 5}), g::AValue::num(0)}, cfg, 4);
    auto back = run_lowered(*out.prep.low, out.run.R, out.run.heap, Direction::Reverse, cfg);
    EXPECT_EQ(back.R, out.prep.R);
    EXPECT_TRUE(back.heap == out.prep.heap);
}

TEST(Run, InlinedAgreesWithCallInterpretation) {
    g::Harness h;
    std::mt19937_64 rng(5);
    RunConfig cfg;
    cfg.heap.sections = {{4, 24}};
    for (const auto& e : h.entries()) {
        for (int i = 0; i < 5; ++i) {
            auto in = g::random_inputs(e, rng, g::Sizes{});
            auto prep = h.prepare(e, in, cfg, 4);
            auto a = run_lowered(*prep.low, prep.R, prep.heap, Direction::Forward, cfg);
            auto b = run_with_calls(h.program(e.file), e.entry, prep.bound, prep.R, prep.heap, Direction::Forward,
                                    cfg);
            EXPECT_EQ(a.R, b.R) << e.name;
            EXPECT_TRUE(a.heap == b.heap) << e.name;
        }
    }
}

TEST(Run, CorpusStatesStayValid) {
    g::Harness h;
    std::mt19937_64 rng(9);
    RunConfig cfg;
    cfg.validate = true;
    cfg.heap.sections = {{4, 24}};
    cfg.perm = PermutationSource::seeded(3);
    for (const auto& e : h.entries())
        EXPECT_NO_THROW(h.run(e, g::random_inputs(e, rng, g::Sizes{}), cfg, 4)) << e.name;
}

TEST(Trace, RecursiveUncomputationIsExponential) {
    g::Harness h;
    auto s = h.list_steps(h.entry("list.length_exp"), {4, 5, 6, 7, 8, 9});
    for (std::size_t i = 1; i < s.size(); ++i) {
        double r = double(s[i]) / double(s[i - 1]);
        EXPECT_GE(r, 1.8);
        EXPECT_LE(r, 2.2);
    }
}

TEST(Trace, AccumulatorLengthIsAffine) {
    g::Harness h;
    std::vector<long long> xs{1, 2, 3, 4, 5, 6, 7, 8};
    auto s = h.list_steps(h.entry("list.length"), {1, 2, 3, 4, 5, 6, 7, 8});
    auto fit = g::fit_exact(xs, s, 1);
    EXPECT_TRUE(fit.exact);
    EXPECT_EQ(fit.degree, 1);
}

TEST(Validate, UnboundVariableIsRejected) {
    RunConfig cfg;
    cfg.validate = true;
    Registers R{{"x", Value::uint(1)}};
    Machine m(mk_swap("x", "y"), R, fresh_heap(cfg), Direction::Forward, cfg);
    try {
        m.check_valid();
        FAIL() << "accepted";
    } catch (const StepError& e) {
        EXPECT_EQ(e.kind, StepErrorKind::InvalidState);
    }
}

TEST(Validate, DanglingPointerIsWellTyped) {
    // typing of pointers does not look at the heap; the swap through it is ignored
    RunConfig cfg;
    cfg.validate = true;
    Registers R{{"p", Value::addr(list_type(), 5)}, {"v", default_value(list_type())}};
    Machine m(mk_memswap("p", "v"), R, fresh_heap(cfg), Direction::Forward, cfg);
    m.run_to_end();
    EXPECT_EQ(m.registers().at("v"), default_value(list_type()));
    ASSERT_FALSE(m.diagnostics().empty());
    EXPECT_EQ(m.diagnostics()[0].kind, "BadAddress-Ignored");
}
