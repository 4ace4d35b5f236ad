#include "support.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tower/transform.hpp"

namespace tower::test {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string test_dir() { return TOWER_TEST_DIR; }
std::string corpus_dir() { return TOWER_CORPUS_DIR; }

Type list_type() { return ind_type("t", pair_type(uint_type(), ptr_type(var_type("t")))); }
Type list_ptr() { return ptr_type(list_type()); }

Program checked(const std::string& source, int k) {
    auto r = check_program(load_program(source), k);
    if (!r.ok()) throw std::runtime_error(r.errors.front().format("<test>"));
    return r.program;
}

std::vector<NegativeCase> negative_cases(const std::string& subdir) {
    std::vector<NegativeCase> out;
    for (const auto& ent : fs::directory_iterator(test_dir() + "/" + subdir)) {
        if (ent.path().extension() != ".twr") continue;
        NegativeCase c;
        c.path = ent.path().string();
        std::istringstream in(read_file(c.path));
        std::string line;
        for (int no = 1; std::getline(in, line); ++no) {
            const std::string tag = "// expect: ";
            if (no == 1 && line.rfind(tag, 0) == 0) c.expect = line.substr(tag.size());
            if (line.find("//!") != std::string::npos) c.line = no;
        }
        out.push_back(c);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    return out;
}

NegativeOutcome run_static_negative(const NegativeCase& c) {
    NegativeOutcome o;
    try {
        auto r = check_program(load_program(read_file(c.path), c.path));
        if (r.ok()) return o;
        o.detected = true;
        o.got = r.errors.front().rule;
        o.line = r.errors.front().pos.line;
        o.message = r.errors.front().format(c.path);
    } catch (const ParseError& e) {
        o = {true, "Parse", e.pos.line, e.what()};
    } catch (const DesugarError& e) {
        o = {true, "Desugar", e.pos.line, e.what()};
    }
    return o;
}

NegativeOutcome run_runtime_negative(const NegativeCase& c) {
    NegativeOutcome o;
    auto r = check_program(load_program(read_file(c.path), c.path));
    bool forced = !r.ok() && std::all_of(r.errors.begin(), r.errors.end(),
                                         [](const TypeError& e) { return e.rule == "S-Return"; });
    if (!r.ok() && !forced) {
        o = {true, r.errors.front().rule, r.errors.front().pos.line, r.errors.front().format(c.path)};
        return o;
    }
    Lowered low = inline_program(r.program, InlineOptions{"main"});
    RunConfig cfg;
    cfg.validate = true;
    Registers R{{"x", Value::uint(5)}};
    try {
        run_lowered(low, R, HeapState::init(cfg.heap, cfg.perm, cfg.k), Direction::Forward, cfg);
    } catch (const StepError& e) {
        o = {true, kind_name(e.kind), e.pos.line, e.format(c.path)};
    }
    return o;
}

// ---- fuzzer ----

VarContext CoreFuzzer::params() const {
    return {{"a", uint_type()}, {"b", uint_type()}, {"c", bool_type()}, {"p", list_ptr()}, {"v", list_type()}};
}

Registers CoreFuzzer::initial_registers(HeapState& heap) {
    auto word = [&] { return Word(pick(256)); };
    Word blk = heap.alloc(2);
    heap.block(blk)[0] = word();
    Registers R;
    R["a"] = Value::uint(word());
    R["b"] = Value::uint(word());
    R["c"] = Value::boolean(coin(50));
    R["p"] = Value::addr(list_type(), blk);
    R["v"] = Value::make_pair(Value::uint(word()), Value::null(list_type()));
    return R;
}

std::vector<std::string> CoreFuzzer::of_type(const VarContext& g, const Type& t) const {
    std::vector<std::string> out;
    for (const auto& [x, ty] : g)
        if (type_equiv(ty, t, false)) out.push_back(x);
    return out;
}

std::optional<Expr> CoreFuzzer::expr_of(const VarContext& g, const Type& t) {
    auto any = [&](const Type& ty) -> std::optional<std::string> {
        auto xs = of_type(g, ty);
        if (xs.empty()) return std::nullopt;
        return xs[pick(int(xs.size()))];
    };
    auto lists = of_type(g, list_type());
    switch (resolve(t)->kind == TypeKind::Ind ? TypeKind::Pair : resolve(t)->kind) {
    case TypeKind::UInt:
        switch (pick(5)) {
        case 0: return Expr::literal(Value::uint(Word(pick(256))));
        case 1:
            if (auto x = any(uint_type())) return Expr::var(*x);
            break;
        case 2:
            if (!lists.empty()) return Expr::proj(1, lists[pick(int(lists.size()))]);
            break;
        default: {
            auto x = any(uint_type()), y = any(uint_type());
            static const BinOp ops[] = {BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::BitAnd, BinOp::BitOr,
                                        BinOp::BitXor, BinOp::Shl, BinOp::Shr};
            if (x && y) return Expr::binop(ops[pick(8)], *x, *y);
        }
        }
        return Expr::literal(Value::uint(Word(pick(256))));
    case TypeKind::Bool:
        switch (pick(5)) {
        case 0: return Expr::literal(Value::boolean(coin(50)));
        case 1:
            if (auto x = any(bool_type())) return Expr::unop(UnOp::Not, *x);
            break;
        case 2:
            if (auto x = any(coin(50) ? uint_type() : list_ptr())) return Expr::unop(UnOp::Test, *x);
            break;
        case 3: {
            auto x = any(uint_type()), y = any(uint_type());
            static const BinOp ops[] = {BinOp::Eq, BinOp::Ne, BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge};
            if (x && y) return Expr::binop(ops[pick(6)], *x, *y);
            break;
        }
        default: {
            auto x = any(bool_type()), y = any(bool_type());
            if (x && y) return Expr::binop(coin(50) ? BinOp::And : BinOp::Or, *x, *y);
        }
        }
        return Expr::literal(Value::boolean(coin(50)));
    case TypeKind::Ptr:
        switch (pick(4)) {
        case 0: return Expr::alloc(list_type());
        case 1:
            if (auto x = any(list_ptr())) return Expr::var(*x);
            break;
        case 2:
            if (!lists.empty()) return Expr::proj(2, lists[pick(int(lists.size()))]);
            break;
        }
        return Expr::literal(Value::null(list_type()));
    case TypeKind::Pair:
        if (coin(50)) {
            auto x = any(uint_type()), y = any(list_ptr());
            if (x && y) return Expr::make_pair(*x, *y);
        }
        if (coin(30) && !lists.empty()) return Expr::var(lists[pick(int(lists.size()))]);
        return Expr::literal(default_value(list_type()));
    default: return std::nullopt;
    }
}

StmtPtr CoreFuzzer::prim(VarContext& g, std::vector<std::pair<std::string, Expr>>& made) {
    static const Type types[] = {uint_type(), bool_type(), list_ptr(), list_type()};
    switch (pick(10)) {
    case 0:
    case 1:
    case 2: {
        if (made.empty()) break;
        auto [x, e] = made.back();
        made.pop_back();
        Type t = g.at(x);
        g.erase(x);
        if (coin(20)) {
            auto r = expr_of(g, t);
            if (r) e = *r;
        }
        return mk_unassign(x, e, {}, t);
    }
    case 3:
    case 4: {
        const Type& t = types[pick(4)];
        auto xs = of_type(g, t);
        if (xs.size() < 2) break;
        int i = pick(int(xs.size())), j = pick(int(xs.size()));
        if (i == j) break;
        return mk_swap(xs[i], xs[j]);
    }
    case 5: {
        auto ps = of_type(g, list_ptr()), vs = of_type(g, list_type());
        if (ps.empty() || vs.empty()) break;
        return mk_memswap(ps[pick(int(ps.size()))], vs[pick(int(vs.size()))]);
    }
    case 6: {
        auto bs = of_type(g, bool_type());
        if (bs.empty()) break;
        VarContext inner = g;
        return mk_if(bs[pick(int(bs.size()))], balanced(inner, 1 + pick(4)));
    }
    default: break;
    }
    Type t = types[pick(4)];
    auto e = expr_of(g, t);
    std::string x = fresh();
    g[x] = t;
    made.push_back({x, *e});
    return mk_assign(x, *e, {}, t);
}

// Leaves the context as it found it: every variable it creates is
// un-assigned before the end.
StmtPtr CoreFuzzer::balanced(VarContext& g, int length) {
    std::vector<std::pair<std::string, Expr>> made;
    std::vector<StmtPtr> parts;
    for (int i = 0; i < length; ++i) parts.push_back(prim(g, made));
    while (!made.empty()) {
        auto [x, e] = made.back();
        made.pop_back();
        parts.push_back(mk_unassign(x, e, {}, g.at(x)));
        g.erase(x);
    }
    return mk_seq(parts);
}

StmtPtr CoreFuzzer::statement(int length) {
    CheckContext cx;
    for (;;) {
        VarContext g = params();
        std::vector<std::pair<std::string, Expr>> made;
        std::vector<StmtPtr> parts;
        for (int i = 0; i < length; ++i) parts.push_back(prim(g, made));
        StmtPtr s = mk_seq(parts);
        VarContext gamma = params();
        for (const auto& [x, t] : gamma) cx.params.insert(x);
        if (!check_stmt(cx, gamma, s)) return s;
    }
}

} // namespace tower::test
