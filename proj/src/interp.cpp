#include "tower/interp.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tower/check.hpp"

namespace tower {

const char* kind_name(StepErrorKind k) {
    switch (k) {
    case StepErrorKind::StuckUnAssign: return "Stuck-UnAssign";
    case StepErrorKind::StuckSeqStep: return "Stuck-SeqStep";
    case StepErrorKind::Leak: return "Leak";
    case StepErrorKind::OutOfMemory: return "OutOfMemory";
    case StepErrorKind::StepLimitExceeded: return "StepLimitExceeded";
    case StepErrorKind::InvalidState: return "InvalidState";
    }
    return "?";
}

StepError::StepError(StepErrorKind kind, SourcePos pos, const std::string& detail)
    : std::runtime_error(std::string(kind_name(kind)) + ": " + detail), kind(kind), pos(pos), detail(detail) {}

std::string StepError::format(const std::string& file) const {
    std::string out;
    if (!file.empty()) out += file + ":";
    out += std::to_string(pos.line) + ":" + std::to_string(pos.col) + ": error[" + kind_name(kind) + "]: " + detail;
    if (!derivation.empty()) out += " (" + derivation + ")";
    return out;
}

// ---- config ----

RunConfig run_config_from_json(const std::string& text) {
    RunConfig cfg;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    try {
        if (j.contains("k")) cfg.k = j["k"].get<int>();
        if (j.contains("step_limit")) cfg.step_limit = j["step_limit"].get<std::uint64_t>();
        if (j.contains("validate")) cfg.validate = j["validate"].get<bool>();
        if (j.contains("heap")) {
            cfg.heap.sections.clear();
            for (const auto& s : j["heap"]["sections"])
                cfg.heap.sections.push_back({s.at("block_words").get<int>(), s.at("count").get<int>()});
        }
        if (j.contains("permutation")) {
            const auto& p = j["permutation"];
            std::string kind = p.value("kind", "identity");
            if (kind == "identity") {
                cfg.perm = PermutationSource::identity();
            } else if (kind == "seeded") {
                std::string alg = p.value("algorithm", std::string(PermutationSource::kAlgorithm));
                if (alg != PermutationSource::kAlgorithm) throw ConfigError("unsupported permutation algorithm '" + alg + "'");
                cfg.perm = PermutationSource::seeded(p.value("seed", std::uint64_t(0)));
            } else if (kind == "explicit") {
                cfg.perm = PermutationSource::explicit_perms(p.at("perms").get<std::vector<std::vector<int>>>());
            } else {
                throw ConfigError("unknown permutation kind '" + kind + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (cfg.k < 4 || cfg.k > 16) throw ConfigError("word size k must be in 4..16");
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return run_config_from_json(ss.str());
}

std::string run_config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["k"] = cfg.k;
    j["step_limit"] = cfg.step_limit;
    j["validate"] = cfg.validate;
    for (const auto& s : cfg.heap.sections) j["heap"]["sections"].push_back({{"block_words", s.block_words}, {"count", s.count}});
    switch (cfg.perm.kind) {
    case PermutationSource::Kind::Identity: j["permutation"] = {{"kind", "identity"}}; break;
    case PermutationSource::Kind::Seeded:
        j["permutation"] = {{"kind", "seeded"}, {"seed", cfg.perm.seed}, {"algorithm", PermutationSource::kAlgorithm}};
        break;
    case PermutationSource::Kind::Explicit: j["permutation"] = {{"kind", "explicit"}, {"perms", cfg.perm.perms}}; break;
    }
    return j.dump(2);
}

// ---- expressions ----

static Word mask(Word v, int k) { return k >= 32 ? v : (v & ((Word(1) << k) - 1)); }

static const Value& reg(const Registers& R, const std::string& x, SourcePos pos) {
    auto it = R.find(x);
    if (it == R.end()) throw StepError(StepErrorKind::InvalidState, pos, "register '" + x + "' is not bound");
    return it->second;
}

Value eval_forward(const Expr& e, const Registers& R, HeapState& heap, int k, const Type& ty, TraceStats* st) {
    SourcePos pos = e.pos;
    switch (e.kind) {
    case ExprKind::Var: return reg(R, e.x, pos);
    case ExprKind::Lit: return e.lit;
    case ExprKind::Pair: return Value::make_pair(reg(R, e.x, pos), reg(R, e.y, pos));
    case ExprKind::Proj: {
        const Value& v = reg(R, e.x, pos);
        if (v.kind != ValueKind::Pair) throw StepError(StepErrorKind::InvalidState, pos, "projection from non-pair");
        return e.index == 1 ? v.first() : v.second();
    }
    case ExprKind::Unop: {
        const Value& v = reg(R, e.x, pos);
        if (e.uop == UnOp::Not) return Value::boolean(!(v.n & 1));
        return Value::boolean(v.n == 0);  // test: zero / null
    }
    case ExprKind::Binop: {
        Word a = reg(R, e.x, pos).n, b = reg(R, e.y, pos).n;
        switch (e.bop) {
        case BinOp::And: return Value::boolean((a & b & 1) != 0);
        case BinOp::Or: return Value::boolean(((a | b) & 1) != 0);
        case BinOp::Add: return Value::uint(mask(a + b, k));
        case BinOp::Sub: return Value::uint(mask(a - b, k));
        case BinOp::Mul: return Value::uint(mask(a * b, k));
        case BinOp::Eq: return Value::boolean(a == b);
        case BinOp::Ne: return Value::boolean(a != b);
        case BinOp::Lt: return Value::boolean(a < b);
        case BinOp::Le: return Value::boolean(a <= b);
        case BinOp::Gt: return Value::boolean(a > b);
        case BinOp::Ge: return Value::boolean(a >= b);
        case BinOp::BitAnd: return Value::uint(a & b);
        case BinOp::BitOr: return Value::uint(a | b);
        case BinOp::BitXor: return Value::uint(a ^ b);
        case BinOp::Shl: return Value::uint(b >= Word(k) ? 0 : mask(a << b, k));
        case BinOp::Shr: return Value::uint(b >= Word(k) ? 0 : a >> b);
        }
        break;
    }
    case ExprKind::Alloc: {
        Word p;
        try {
            p = heap.alloc(word_count(e.ty));
        } catch (const HeapError& he) {
            throw StepError(he.kind == HeapError::Kind::OutOfMemory ? StepErrorKind::OutOfMemory
                                                                     : StepErrorKind::InvalidState,
                            pos, he.what());
        }
        if (st) ++st->allocs;
        return Value::addr(e.ty, p);
    }
    case ExprKind::Default: return default_value(e.ty ? e.ty : ty);
    case ExprKind::Call:
        throw StepError(StepErrorKind::InvalidState, pos, "call to '" + e.fn + "' left in a core statement");
    }
    return Value::unit();
}

static Value coerce_to(const Value& v, const Type& t) {
    if (!t) return v;
    try {
        return coerce(v, t);
    } catch (const std::exception&) {
        return v;
    }
}

static void do_assign(const Stmt& s, Registers& R, HeapState& heap, int k, TraceStats& st) {
    if (R.count(s.x)) throw StepError(StepErrorKind::InvalidState, s.pos, "register '" + s.x + "' is already bound");
    Value v = eval_forward(s.e, R, heap, k, s.ty, &st);
    if (s.e.kind == ExprKind::Alloc) st.alloc_site[v.n] = s.pos;
    R.emplace(s.x, coerce_to(v, s.ty));
    st.born[s.x] = s.pos;
}

static void do_unassign(const Stmt& s, Registers& R, HeapState& heap, int k, TraceStats& st) {
    auto it = R.find(s.x);
    if (it == R.end()) throw StepError(StepErrorKind::InvalidState, s.pos, "register '" + s.x + "' is not bound");
    Value held = it->second;
    R.erase(it);
    auto stuck = [&](const std::string& why, std::optional<Value> expected) {
        R.emplace(s.x, held);
        StepError err(StepErrorKind::StuckUnAssign, s.pos, why);
        err.var = s.x;
        err.expected = std::move(expected);
        err.held = held;
        throw err;
    };
    if (s.e.kind == ExprKind::Alloc) {
        if (held.kind != ValueKind::Addr) stuck("'" + s.x + "' must hold an allocated address, holds " + to_string(held), std::nullopt);
        try {
            heap.dealloc(held.n);
        } catch (const HeapError& he) {
            stuck(std::string(kind_name(he.kind)) + ": " + he.what(), std::nullopt);
        }
        ++st.deallocs;
        st.alloc_site.erase(held.n);
    } else {
        Value v;
        try {
            v = eval_forward(s.e, R, heap, k, s.ty, &st);
        } catch (...) {
            R.emplace(s.x, held);
            throw;
        }
        if (v != held)
            stuck("'" + s.x + "' holds " + to_string(held) + " but '" + print_expr(s.e) + "' evaluates to " +
                      to_string(v),
                  v);
    }
    st.born.erase(s.x);
}

static void do_memswap(const Stmt& s, Registers& R, HeapState& heap, std::vector<Diagnostic>& diags) {
    const Value& p = reg(R, s.x, s.pos);
    Value& y = R.at(s.y);
    if (p.kind == ValueKind::Null || p.n == 0) {
        diags.push_back({s.pos, "NullWrite-Ignored", "memory swap through null '" + s.x + "' has no effect"});
        return;
    }
    if (!heap.allocated(p.n)) {
        diags.push_back({s.pos, "BadAddress-Ignored",
                         "memory swap through unallocated address " + std::to_string(p.n) + " has no effect"});
        return;
    }
    Type t = p.pointee ? p.pointee : value_type(y);
    auto& blk = heap.block(p.n);
    int wc = word_count(t);
    if (wc > int(blk.size()))
        throw StepError(StepErrorKind::InvalidState, s.pos,
                        "value of " + std::to_string(wc) + " words does not fit block " + std::to_string(p.n));
    std::vector<Word> stored(blk.begin(), blk.begin() + wc);
    std::vector<Word> incoming = flatten(y);
    incoming.resize(wc, 0);
    std::copy(incoming.begin(), incoming.end(), blk.begin());
    y = unflatten(t, stored);
}

void exec_leaf(const Stmt& s, Direction dir, Registers& R, HeapState& heap, int k, TraceStats& st,
               std::vector<Diagnostic>& diags) {
    bool fwd = dir == Direction::Forward;
    switch (s.kind) {
    case StmtKind::Skip: ++st.by_kind["skip"]; break;
    case StmtKind::Assign:
        ++st.by_kind["assign"];
        fwd ? do_assign(s, R, heap, k, st) : do_unassign(s, R, heap, k, st);
        break;
    case StmtKind::UnAssign:
        ++st.by_kind["unassign"];
        fwd ? do_unassign(s, R, heap, k, st) : do_assign(s, R, heap, k, st);
        break;
    case StmtKind::Swap: {
        ++st.by_kind["swap"];
        reg(R, s.x, s.pos);
        reg(R, s.y, s.pos);
        std::swap(R.at(s.x), R.at(s.y));
        break;
    }
    case StmtKind::MemSwap:
        ++st.by_kind["memswap"];
        reg(R, s.y, s.pos);
        do_memswap(s, R, heap, diags);
        break;
    default: throw StepError(StepErrorKind::InvalidState, s.pos, "not a primitive statement");
    }
    ++st.steps;
    st.peak_registers = std::max(st.peak_registers, R.size());
}

// ---- small-step machine ----

Machine::Machine(StmtPtr s, Registers R, HeapState heap, Direction dir, const RunConfig& cfg)
    : cur_(std::move(s)), R_(std::move(R)), heap_(std::move(heap)), dir_(dir), cfg_(cfg) {
    stats_.peak_registers = R_.size();
}

bool Machine::done() const { return cur_ == nullptr; }

void Machine::step() {
    if (!cur_) return;
    if (stats_.steps >= cfg_.step_limit)
        throw StepError(StepErrorKind::StepLimitExceeded, cur_->pos,
                        "step limit of " + std::to_string(cfg_.step_limit) + " reached");
    bool fwd = dir_ == Direction::Forward;
    // Descending into a sequence is bookkeeping, not a step.
    while (cur_->kind == StmtKind::Seq) {
        cont_.push_back(fwd ? cur_->b : cur_->a);
        cur_ = fwd ? cur_->a : cur_->b;
    }
    const Stmt& s = *cur_;
    if (s.kind == StmtKind::If) {
        const Value& c = reg(R_, s.x, s.pos);
        ++stats_.steps;
        ++stats_.by_kind["if"];
        if (c.n & 1) {
            cur_ = s.a;
            return;
        }
    } else {
        std::size_t depth = cont_.size();
        try {
            exec_leaf(s, dir_, R_, heap_, cfg_.k, stats_, diags_);
        } catch (StepError& e) {
            if (e.kind == StepErrorKind::StuckUnAssign) {
                e.derivation = depth ? "Stuck-SeqStep x" + std::to_string(depth) + " / Stuck-UnAssign"
                                     : std::string("Stuck-UnAssign");
            }
            throw;
        }
    }
    if (cont_.empty()) {
        cur_ = nullptr;
    } else {
        cur_ = cont_.back();
        cont_.pop_back();
    }
    if (cfg_.validate) check_valid();
}

void Machine::run_to_end() {
    if (cfg_.validate) check_valid();
    while (!done()) step();
}

StmtPtr Machine::residual() const {
    if (!cur_) return mk_skip();
    std::vector<StmtPtr> parts;
    if (dir_ == Direction::Forward) {
        parts.push_back(cur_);
        for (auto it = cont_.rbegin(); it != cont_.rend(); ++it) parts.push_back(*it);
    } else {
        parts.assign(cont_.begin(), cont_.end());
        parts.push_back(cur_);
    }
    return mk_seq(parts);
}

static void collect_ptrs(const Value& v, std::vector<const Value*>& out) {
    if (v.kind == ValueKind::Pair) {
        collect_ptrs(v.first(), out);
        collect_ptrs(v.second(), out);
    } else if (v.kind == ValueKind::Addr) {
        out.push_back(&v);
    }
}

void Machine::check_valid() const {
    VarContext gamma;
    // any address is a well-typed pointer; dangling ones only make memory swaps no-ops
    for (const auto& [x, v] : R_) gamma[x] = value_type(v);
    StmtPtr r = residual();
    if (dir_ == Direction::Reverse) r = invert(r);
    CheckContext cx;
    cx.k = cfg_.k;
    if (auto err = check_stmt(cx, gamma, r))
        throw StepError(StepErrorKind::InvalidState, err->pos, "residual state ill-typed: [" + err->rule + "] " + err->message);
}

// ---- whole runs ----

Value load(const HeapState& heap, const Value& ptr) {
    const auto& blk = heap.block(ptr.n);
    return unflatten(ptr.pointee, blk);
}

std::set<Word> reachable_blocks(const Registers& R, const HeapState& heap) {
    std::set<Word> seen;
    std::vector<Value> work;
    for (const auto& [x, v] : R) work.push_back(v);
    while (!work.empty()) {
        Value v = std::move(work.back());
        work.pop_back();
        std::vector<const Value*> ptrs;
        collect_ptrs(v, ptrs);
        std::vector<Value> next;
        for (const Value* p : ptrs) {
            if (!heap.allocated(p->n) || !seen.insert(p->n).second) continue;
            if (p->pointee) next.push_back(load(heap, *p));
        }
        for (auto& n : next) work.push_back(std::move(n));
    }
    return seen;
}

static void check_leaks(const RunResult& res, const std::set<std::string>& keep, const TraceStats& st) {
    std::vector<std::string> vars;
    for (const auto& [x, v] : res.R)
        if (!keep.count(x)) vars.push_back(x);
    if (!vars.empty()) {
        SourcePos pos;
        auto b = st.born.find(vars.front());
        if (b != st.born.end()) pos = b->second;
        std::string list;
        for (const auto& v : vars) list += (list.empty() ? "" : ", ") + v;
        StepError err(StepErrorKind::Leak, pos, "registers still bound at exit: " + list);
        err.var = vars.front();
        err.leaked_vars = vars;
        throw err;
    }
    auto live = reachable_blocks(res.R, res.heap);
    std::vector<Word> lost;
    for (Word a : res.heap.allocated_blocks())
        if (!live.count(a)) lost.push_back(a);
    if (!lost.empty()) {
        SourcePos pos;
        auto s = st.alloc_site.find(lost.front());
        if (s != st.alloc_site.end()) pos = s->second;
        std::string list;
        for (Word a : lost) list += (list.empty() ? "" : ", ") + std::to_string(a);
        StepError err(StepErrorKind::Leak, pos, "unreachable heap blocks still allocated: " + list);
        err.leaked_blocks = lost;
        throw err;
    }
}

RunResult run_statement(const StmtPtr& s, Registers R, HeapState heap, Direction dir, const RunConfig& cfg,
                        const std::set<std::string>& keep) {
    Machine m(s, std::move(R), std::move(heap), dir, cfg);
    m.run_to_end();
    RunResult res{m.registers(), m.heap(), m.stats(), m.diagnostics()};
    check_leaks(res, keep, res.stats);
    return res;
}

RunResult run_lowered(const Lowered& low, Registers R, HeapState heap, Direction dir, const RunConfig& cfg) {
    std::set<std::string> keep;
    for (const auto& p : low.inputs) keep.insert(p.name);
    if (dir == Direction::Forward) keep.insert(low.output);
    return run_statement(low.core, std::move(R), std::move(heap), dir, cfg, keep);
}

// ---- call-aware interpretation ----

namespace {

class CallExec {
public:
    CallExec(const Program& p, HeapState& heap, const RunConfig& cfg) : prog_(p), heap_(heap), cfg_(cfg) {}

    TraceStats stats;
    std::vector<Diagnostic> diags;

    void exec(const StmtPtr& s, Direction dir, Registers& R, std::optional<int> bound) {
        if (stats.steps > cfg_.step_limit)
            throw StepError(StepErrorKind::StepLimitExceeded, s->pos, "step limit reached");
        switch (s->kind) {
        case StmtKind::Seq:
            if (dir == Direction::Forward) {
                exec(s->a, dir, R, bound);
                exec(s->b, dir, R, bound);
            } else {
                exec(s->b, dir, R, bound);
                exec(s->a, dir, R, bound);
            }
            return;
        case StmtKind::If:
            ++stats.steps;
            if (reg(R, s->x, s->pos).n & 1) exec(s->a, dir, R, bound);
            return;
        case StmtKind::Assign:
        case StmtKind::UnAssign:
            if (s->e.kind == ExprKind::Call) {
                bool produce = (s->kind == StmtKind::Assign) == (dir == Direction::Forward);
                call(*s, produce, R, bound);
                return;
            }
            [[fallthrough]];
        default: exec_leaf(*s, dir, R, heap_, cfg_.k, stats, diags);
        }
    }

private:
    const Program& prog_;
    HeapState& heap_;
    const RunConfig& cfg_;

    void call(const Stmt& s, bool produce, Registers& R, std::optional<int> bound) {
        const FunDecl* f = prog_.find(s.e.fn);
        if (!f) throw StepError(StepErrorKind::InvalidState, s.pos, "unknown function '" + s.e.fn + "'");
        std::optional<int> inner;
        if (f->bound_var) {
            const Bound& b = *s.e.bound;
            int v = b.kind == Bound::Kind::Const ? b.n
                    : b.kind == Bound::Kind::Var ? bound.value_or(0)
                                                 : std::max(0, bound.value_or(0) - b.n);
            if (v == 0) {
                Type rt = s.ty ? s.ty : f->ret;
                auto base = produce ? mk_assign(s.x, Expr::literal(default_value(rt)), s.pos, rt)
                                    : mk_unassign(s.x, Expr::literal(default_value(rt)), s.pos, rt);
                exec_leaf(*base, Direction::Forward, R, heap_, cfg_.k, stats, diags);
                return;
            }
            inner = v;
        }
        Registers F;
        for (std::size_t i = 0; i < f->params.size(); ++i) F[f->params[i].name] = reg(R, s.e.args[i], s.pos);
        bool ret_is_param = std::any_of(f->params.begin(), f->params.end(),
                                        [&](const Param& p) { return p.name == f->ret_var; });
        if (produce) {
            if (R.count(s.x)) throw StepError(StepErrorKind::InvalidState, s.pos, "register '" + s.x + "' is already bound");
            exec(f->body, Direction::Forward, F, inner);
            Value r = F.at(f->ret_var);
            if (!ret_is_param) F.erase(f->ret_var);
            copy_back(*f, s, F, R);
            R[s.x] = r;
        } else {
            Value held = reg(R, s.x, s.pos);
            if (ret_is_param) {
                if (held != F.at(f->ret_var)) {
                    StepError err(StepErrorKind::StuckUnAssign, s.pos,
                                  "'" + s.x + "' holds " + to_string(held) + " but the call returns " +
                                      to_string(F.at(f->ret_var)));
                    err.var = s.x;
                    throw err;
                }
            } else {
                F[f->ret_var] = held;
            }
            R.erase(s.x);
            exec(f->body, Direction::Reverse, F, inner);
            copy_back(*f, s, F, R);
        }
    }

    static void copy_back(const FunDecl& f, const Stmt& s, const Registers& F, Registers& R) {
        for (std::size_t i = 0; i < f.params.size(); ++i) R[s.e.args[i]] = F.at(f.params[i].name);
    }
};

} // namespace

RunResult run_with_calls(const Program& checked, const std::string& entry, std::optional<int> bound, Registers R,
                         HeapState heap, Direction dir, const RunConfig& cfg) {
    const FunDecl* f = checked.find(entry);
    if (!f) throw StepError(StepErrorKind::InvalidState, {}, "no function named '" + entry + "'");
    CallExec ex(checked, heap, cfg);
    ex.exec(f->body, dir, R, bound);
    std::set<std::string> keep;
    for (const auto& p : f->params) keep.insert(p.name);
    if (dir == Direction::Forward) keep.insert(f->ret_var);
    RunResult res{std::move(R), std::move(heap), ex.stats, ex.diags};
    check_leaks(res, keep, res.stats);
    return res;
}

} // namespace tower
