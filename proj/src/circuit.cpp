#include "tower/circuit.hpp"
#include "tower/syntax.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace tower {

const char* role_name(RegRole r) {
    switch (r) {
    case RegRole::Program: return "program";
    case RegRole::Ancilla: return "ancilla";
    case RegRole::Memory: return "memory";
    case RegRole::Internal: return "internal";
    }
    return "?";
}

int Netlist::reg(const std::string& name) const {
    auto it = index.find(name);
    return it == index.end() ? -1 : it->second;
}

int Netlist::add_reg(const std::string& name, int width, RegRole role) {
    auto it = index.find(name);
    if (it != index.end()) return it->second;
    int id = int(regs.size());
    regs.push_back({name, width, role});
    index[name] = id;
    return id;
}

static const char* arith_name(BinOp op) {
    switch (op) {
    case BinOp::Add: return "ADD";
    case BinOp::Sub: return "SUB";
    case BinOp::Mul: return "MUL";
    case BinOp::Eq: return "EQ";
    case BinOp::Ne: return "NE";
    case BinOp::Lt: return "LT";
    case BinOp::Le: return "LE";
    case BinOp::Gt: return "GT";
    case BinOp::Ge: return "GE";
    case BinOp::BitAnd: return "BITAND";
    case BinOp::BitOr: return "BITOR";
    case BinOp::BitXor: return "BITXOR";
    case BinOp::Shl: return "SHL";
    case BinOp::Shr: return "SHR";
    default: return "?";
    }
}

const char* macro_name(const L1Op& op) {
    switch (op.kind) {
    case MacroKind::XorConst: return "XOR-CONST";
    case MacroKind::Copy: return "CNOT-COPY";
    case MacroKind::Not: return "NOT";
    case MacroKind::AndInto: return "AND-INTO";
    case MacroKind::OrInto: return "OR-INTO";
    case MacroKind::Test: return "TEST";
    case MacroKind::Arith: return arith_name(op.op);
    case MacroKind::SwapReg: return "SWAP-REG";
    case MacroKind::QramSwap: return "QRAM-SWAP";
    case MacroKind::Control: return "CTRL";
    case MacroKind::Fresh: return "FRESH";
    case MacroKind::Retire: return "RETIRE";
    }
    return "?";
}

static int size_class(const HeapConfig& cfg, int words) {
    int best = -1;
    for (std::size_t s = 0; s < cfg.sections.size(); ++s) {
        if (cfg.sections[s].block_words < words) continue;
        if (best < 0 || cfg.sections[s].block_words < cfg.sections[best].block_words) best = int(s);
    }
    return best;
}

// ---- compile (level 1) ----

namespace {

class Compiler {
public:
    Compiler(const HeapConfig& heap, int k) : heap_(heap) {
        n_.k = k;
        Word base = 1;
        for (std::size_t s = 0; s < heap.sections.size(); ++s) {
            n_.mem.push_back({"M" + std::to_string(s), base, heap.sections[s].count, heap.sections[s].block_words});
            base += heap.sections[s].count;
            n_.hp.push_back(n_.add_reg("hp" + std::to_string(s), k, RegRole::Memory));
        }
    }

    void declare(const std::string& v, const Type& t, RegRole role) {
        n_.var_types[v] = t;
        roles_[v] = role;
    }

    void collect(const StmtPtr& s) {
        switch (s->kind) {
        case StmtKind::Seq:
            collect(s->a);
            collect(s->b);
            break;
        case StmtKind::If: collect(s->a); break;
        case StmtKind::Assign:
        case StmtKind::UnAssign:
            if (s->e.kind == ExprKind::Call)
                throw CompileError(s->pos, "call to '" + s->e.fn + "' must be inlined before compiling");
            if (!s->ty) throw CompileError(s->pos, "statement for '" + s->x + "' has no type annotation");
            if (!n_.var_types.count(s->x)) declare(s->x, s->ty, RegRole::Ancilla);
            break;
        default: break;
        }
    }

    const std::vector<int>& regs(const std::string& v, SourcePos pos) {
        auto it = n_.var_regs.find(v);
        if (it != n_.var_regs.end()) return it->second;
        auto t = n_.var_types.find(v);
        if (t == n_.var_types.end()) throw CompileError(pos, "variable '" + v + "' has no known type");
        int wc = word_count(t->second);
        std::vector<int> ids;
        for (int i = 0; i < wc; ++i)
            ids.push_back(n_.add_reg(wc == 1 ? v : v + "#" + std::to_string(i), n_.k, roles_[v]));
        return n_.var_regs[v] = ids;
    }

    std::vector<L1Op> stmt(const StmtPtr& s) {
        std::vector<L1Op> out;
        emit(s, out);
        return out;
    }

    Netlist take(std::vector<L1Op> ops) {
        n_.ops = std::move(ops);
        n_.level = 1;
        return std::move(n_);
    }

private:
    Netlist n_;
    const HeapConfig& heap_;
    std::map<std::string, RegRole> roles_;

    static L1Op op(MacroKind k, SourcePos pos) {
        L1Op o;
        o.kind = k;
        o.pos = pos;
        return o;
    }

    void emit(const StmtPtr& s, std::vector<L1Op>& out) {
        switch (s->kind) {
        case StmtKind::Skip: return;
        case StmtKind::Seq:
            emit(s->a, out);
            emit(s->b, out);
            return;
        case StmtKind::Assign:
        case StmtKind::UnAssign: {
            const auto& dst = regs(s->x, s->pos);
            if (dst.empty()) return;
            std::vector<L1Op> u = compute(s->e, dst, s->pos);
            if (s->kind == StmtKind::Assign) {
                L1Op f = op(MacroKind::Fresh, s->pos);
                f.dst = dst;
                out.push_back(f);
                out.insert(out.end(), u.begin(), u.end());
            } else {
                auto adj = adjoint_ops(u);
                out.insert(out.end(), adj.begin(), adj.end());
                L1Op r = op(MacroKind::Retire, s->pos);
                r.dst = dst;
                out.push_back(r);
            }
            return;
        }
        case StmtKind::Swap: {
            L1Op o = op(MacroKind::SwapReg, s->pos);
            o.a = regs(s->x, s->pos);
            o.b = regs(s->y, s->pos);
            if (!o.a.empty()) out.push_back(o);
            return;
        }
        case StmtKind::MemSwap: {
            Type pt = head(n_.var_types.at(s->x));
            int sec = size_class(heap_, std::max(1, word_count(pt->a)));
            if (sec < 0) throw CompileError(s->pos, "no heap section holds " + to_string(pt->a));
            L1Op o = op(MacroKind::QramSwap, s->pos);
            o.a = regs(s->x, s->pos);
            o.dst = regs(s->y, s->pos);
            o.section = sec;
            if (!o.dst.empty()) out.push_back(o);
            return;
        }
        case StmtKind::If: {
            L1Op o = op(MacroKind::Control, s->pos);
            o.ctrl = regs(s->x, s->pos).at(0);
            emit(s->a, o.body);
            out.push_back(std::move(o));
            return;
        }
        }
    }

    // U_e: dst ^= value of e.
    std::vector<L1Op> compute(const Expr& e, const std::vector<int>& dst, SourcePos pos) {
        std::vector<L1Op> out;
        auto one = [&](MacroKind k) {
            L1Op o = op(k, pos);
            o.dst = dst;
            return o;
        };
        switch (e.kind) {
        case ExprKind::Var: {
            L1Op o = one(MacroKind::Copy);
            o.a = regs(e.x, pos);
            out.push_back(o);
            break;
        }
        case ExprKind::Lit:
        case ExprKind::Default: {
            L1Op o = one(MacroKind::XorConst);
            o.consts = flatten(e.kind == ExprKind::Lit ? e.lit : default_value(e.ty));
            o.consts.resize(dst.size(), 0);
            out.push_back(o);
            break;
        }
        case ExprKind::Pair: {
            L1Op o = one(MacroKind::Copy);
            o.a = regs(e.x, pos);
            const auto& y = regs(e.y, pos);
            o.a.insert(o.a.end(), y.begin(), y.end());
            out.push_back(o);
            break;
        }
        case ExprKind::Proj: {
            Type t = head(n_.var_types.at(e.x));
            int first = word_count(t->a);
            const auto& src = regs(e.x, pos);
            L1Op o = one(MacroKind::Copy);
            if (e.index == 1) {
                o.a.assign(src.begin(), src.begin() + first);
            } else {
                o.a.assign(src.begin() + first, src.end());
            }
            out.push_back(o);
            break;
        }
        case ExprKind::Unop: {
            L1Op o = one(e.uop == UnOp::Not ? MacroKind::Not : MacroKind::Test);
            o.a = regs(e.x, pos);
            out.push_back(o);
            break;
        }
        case ExprKind::Binop: {
            MacroKind k = e.bop == BinOp::And ? MacroKind::AndInto
                          : e.bop == BinOp::Or ? MacroKind::OrInto
                                               : MacroKind::Arith;
            L1Op o = one(k);
            o.op = e.bop;
            o.a = regs(e.x, pos);
            o.b = regs(e.y, pos);
            out.push_back(o);
            break;
        }
        case ExprKind::Alloc: {
            // let x <- null; x <-> hp; *x <-> hp
            int sec = size_class(heap_, std::max(1, word_count(e.ty)));
            if (sec < 0) throw CompileError(pos, "no heap section holds " + to_string(e.ty));
            L1Op z = one(MacroKind::XorConst);
            z.consts = {0};
            out.push_back(z);
            L1Op sw = op(MacroKind::SwapReg, pos);
            sw.a = dst;
            sw.b = {n_.hp[sec]};
            out.push_back(sw);
            L1Op q = op(MacroKind::QramSwap, pos);
            q.a = dst;
            q.dst = {n_.hp[sec]};
            q.section = sec;
            out.push_back(q);
            break;
        }
        case ExprKind::Call: throw CompileError(pos, "call to '" + e.fn + "' must be inlined before compiling");
        }
        return out;
    }

public:
    static std::vector<L1Op> adjoint_ops(const std::vector<L1Op>& ops) {
        std::vector<L1Op> out(ops.rbegin(), ops.rend());
        for (auto& o : out) {
            if (o.kind == MacroKind::Control) o.body = adjoint_ops(o.body);
            if (o.kind == MacroKind::Fresh) {
                o.kind = MacroKind::Retire;
            } else if (o.kind == MacroKind::Retire) {
                o.kind = MacroKind::Fresh;
            }
        }
        return out;
    }
};

} // namespace

Netlist compile(const StmtPtr& s, const std::vector<Param>& inputs, const HeapConfig& heap, int k) {
    Compiler c(heap, k);
    for (const auto& p : inputs) c.declare(p.name, p.ty, RegRole::Program);
    c.collect(s);
    for (const auto& p : inputs) c.regs(p.name, {});
    return c.take(c.stmt(s));
}

Netlist compile(const Lowered& low, const HeapConfig& heap, int k) {
    Compiler c(heap, k);
    for (const auto& p : low.inputs) c.declare(p.name, p.ty, RegRole::Program);
    c.declare(low.output, low.output_type, RegRole::Program);
    c.collect(low.core);
    for (const auto& p : low.inputs) c.regs(p.name, {});
    return c.take(c.stmt(low.core));
}

// ---- expand (level 2) ----

namespace {

class Expander {
public:
    explicit Expander(const Netlist& l1) : n_(l1) {
        n_.level = 2;
        n_.gates.clear();
    }

    Netlist run() {
        std::vector<Bit> none;
        for (const auto& o : n_.ops) op(o, none, n_.gates);
        n_.ops.clear();
        return std::move(n_);
    }

private:
    Netlist n_;
    std::map<int, std::vector<int>> pool_;  // width -> free scratch registers
    int scratch_count_ = 0;

    int k() const { return n_.k; }

    int scratch(int width) {
        auto& fr = pool_[width];
        if (!fr.empty()) {
            int r = fr.back();
            fr.pop_back();
            return r;
        }
        return n_.add_reg("~t" + std::to_string(scratch_count_++), width, RegRole::Internal);
    }
    void release(int r) { pool_[n_.regs[r].width].push_back(r); }

    static void x(std::vector<Gate>& v, std::vector<Bit> c, Bit t) {
        Gate g;
        g.kind = Gate::Kind::X;
        g.controls = std::move(c);
        g.t1 = t;
        v.push_back(std::move(g));
    }
    static void cx(std::vector<Gate>& v, std::vector<Bit> c, Bit ctl, Bit t) {
        c.push_back(ctl);
        x(v, std::move(c), t);
    }
    static void ccx(std::vector<Gate>& v, std::vector<Bit> c, Bit a, Bit b, Bit t) {
        c.push_back(a);
        c.push_back(b);
        x(v, std::move(c), t);
    }

    // s = a + b + cin into zero scratch s (k bits) and carries c (k+1 bits).
    void ripple(std::vector<Gate>& v, int s, int a, int b, int c, bool cin) {
        if (cin) x(v, {}, {c, 0});
        for (int i = 0; i < k(); ++i) {
            ccx(v, {}, {a, i}, {b, i}, {c, i + 1});
            ccx(v, {}, {a, i}, {c, i}, {c, i + 1});
            ccx(v, {}, {b, i}, {c, i}, {c, i + 1});
            cx(v, {}, {a, i}, {s, i});
            cx(v, {}, {b, i}, {s, i});
            cx(v, {}, {c, i}, {s, i});
        }
    }

    int copy_of(std::vector<Gate>& v, int r, std::vector<int>& held) {
        int t = scratch(k());
        held.push_back(t);
        for (int i = 0; i < k(); ++i) cx(v, {}, {r, i}, {t, i});
        return t;
    }

    // Emits comp, the controlled final writes, then the inverse of comp.
    void around(std::vector<Gate>& out, const std::vector<Gate>& comp, const std::vector<Gate>& writes,
                std::vector<int>& held) {
        out.insert(out.end(), comp.begin(), comp.end());
        out.insert(out.end(), writes.begin(), writes.end());
        out.insert(out.end(), comp.rbegin(), comp.rend());
        for (int r : held) release(r);
    }

    void arith(const L1Op& o, const std::vector<Bit>& C, std::vector<Gate>& out) {
        int d = o.dst.at(0), a = o.a.at(0), b = o.b.at(0);
        std::vector<Gate> comp, writes;
        std::vector<int> held;
        auto fresh = [&](int w) {
            int r = scratch(w);
            held.push_back(r);
            return r;
        };
        auto write_word = [&](int s) {
            for (int i = 0; i < k(); ++i) cx(writes, C, {s, i}, {d, i});
        };
        switch (o.op) {
        case BinOp::Add: {
            int s = fresh(k()), c = fresh(k() + 1);
            ripple(comp, s, a, b, c, false);
            write_word(s);
            break;
        }
        case BinOp::Sub:
        case BinOp::Lt:
        case BinOp::Le:
        case BinOp::Gt:
        case BinOp::Ge: {
            // lhs - rhs as lhs + ~rhs + 1; the final carry is 1 iff lhs >= rhs.
            bool swapped = o.op == BinOp::Gt || o.op == BinOp::Le;
            int lhs = swapped ? b : a, rhs = swapped ? a : b;
            int nb = copy_of(comp, rhs, held);
            for (int i = 0; i < k(); ++i) x(comp, {}, {nb, i});
            int s = fresh(k()), c = fresh(k() + 1);
            ripple(comp, s, lhs, nb, c, true);
            Bit carry{c, k()};
            if (o.op == BinOp::Sub) {
                write_word(s);
            } else if (o.op == BinOp::Ge || o.op == BinOp::Le) {
                cx(writes, C, carry, {d, 0});
            } else {
                x(writes, C, {d, 0});
                cx(writes, C, carry, {d, 0});
            }
            break;
        }
        case BinOp::Mul: {
            std::vector<int> pp;
            for (int i = 0; i < k(); ++i) {
                int p = fresh(k());
                for (int j = i; j < k(); ++j) ccx(comp, {}, {a, j - i}, {b, i}, {p, j});
                pp.push_back(p);
            }
            int acc = pp[0];
            for (int i = 1; i < k(); ++i) {
                int s = fresh(k()), c = fresh(k() + 1);
                ripple(comp, s, acc, pp[i], c, false);
                acc = s;
            }
            write_word(acc);
            break;
        }
        case BinOp::Eq:
        case BinOp::Ne: {
            int t = copy_of(comp, a, held);
            for (int i = 0; i < k(); ++i) cx(comp, {}, {b, i}, {t, i});
            for (int i = 0; i < k(); ++i) x(comp, {}, {t, i});
            std::vector<Bit> cs = C;
            for (int i = 0; i < k(); ++i) cs.push_back({t, i});
            x(writes, cs, {d, 0});
            if (o.op == BinOp::Ne) x(writes, C, {d, 0});
            break;
        }
        case BinOp::BitAnd:
            for (int i = 0; i < k(); ++i) ccx(writes, C, {a, i}, {b, i}, {d, i});
            break;
        case BinOp::BitOr:
            for (int i = 0; i < k(); ++i) {
                cx(writes, C, {a, i}, {d, i});
                cx(writes, C, {b, i}, {d, i});
                ccx(writes, C, {a, i}, {b, i}, {d, i});
            }
            break;
        case BinOp::BitXor:
            for (int i = 0; i < k(); ++i) {
                cx(writes, C, {a, i}, {d, i});
                cx(writes, C, {b, i}, {d, i});
            }
            break;
        case BinOp::Shl:
        case BinOp::Shr: {
            bool left = o.op == BinOp::Shl;
            int sb = copy_of(comp, b, held);
            int cur = copy_of(comp, a, held);
            int j = 0;
            for (; (1 << j) < k(); ++j) {
                int sh = 1 << j;
                int next = fresh(k());
                for (int i = 0; i < k(); ++i) {
                    int from = left ? i - sh : i + sh;
                    if (from >= 0 && from < k()) ccx(comp, {}, {sb, j}, {cur, from}, {next, i});
                }
                x(comp, {}, {sb, j});
                for (int i = 0; i < k(); ++i) ccx(comp, {}, {sb, j}, {cur, i}, {next, i});
                x(comp, {}, {sb, j});
                cur = next;
            }
            // Shift amounts with any bit worth >= k set clear the word.
            int z = fresh(1);
            std::vector<Bit> high;
            for (int h = j; h < k(); ++h) high.push_back({sb, h});
            for (const auto& hb : high) x(comp, {}, hb);
            x(comp, high, {z, 0});
            for (const auto& hb : high) x(comp, {}, hb);
            for (int i = 0; i < k(); ++i) ccx(writes, C, {z, 0}, {cur, i}, {d, i});
            break;
        }
        default: break;
        }
        around(out, comp, writes, held);
    }

    void op(const L1Op& o, const std::vector<Bit>& C, std::vector<Gate>& out) {
        switch (o.kind) {
        case MacroKind::XorConst:
            for (std::size_t w = 0; w < o.dst.size(); ++w)
                for (int i = 0; i < k(); ++i)
                    if ((o.consts[w] >> i) & 1) x(out, C, {o.dst[w], i});
            break;
        case MacroKind::Copy:
            for (std::size_t w = 0; w < o.dst.size(); ++w)
                for (int i = 0; i < k(); ++i) cx(out, C, {o.a[w], i}, {o.dst[w], i});
            break;
        case MacroKind::Not:
            x(out, C, {o.dst[0], 0});
            cx(out, C, {o.a[0], 0}, {o.dst[0], 0});
            break;
        case MacroKind::AndInto: ccx(out, C, {o.a[0], 0}, {o.b[0], 0}, {o.dst[0], 0}); break;
        case MacroKind::OrInto:
            cx(out, C, {o.a[0], 0}, {o.dst[0], 0});
            cx(out, C, {o.b[0], 0}, {o.dst[0], 0});
            ccx(out, C, {o.a[0], 0}, {o.b[0], 0}, {o.dst[0], 0});
            break;
        case MacroKind::Test: {
            std::vector<Gate> comp, writes;
            std::vector<int> held;
            int t = copy_of(comp, o.a[0], held);
            for (int i = 0; i < k(); ++i) x(comp, {}, {t, i});
            std::vector<Bit> cs = C;
            for (int i = 0; i < k(); ++i) cs.push_back({t, i});
            x(writes, cs, {o.dst[0], 0});
            around(out, comp, writes, held);
            break;
        }
        case MacroKind::Arith: arith(o, C, out); break;
        case MacroKind::SwapReg:
            for (std::size_t w = 0; w < o.a.size(); ++w) {
                if (o.a[w] == o.b[w]) continue;
                for (int i = 0; i < k(); ++i) {
                    Gate g;
                    g.kind = Gate::Kind::Swap;
                    g.controls = C;
                    g.t1 = {o.a[w], i};
                    g.t2 = {o.b[w], i};
                    out.push_back(g);
                }
            }
            break;
        case MacroKind::QramSwap: {
            Gate g;
            g.kind = Gate::Kind::Qram;
            g.controls = C;
            g.addr = o.a[0];
            g.data = o.dst;
            g.section = o.section;
            out.push_back(g);
            break;
        }
        case MacroKind::Control: {
            std::vector<Bit> inner = C;
            inner.push_back({o.ctrl, 0});
            for (const auto& b : o.body) op(b, inner, out);
            break;
        }
        case MacroKind::Fresh:
        case MacroKind::Retire:
            for (int r : o.dst) {
                Gate g;
                g.kind = Gate::Kind::Assert0;
                g.reg = r;
                out.push_back(g);
            }
            break;
        }
    }
};

} // namespace

Netlist expand(const Netlist& l1) {
    if (l1.level != 1) return l1;
    Expander ex(l1);
    return ex.run();
}

Netlist adjoint(const Netlist& n) {
    Netlist r = n;
    r.ops = Compiler::adjoint_ops(n.ops);
    std::reverse(r.gates.begin(), r.gates.end());
    return r;
}

// ---- simulation ----

Word& CircuitState::block_word(const Netlist& n, int section, Word addr, int w) {
    const auto& m = n.mem.at(section);
    return mem.at(section).at(std::size_t(addr - m.base) * m.block_words + w);
}

CircuitState zero_state(const Netlist& n) {
    CircuitState st;
    st.regs.assign(n.regs.size(), 0);
    for (const auto& m : n.mem) st.mem.emplace_back(std::size_t(m.count) * m.block_words, 0);
    return st;
}

static Word wmask(int width) { return width >= 32 ? ~Word(0) : (Word(1) << width) - 1; }

static void qram(const Netlist& n, CircuitState& st, int section, Word addr, const std::vector<int>& data) {
    const auto& m = n.mem.at(section);
    if (addr < m.base || addr >= m.base + Word(m.count)) return;  // null and foreign addresses: identity
    for (std::size_t w = 0; w < data.size() && int(w) < m.block_words; ++w)
        std::swap(st.regs[data[w]], st.block_word(n, section, addr, int(w)));
}

static void check_zero(const Netlist& n, const CircuitState& st, int r) {
    if (st.regs[r] != 0) throw AncillaViolation(n.regs[r].name, st.regs[r]);
}

static void sim_l1(const Netlist& n, CircuitState& st, const std::vector<L1Op>& ops) {
    auto& R = st.regs;
    Word m = wmask(n.k);
    for (const auto& o : ops) {
        switch (o.kind) {
        case MacroKind::XorConst:
            for (std::size_t w = 0; w < o.dst.size(); ++w) R[o.dst[w]] ^= o.consts[w] & m;
            break;
        case MacroKind::Copy:
            for (std::size_t w = 0; w < o.dst.size(); ++w) R[o.dst[w]] ^= R[o.a[w]];
            break;
        case MacroKind::Not: R[o.dst[0]] ^= (~R[o.a[0]]) & 1; break;
        case MacroKind::AndInto: R[o.dst[0]] ^= R[o.a[0]] & R[o.b[0]] & 1; break;
        case MacroKind::OrInto: R[o.dst[0]] ^= (R[o.a[0]] | R[o.b[0]]) & 1; break;
        case MacroKind::Test: R[o.dst[0]] ^= R[o.a[0]] == 0 ? 1 : 0; break;
        case MacroKind::Arith: {
            Word a = R[o.a[0]], b = R[o.b[0]], v = 0;
            switch (o.op) {
            case BinOp::Add: v = (a + b) & m; break;
            case BinOp::Sub: v = (a - b) & m; break;
            case BinOp::Mul: v = (a * b) & m; break;
            case BinOp::Eq: v = a == b; break;
            case BinOp::Ne: v = a != b; break;
            case BinOp::Lt: v = a < b; break;
            case BinOp::Le: v = a <= b; break;
            case BinOp::Gt: v = a > b; break;
            case BinOp::Ge: v = a >= b; break;
            case BinOp::BitAnd: v = a & b; break;
            case BinOp::BitOr: v = a | b; break;
            case BinOp::BitXor: v = a ^ b; break;
            case BinOp::Shl: v = b >= Word(n.k) ? 0 : (a << b) & m; break;
            case BinOp::Shr: v = b >= Word(n.k) ? 0 : a >> b; break;
            default: break;
            }
            R[o.dst[0]] ^= v;
            break;
        }
        case MacroKind::SwapReg:
            for (std::size_t w = 0; w < o.a.size(); ++w) std::swap(R[o.a[w]], R[o.b[w]]);
            break;
        case MacroKind::QramSwap: qram(n, st, o.section, R[o.a[0]], o.dst); break;
        case MacroKind::Control:
            if (R[o.ctrl] & 1) sim_l1(n, st, o.body);
            break;
        case MacroKind::Fresh:
        case MacroKind::Retire:
            for (int r : o.dst) check_zero(n, st, r);
            break;
        }
    }
}

static bool bit(const CircuitState& st, Bit b) { return (st.regs[b.reg] >> b.bit) & 1; }

static void sim_l2(const Netlist& n, CircuitState& st) {
    for (const auto& g : n.gates) {
        bool on = true;
        for (const auto& c : g.controls)
            if (!bit(st, c)) {
                on = false;
                break;
            }
        switch (g.kind) {
        case Gate::Kind::X:
            if (on) st.regs[g.t1.reg] ^= Word(1) << g.t1.bit;
            break;
        case Gate::Kind::Swap:
            if (on && bit(st, g.t1) != bit(st, g.t2)) {
                st.regs[g.t1.reg] ^= Word(1) << g.t1.bit;
                st.regs[g.t2.reg] ^= Word(1) << g.t2.bit;
            }
            break;
        case Gate::Kind::Qram:
            if (on) qram(n, st, g.section, st.regs[g.addr], g.data);
            break;
        case Gate::Kind::Assert0: check_zero(n, st, g.reg); break;
        }
    }
}

void simulate(const Netlist& n, CircuitState& st) {
    if (n.level == 1) {
        sim_l1(n, st, n.ops);
    } else {
        sim_l2(n, st);
    }
}

CircuitState encode_state(const Netlist& n, const std::map<std::string, Value>& R, const HeapState& heap) {
    CircuitState st = zero_state(n);
    for (const auto& [v, val] : R) {
        auto it = n.var_regs.find(v);
        if (it == n.var_regs.end()) continue;
        auto words = flatten(val);
        for (std::size_t w = 0; w < it->second.size() && w < words.size(); ++w) st.regs[it->second[w]] = words[w];
    }
    for (std::size_t s = 0; s < n.mem.size() && s < heap.sections().size(); ++s) {
        st.regs[n.hp[s]] = heap.sections()[s].hp;
        const auto& m = n.mem[s];
        for (int i = 0; i < m.count; ++i) {
            const auto& blk = heap.block(m.base + i);
            for (int w = 0; w < m.block_words; ++w) st.block_word(n, int(s), m.base + i, w) = blk[w];
        }
    }
    return st;
}

bool state_matches(const Netlist& n, const CircuitState& st, const std::map<std::string, Value>& R,
                   const HeapState& heap, std::string* why) {
    auto fail = [&](const std::string& m) {
        if (why) *why = m;
        return false;
    };
    std::vector<char> owned(n.regs.size(), 0);
    for (const auto& [v, val] : R) {
        auto it = n.var_regs.find(v);
        if (it == n.var_regs.end()) continue;
        auto words = flatten(val);
        for (std::size_t w = 0; w < it->second.size(); ++w) {
            int r = it->second[w];
            owned[r] = 1;
            Word want = w < words.size() ? words[w] : 0;
            if (st.regs[r] != want)
                return fail("register " + n.regs[r].name + " = " + std::to_string(st.regs[r]) + ", interpreter has " +
                            std::to_string(want));
        }
    }
    for (std::size_t s = 0; s < n.hp.size(); ++s) {
        owned[n.hp[s]] = 1;
        if (st.regs[n.hp[s]] != heap.sections()[s].hp) return fail("allocation register " + n.regs[n.hp[s]].name + " differs");
    }
    for (std::size_t r = 0; r < n.regs.size(); ++r)
        if (!owned[r] && st.regs[r] != 0) return fail("register " + n.regs[r].name + " is not zero");
    for (std::size_t s = 0; s < n.mem.size(); ++s) {
        const auto& m = n.mem[s];
        for (int i = 0; i < m.count; ++i) {
            const auto& blk = heap.block(m.base + i);
            for (int w = 0; w < m.block_words; ++w)
                if (st.mem[s][std::size_t(i) * m.block_words + w] != blk[w])
                    return fail("memory " + m.name + "[" + std::to_string(m.base + i) + "] differs");
        }
    }
    return true;
}

// ---- costs ----

static void walk_cost(const std::vector<L1Op>& ops, CostReport& c, std::uint64_t& live, std::uint64_t& peak) {
    for (const auto& o : ops) {
        ++c.l1_ops;
        switch (o.kind) {
        case MacroKind::Copy:
        case MacroKind::SwapReg: ++c.by_macro[macro_name(o)]; break;
        case MacroKind::Fresh:
            live += o.dst.size();
            peak = std::max(peak, live);
            break;
        case MacroKind::Retire: live -= std::min<std::uint64_t>(live, o.dst.size()); break;
        case MacroKind::Control: walk_cost(o.body, c, live, peak); break;
        default:
            ++c.gates;
            ++c.by_macro[macro_name(o)];
            break;
        }
    }
}

CostReport cost_report(const Netlist& n) {
    CostReport c;
    if (n.level != 1) {
        c.l2_gates = n.gates.size();
        return c;
    }
    std::uint64_t live = 0;
    // Input registers are live from the start.
    for (const auto& [v, regs] : n.var_regs)
        if (!regs.empty() && n.regs[regs[0]].role == RegRole::Program) live += regs.size();
    // The output is introduced by its own FRESH; do not count it twice.
    std::uint64_t born_outputs = 0;
    std::function<void(const std::vector<L1Op>&)> scan = [&](const std::vector<L1Op>& ops) {
        for (const auto& o : ops) {
            if (o.kind == MacroKind::Control) scan(o.body);
            if (o.kind == MacroKind::Fresh && !o.dst.empty() && n.regs[o.dst[0]].role == RegRole::Program)
                born_outputs += o.dst.size();
        }
    };
    scan(n.ops);
    live -= std::min(live, born_outputs);
    std::uint64_t peak = live;
    walk_cost(n.ops, c, live, peak);
    c.qubits = peak * std::uint64_t(n.k);
    return c;
}

// ---- text ----

static std::string join_regs(const Netlist& n, const std::vector<int>& rs) {
    std::string out;
    for (std::size_t i = 0; i < rs.size(); ++i) out += (i ? "," : "") + n.regs[rs[i]].name;
    return out;
}

static std::string bit_text(const Netlist& n, Bit b) { return n.regs[b.reg].name + "." + std::to_string(b.bit); }

static void op_text(const Netlist& n, const L1Op& o, int indent, std::ostream& os) {
    std::string pad(indent, ' ');
    os << pad << macro_name(o);
    switch (o.kind) {
    case MacroKind::XorConst: {
        os << " dst=" << join_regs(n, o.dst) << " val=";
        for (std::size_t i = 0; i < o.consts.size(); ++i) os << (i ? "," : "") << o.consts[i];
        break;
    }
    case MacroKind::Copy:
    case MacroKind::Not:
    case MacroKind::Test: os << " dst=" << join_regs(n, o.dst) << " a=" << join_regs(n, o.a); break;
    case MacroKind::AndInto:
    case MacroKind::OrInto:
    case MacroKind::Arith:
        os << " dst=" << join_regs(n, o.dst) << " a=" << join_regs(n, o.a) << " b=" << join_regs(n, o.b);
        break;
    case MacroKind::SwapReg: os << " a=" << join_regs(n, o.a) << " b=" << join_regs(n, o.b); break;
    case MacroKind::QramSwap:
        os << " addr=" << join_regs(n, o.a) << " data=" << join_regs(n, o.dst) << " mem=" << n.mem[o.section].name;
        break;
    case MacroKind::Fresh:
    case MacroKind::Retire: os << " dst=" << join_regs(n, o.dst); break;
    case MacroKind::Control:
        os << " " << n.regs[o.ctrl].name << ".0 {\n";
        for (const auto& b : o.body) op_text(n, b, indent + 2, os);
        os << pad << "}";
        break;
    }
    os << "\n";
}

std::string to_text(const Netlist& n) {
    std::ostringstream os;
    os << "LEVEL " << n.level << "\nK " << n.k << "\n";
    for (const auto& r : n.regs) os << "REG " << r.name << " " << r.width << " " << role_name(r.role) << "\n";
    for (const auto& m : n.mem) os << "MEM " << m.name << " " << m.base << " " << m.count << " " << m.block_words << "\n";
    for (std::size_t s = 0; s < n.hp.size(); ++s) os << "HP " << n.mem[s].name << " " << n.regs[n.hp[s]].name << "\n";
    for (const auto& [v, rs] : n.var_regs) {
        os << "VAR " << v << " " << to_string(n.var_types.at(v));
        os << " = " << (rs.empty() ? "-" : join_regs(n, rs)) << "\n";
    }
    if (n.level == 1) {
        for (const auto& o : n.ops) op_text(n, o, 0, os);
        return os.str();
    }
    for (const auto& g : n.gates) {
        switch (g.kind) {
        case Gate::Kind::X: {
            static const char* names[] = {"NOT", "CNOT", "TOFFOLI"};
            os << (g.controls.size() < 3 ? names[g.controls.size()] : "MCX");
            for (const auto& c : g.controls) os << " " << bit_text(n, c);
            os << " " << bit_text(n, g.t1) << "\n";
            break;
        }
        case Gate::Kind::Swap:
            os << (g.controls.empty() ? "SWAP" : g.controls.size() == 1 ? "CSWAP" : "MCSWAP");
            for (const auto& c : g.controls) os << " " << bit_text(n, c);
            os << " " << bit_text(n, g.t1) << " " << bit_text(n, g.t2) << "\n";
            break;
        case Gate::Kind::Qram:
            os << "QRAM addr=" << n.regs[g.addr].name << " data=" << join_regs(n, g.data) << " mem=" << n.mem[g.section].name;
            if (!g.controls.empty()) {
                os << " ctrl=";
                for (std::size_t i = 0; i < g.controls.size(); ++i) os << (i ? "," : "") << bit_text(n, g.controls[i]);
            }
            os << "\n";
            break;
        case Gate::Kind::Assert0: os << "ASSERT0 " << n.regs[g.reg].name << "\n"; break;
        }
    }
    return os.str();
}

namespace {

struct NetParser {
    Netlist n;
    int line_no = 0;

    [[noreturn]] void fail(const std::string& m) { throw NetlistParseError("line " + std::to_string(line_no) + ": " + m); }

    static std::vector<std::string> split(const std::string& s, char sep) {
        std::vector<std::string> out;
        std::string cur;
        std::istringstream is(s);
        while (std::getline(is, cur, sep))
            if (!cur.empty()) out.push_back(cur);
        return out;
    }

    int reg(const std::string& name) {
        int r = n.reg(name);
        if (r < 0) fail("unknown register '" + name + "'");
        return r;
    }
    std::vector<int> regs(const std::string& list) {
        std::vector<int> out;
        for (const auto& s : split(list, ',')) out.push_back(reg(s));
        return out;
    }
    Bit bitref(const std::string& s) {
        auto dot = s.rfind('.');
        if (dot == std::string::npos) fail("expected register.bit, got '" + s + "'");
        Bit b{reg(s.substr(0, dot)), 0};
        try {
            b.bit = std::stoi(s.substr(dot + 1));
        } catch (const std::exception&) {
            fail("bad bit index in '" + s + "'");
        }
        if (b.bit < 0 || b.bit >= n.regs[b.reg].width) fail("bit index out of range in '" + s + "'");
        return b;
    }
    int section(const std::string& name) {
        for (std::size_t s = 0; s < n.mem.size(); ++s)
            if (n.mem[s].name == name) return int(s);
        fail("unknown memory '" + name + "'");
    }
    std::map<std::string, std::string> kv(const std::vector<std::string>& toks, std::size_t from) {
        std::map<std::string, std::string> out;
        for (std::size_t i = from; i < toks.size(); ++i) {
            auto eq = toks[i].find('=');
            if (eq == std::string::npos) fail("expected key=value, got '" + toks[i] + "'");
            out[toks[i].substr(0, eq)] = toks[i].substr(eq + 1);
        }
        return out;
    }
    std::string need(std::map<std::string, std::string>& m, const std::string& key) {
        auto it = m.find(key);
        if (it == m.end()) fail("missing " + key + "=");
        return it->second;
    }

    L1Op macro(const std::vector<std::string>& t) {
        L1Op o;
        const std::string& name = t[0];
        auto m = kv(t, 1);
        static const std::map<std::string, BinOp> ops = {
            {"ADD", BinOp::Add}, {"SUB", BinOp::Sub}, {"MUL", BinOp::Mul}, {"EQ", BinOp::Eq},
            {"NE", BinOp::Ne}, {"LT", BinOp::Lt}, {"LE", BinOp::Le}, {"GT", BinOp::Gt},
            {"GE", BinOp::Ge}, {"BITAND", BinOp::BitAnd}, {"BITOR", BinOp::BitOr}, {"BITXOR", BinOp::BitXor},
            {"SHL", BinOp::Shl}, {"SHR", BinOp::Shr}};
        if (name == "XOR-CONST") {
            o.kind = MacroKind::XorConst;
            o.dst = regs(need(m, "dst"));
            for (const auto& v : split(need(m, "val"), ',')) o.consts.push_back(Word(std::stoul(v)));
            if (o.consts.size() != o.dst.size()) fail("XOR-CONST needs one value per register");
        } else if (name == "CNOT-COPY" || name == "NOT" || name == "TEST") {
            o.kind = name == "CNOT-COPY" ? MacroKind::Copy : name == "NOT" ? MacroKind::Not : MacroKind::Test;
            o.dst = regs(need(m, "dst"));
            o.a = regs(need(m, "a"));
            if (o.kind == MacroKind::Copy && o.a.size() != o.dst.size()) fail("CNOT-COPY width mismatch");
        } else if (name == "AND-INTO" || name == "OR-INTO" || ops.count(name)) {
            o.kind = name == "AND-INTO" ? MacroKind::AndInto : name == "OR-INTO" ? MacroKind::OrInto : MacroKind::Arith;
            if (o.kind == MacroKind::Arith) o.op = ops.at(name);
            o.dst = regs(need(m, "dst"));
            o.a = regs(need(m, "a"));
            o.b = regs(need(m, "b"));
        } else if (name == "SWAP-REG") {
            o.kind = MacroKind::SwapReg;
            o.a = regs(need(m, "a"));
            o.b = regs(need(m, "b"));
            if (o.a.size() != o.b.size()) fail("SWAP-REG width mismatch");
        } else if (name == "QRAM-SWAP") {
            o.kind = MacroKind::QramSwap;
            o.a = regs(need(m, "addr"));
            o.dst = regs(need(m, "data"));
            o.section = section(need(m, "mem"));
        } else if (name == "FRESH" || name == "RETIRE") {
            o.kind = name == "FRESH" ? MacroKind::Fresh : MacroKind::Retire;
            o.dst = regs(need(m, "dst"));
        } else {
            fail("unknown macro '" + name + "'");
        }
        return o;
    }

    Gate gate(const std::vector<std::string>& t) {
        Gate g;
        const std::string& name = t[0];
        if (name == "NOT" || name == "CNOT" || name == "TOFFOLI" || name == "MCX") {
            std::size_t want = name == "NOT" ? 2 : name == "CNOT" ? 3 : name == "TOFFOLI" ? 4 : 0;
            if ((want && t.size() != want) || t.size() < 2) fail(name + ": wrong operand count");
            for (std::size_t i = 1; i + 1 < t.size(); ++i) g.controls.push_back(bitref(t[i]));
            g.t1 = bitref(t.back());
        } else if (name == "SWAP" || name == "CSWAP" || name == "MCSWAP") {
            g.kind = Gate::Kind::Swap;
            std::size_t want = name == "SWAP" ? 3 : name == "CSWAP" ? 4 : 0;
            if ((want && t.size() != want) || t.size() < 3) fail(name + ": wrong operand count");
            for (std::size_t i = 1; i + 2 < t.size(); ++i) g.controls.push_back(bitref(t[i]));
            g.t1 = bitref(t[t.size() - 2]);
            g.t2 = bitref(t.back());
        } else if (name == "QRAM") {
            g.kind = Gate::Kind::Qram;
            auto m = kv(t, 1);
            g.addr = reg(need(m, "addr"));
            g.data = regs(need(m, "data"));
            g.section = section(need(m, "mem"));
            if (m.count("ctrl"))
                for (const auto& c : split(m["ctrl"], ',')) g.controls.push_back(bitref(c));
        } else if (name == "ASSERT0") {
            g.kind = Gate::Kind::Assert0;
            if (t.size() != 2) fail("ASSERT0 takes one register");
            g.reg = reg(t[1]);
        } else {
            fail("unknown gate '" + name + "'");
        }
        return g;
    }

    Netlist parse(const std::string& text) {
        std::istringstream is(text);
        std::string line;
        std::vector<std::vector<L1Op>*> stack{&n.ops};
        std::vector<L1Op> open;  // CTRL ops being filled
        std::vector<std::unique_ptr<L1Op>> frames;
        while (std::getline(is, line)) {
            ++line_no;
            auto hash = line.find(';');
            if (hash != std::string::npos) line = line.substr(0, hash);
            std::istringstream ls(line);
            std::vector<std::string> t;
            for (std::string w; ls >> w;) t.push_back(w);
            if (t.empty()) continue;
            const std::string& h = t[0];
            if (h == "LEVEL") {
                n.level = std::stoi(t.at(1));
            } else if (h == "K") {
                n.k = std::stoi(t.at(1));
            } else if (h == "REG") {
                if (t.size() != 4) fail("REG name width role");
                RegRole role = t[3] == "program" ? RegRole::Program
                               : t[3] == "ancilla" ? RegRole::Ancilla
                               : t[3] == "memory" ? RegRole::Memory
                               : t[3] == "internal" ? RegRole::Internal
                                                    : (fail("unknown role '" + t[3] + "'"), RegRole::Ancilla);
                n.add_reg(t[1], std::stoi(t[2]), role);
            } else if (h == "MEM") {
                if (t.size() != 5) fail("MEM name base count words");
                n.mem.push_back({t[1], Word(std::stoul(t[2])), std::stoi(t[3]), std::stoi(t[4])});
            } else if (h == "HP") {
                n.hp.push_back(reg(t.at(2)));
            } else if (h == "VAR") {
                // informational; register lists follow '='
                auto eq = std::find(t.begin(), t.end(), "=");
                if (eq == t.end() || eq + 1 == t.end()) fail("VAR name type = registers");
                std::string ty;
                for (auto it = t.begin() + 2; it != eq; ++it) ty += (ty.empty() ? "" : " ") + *it;
                try {
                    n.var_types[t.at(1)] = parse_type(ty);
                } catch (const ParseError&) {
                    fail("bad type '" + ty + "'");
                }
                n.var_regs[t.at(1)] = *(eq + 1) == "-" ? std::vector<int>{} : regs(*(eq + 1));
            } else if (n.level == 1) {
                if (h == "}") {
                    if (frames.empty()) fail("unbalanced '}'");
                    L1Op done = std::move(*frames.back());
                    frames.pop_back();
                    stack.pop_back();
                    stack.back()->push_back(std::move(done));
                } else if (h == "CTRL") {
                    if (t.size() != 3 || t[2] != "{") fail("CTRL reg.0 {");
                    auto f = std::make_unique<L1Op>();
                    f->kind = MacroKind::Control;
                    f->ctrl = bitref(t[1]).reg;
                    frames.push_back(std::move(f));
                    stack.push_back(&frames.back()->body);
                } else {
                    stack.back()->push_back(macro(t));
                }
            } else {
                n.gates.push_back(gate(t));
            }
        }
        if (!frames.empty()) fail("unterminated CTRL block");
        return std::move(n);
    }
};

} // namespace

Netlist parse_netlist(const std::string& text) {
    NetParser p;
    return p.parse(text);
}

void apply_init(const Netlist& n, CircuitState& st, const std::string& spec) {
    std::string s = spec;
    std::replace(s.begin(), s.end(), ';', ' ');
    std::istringstream is(s);
    for (std::string tok; is >> tok;) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) throw NetlistParseError("expected name=value, got '" + tok + "'");
        std::string name = tok.substr(0, eq), val = tok.substr(eq + 1);
        auto lb = name.find('[');
        try {
            if (lb != std::string::npos) {
                std::string mem = name.substr(0, lb);
                Word addr = Word(std::stoul(name.substr(lb + 1)));
                int sec = -1;
                for (std::size_t i = 0; i < n.mem.size(); ++i)
                    if (n.mem[i].name == mem) sec = int(i);
                if (sec < 0) throw NetlistParseError("unknown memory '" + mem + "'");
                const auto& m = n.mem[sec];
                if (addr < m.base || addr >= m.base + Word(m.count))
                    throw NetlistParseError("address " + std::to_string(addr) + " is outside " + mem);
                std::istringstream ws(val);
                std::string w;
                for (int i = 0; std::getline(ws, w, ',') && i < m.block_words; ++i)
                    st.block_word(n, sec, addr, i) = Word(std::stoul(w)) & wmask(n.k);
            } else {
                int r = n.reg(name);
                if (r < 0) throw NetlistParseError("unknown register '" + name + "'");
                st.regs[r] = Word(std::stoul(val)) & wmask(n.regs[r].width);
            }
        } catch (const std::logic_error&) {
            throw NetlistParseError("bad value in '" + tok + "'");
        }
    }
}

std::string state_text(const Netlist& n, const CircuitState& st) {
    std::ostringstream os;
    bool first = true;
    auto sep = [&]() -> std::ostream& {
        if (!first) os << ' ';
        first = false;
        return os;
    };
    for (std::size_t r = 0; r < n.regs.size(); ++r)
        if (st.regs[r]) sep() << n.regs[r].name << "=" << st.regs[r];
    for (std::size_t s = 0; s < n.mem.size(); ++s) {
        const auto& m = n.mem[s];
        for (int i = 0; i < m.count; ++i) {
            bool nz = false;
            for (int w = 0; w < m.block_words; ++w) nz |= st.mem[s][std::size_t(i) * m.block_words + w] != 0;
            if (!nz) continue;
            sep() << m.name << "[" << m.base + i << "]=";
            for (int w = 0; w < m.block_words; ++w)
                os << (w ? "," : "") << st.mem[s][std::size_t(i) * m.block_words + w];
        }
    }
    return os.str();
}

} // namespace tower
