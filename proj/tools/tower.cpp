#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "tower/check.hpp"
#include "tower/circuit.hpp"
#include "tower/ground.hpp"
#include "tower/interp.hpp"
#include "tower/syntax.hpp"
#include "tower/transform.hpp"

using namespace tower;
namespace g = tower::ground;

namespace {

// Exit codes: 0 ok, 1 diagnostics, 2 internal invariant violation.
struct Diagnostics : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Diagnostics("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_out(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw Diagnostics("cannot write " + path);
    out << text;
}

struct Common {
    std::string config;
    std::optional<int> k;
    std::string heap;
    std::optional<std::uint64_t> seed;
    std::string perm;
    std::string entry;
    std::optional<int> bound;
    bool validate = false;

    void add(CLI::App* app, bool run_opts) {
        app->add_option("--entry", entry, "function to use (default: main, else the last one)");
        app->add_option("--bound,--bounds", bound, "recursion bound for the entry");
        app->add_option("--k", k, "word size");
        app->add_option("--heap", heap, "heap sections, e.g. 1x16,4x8 (words x blocks)");
        app->add_option("--config", config, "run configuration file (JSON)");
        if (run_opts) {
            app->add_option("--seed", seed, "seeded initial heap permutation");
            app->add_option("--perm", perm, "explicit permutations, e.g. 2,3,1;1,2");
            app->add_flag("--validate", validate, "check typing validity at every step");
        }
    }

    RunConfig run_config() const {
        RunConfig cfg = config.empty() ? RunConfig{} : load_run_config(config);
        if (k) cfg.k = *k;
        if (!heap.empty()) {
            cfg.heap.sections.clear();
            std::istringstream is(heap);
            for (std::string item; std::getline(is, item, ',');) {
                auto x = item.find('x');
                if (x == std::string::npos) throw Diagnostics("heap section '" + item + "' is not WORDSxCOUNT");
                cfg.heap.sections.push_back({std::stoi(item.substr(0, x)), std::stoi(item.substr(x + 1))});
            }
        }
        if (seed && !perm.empty()) throw Diagnostics("--seed and --perm are exclusive");
        if (seed) cfg.perm = PermutationSource::seeded(*seed);
        if (!perm.empty()) {
            std::vector<std::vector<int>> perms;
            std::istringstream is(perm);
            for (std::string sec; std::getline(is, sec, ';');) {
                std::vector<int> p;
                std::istringstream ss(sec);
                for (std::string v; std::getline(ss, v, ',');) p.push_back(std::stoi(v));
                perms.push_back(p);
            }
            cfg.perm = PermutationSource::explicit_perms(perms);
        }
        if (validate) cfg.validate = true;
        return cfg;
    }
};

Program load_checked(const std::string& file, int k) {
    Program p = load_program(read_file(file), file);
    auto res = check_program(p, k);
    if (!res.ok()) {
        std::string msg;
        for (const auto& e : res.errors) msg += e.format(file) + "\n";
        msg.pop_back();
        throw Diagnostics(msg);
    }
    return res.program;
}

const FunDecl& pick_entry(const Program& p, const std::string& name) {
    if (!name.empty()) {
        if (auto* f = p.find(name)) return *f;
        throw Diagnostics(p.file + ": no function named '" + name + "'");
    }
    if (auto* f = p.find("main")) return *f;
    if (p.funs.empty()) throw Diagnostics(p.file + ": no functions");
    return p.funs.back();
}

Value input_value(const std::string& text, const Type& ty, HeapState& heap) {
    std::string t = text;
    if (!t.empty() && t.front() == '[' && g::is_list_ptr(ty)) return g::encode_list(heap, ty, g::parse_avalue(t).items);
    Type h = head(ty);
    if (!t.empty() && t.front() == '"' && h->kind == TypeKind::Pair) {
        auto s = g::parse_avalue(t);
        return coerce(Value::make_pair(Value::uint(s.n), Value::uint(s.bits)), ty);
    }
    try {
        return coerce(parse_value(t), ty);
    } catch (const std::invalid_argument& ex) {
        throw Diagnostics("input '" + t + "' for type " + to_string(ty) + ": " + ex.what());
    }
}

std::string show(const Value& v, const Type& ty, const HeapState& heap) {
    if (g::is_list_ptr(ty)) {
        try {
            return g::to_string(g::AValue::list(g::decode_list(heap, v)));
        } catch (const g::DecodeError&) {
        }
    }
    return to_string(v);
}

int words_in(const std::vector<std::string>& inputs) {
    int n = 0;
    for (const auto& s : inputs)
        if (!s.empty() && s.front() == '[') n += int(std::count(s.begin(), s.end(), ',')) + (s.size() > 2 ? 1 : 0);
    return n;
}

Lowered lower(const Program& p, const FunDecl& f, const Common& c, int k, int list_elems) {
    InlineOptions o;
    o.entry = f.name;
    if (f.bound_var) o.bound = c.bound ? *c.bound : std::max(list_elems, k) + 1;
    return inline_program(p, o);
}

void print_diags(const std::vector<Diagnostic>& diags, const std::string& file) {
    for (const auto& d : diags)
        std::cerr << file << ":" << d.pos.line << ":" << d.pos.col << ": warning[" << d.kind << "]: " << d.message
                  << "\n";
}

int cmd_check(const std::string& file, int k) {
    Program p = load_checked(file, k);
    std::cout << file << ": ok (" << p.funs.size() << " functions)\n";
    return 0;
}

int cmd_run(const std::string& file, const std::vector<std::string>& inputs, bool reverse, bool stats,
            const Common& c) {
    RunConfig cfg = c.run_config();
    Program p = load_checked(file, cfg.k);
    const FunDecl& f = pick_entry(p, c.entry);
    Lowered low = lower(p, f, c, cfg.k, words_in(inputs));
    HeapState heap = HeapState::init(cfg.heap, cfg.perm, cfg.k);

    std::size_t want = low.inputs.size();
    bool unit_out = head(low.output_type)->kind == TypeKind::Unit;
    if (reverse ? (inputs.size() != want + 1 && !(unit_out && inputs.size() == want)) : inputs.size() != want)
        throw Diagnostics(f.name + " takes " + std::to_string(want) + " inputs" +
                          (reverse ? " followed by its result" : ""));
    Registers R;
    for (std::size_t i = 0; i < want; ++i) R[low.inputs[i].name] = input_value(inputs[i], low.inputs[i].ty, heap);
    if (reverse)
        R[low.output] = inputs.size() > want ? input_value(inputs[want], low.output_type, heap)
                                             : default_value(low.output_type);
    std::map<std::string, std::string> before;
    for (const auto& in : low.inputs) before[in.name] = show(R.at(in.name), in.ty, heap);

    RunResult res = run_lowered(low, R, heap, reverse ? Direction::Reverse : Direction::Forward, cfg);
    print_diags(res.diagnostics, file);
    if (reverse) {
        for (const auto& in : low.inputs)
            std::cout << in.name << " = " << show(res.R.at(in.name), in.ty, res.heap) << "\n";
    } else {
        std::vector<std::string> changed;
        for (const auto& in : low.inputs) {
            std::string now = show(res.R.at(in.name), in.ty, res.heap);
            if (now != before[in.name]) changed.push_back(in.name + " = " + now);
        }
        if (unit_out && changed.size() == 1) {
            std::cout << changed[0].substr(changed[0].find(" = ") + 3) << "\n";
        } else {
            if (!unit_out) std::cout << show(res.R.at(low.output), low.output_type, res.heap) << "\n";
            for (const auto& s : changed) std::cout << s << "\n";
        }
    }
    if (stats)
        std::cerr << "steps " << res.stats.steps << ", peak registers " << res.stats.peak_registers << ", allocs "
                  << res.stats.allocs << ", deallocs " << res.stats.deallocs << "\n";
    return 0;
}

std::string signature_comment(const Lowered& low) {
    std::string s = "// inputs:";
    for (const auto& in : low.inputs) s += " " + in.name + ": " + to_string(in.ty);
    s += "\n// output: " + low.output + ": " + to_string(low.output_type) + "\n";
    return s;
}

int cmd_core(const std::string& file, const std::string& out, bool inverted, const Common& c) {
    RunConfig cfg = c.run_config();
    Program p = load_checked(file, cfg.k);
    const FunDecl& f = pick_entry(p, c.entry);
    Lowered low = lower(p, f, c, cfg.k, 0);
    StmtPtr s = inverted ? invert(low.core) : low.core;
    std::string text = signature_comment(low);
    if (inverted) text += "// inverse: consumes the output, leaves the inputs\n";
    write_out(out, text + print_stmt(s) + "\n");
    return 0;
}

int cmd_compile(const std::string& file, const std::string& level, const std::string& out, bool cost,
                const Common& c) {
    RunConfig cfg = c.run_config();
    Program p = load_checked(file, cfg.k);
    const FunDecl& f = pick_entry(p, c.entry);
    Lowered low = lower(p, f, c, cfg.k, 0);
    Netlist n = compile(low, cfg.heap, cfg.k);
    if (cost) {
        auto r = cost_report(n);
        std::cerr << "gates " << r.gates << ", qubits " << r.qubits << ", level-1 ops " << r.l1_ops << "\n";
    }
    if (level == "l2") n = expand(n);
    else if (level != "l1") throw Diagnostics("--level is l1 or l2");
    write_out(out, to_text(n));
    return 0;
}

int cmd_simulate(const std::string& file, const std::string& init, bool no_heap, bool reverse) {
    Netlist n;
    try {
        n = parse_netlist(read_file(file));
    } catch (const NetlistParseError& ex) {
        throw Diagnostics(file + ": " + ex.what());
    }
    CircuitState st = zero_state(n);
    if (!no_heap && !n.mem.empty()) {
        HeapConfig hc;
        hc.sections.clear();
        for (const auto& m : n.mem) hc.sections.push_back({m.block_words, m.count});
        st = encode_state(n, {}, HeapState::init(hc, PermutationSource::identity(), n.k));
    }
    try {
        apply_init(n, st, init);
    } catch (const NetlistParseError& ex) {
        throw Diagnostics(std::string("--init: ") + ex.what());
    }
    simulate(reverse ? adjoint(n) : n, st);
    std::cout << state_text(n, st) << "\n";
    return 0;
}

std::vector<int> parse_range(std::string s, int lo, int hi) {
    if (auto eq = s.find('='); eq != std::string::npos) s = s.substr(eq + 1);
    if (s.empty()) {
        std::vector<int> v;
        for (int i = lo; i <= hi; ++i) v.push_back(i);
        return v;
    }
    auto dots = s.find("..");
    std::vector<int> v;
    if (dots == std::string::npos) {
        v.push_back(std::stoi(s));
    } else {
        for (int i = std::stoi(s.substr(0, dots)); i <= std::stoi(s.substr(dots + 2)); ++i) v.push_back(i);
    }
    return v;
}

// Growth class of a sweep by exact fit, e.g. "affine 17n+18".
std::string growth(const std::vector<long long>& xs, const std::vector<long long>& ys, char var) {
    if (xs.size() < 3) return "-";
    g::Fit f = g::fit_exact(xs, ys, 2);
    if (f.exact && f.degree <= 2) {
        static const char* names[] = {"constant", "affine", "quadratic"};
        return std::string(names[std::max(f.degree, 0)]) + " " + f.law(var);
    }
    if (g::form_matches("exp", xs, ys)) return "exponential";
    return "no exact fit up to degree 2";
}

int cmd_stats(const std::string& target, const std::string& sizes, std::uint64_t seed, const std::string& corpus,
              const Common& c) {
    std::cout << std::left;
    g::Harness h(corpus);
    const g::CorpusEntry* e = nullptr;
    for (const auto& x : h.entries())
        if (x.name == target) e = &x;
    if (e) {
        bool by_k = e->sweep == "k";
        auto xs = by_k ? parse_range(sizes, 4, 12) : parse_range(sizes, 1, 6);
        std::cout << std::setw(6) << (by_k ? "k" : "n") << std::setw(12) << "steps" << std::setw(10) << "gates"
                  << "qubits\n";
        std::mt19937_64 rng(seed);
        std::vector<long long> lx, lg, lq;
        for (int x : xs) {
            RunConfig cfg;
            cfg.k = by_k ? x : 8;
            cfg.heap.sections = {{4, by_k ? std::min(15, (1 << x) - 1) : 24}};
            g::Sizes s;
            s.k = cfg.k;
            s.n = by_k ? 2 : x;
            s.depth = by_k ? std::min(x, 6) : 4;
            std::uint64_t steps = 0;
            const int reps = 5;
            for (int r = 0; r < reps; ++r)
                steps += h.run(*e, g::random_inputs(*e, rng, s), cfg, s.depth).run.stats.steps;
            auto cost = h.cost_at(*e, x, 8);
            std::cout << std::setw(6) << x << std::setw(12) << double(steps) / reps << std::setw(10) << cost.gates
                      << cost.qubits << "\n";
            lx.push_back(x);
            lg.push_back(long(cost.gates));
            lq.push_back(long(cost.qubits));
        }
        char v = by_k ? 'k' : 'n';
        std::cout << "gates:  " << growth(lx, lg, v) << "\nqubits: " << growth(lx, lq, v) << "\n";
        return 0;
    }
    RunConfig cfg = c.run_config();
    Program p = load_checked(target, cfg.k);
    const FunDecl& f = pick_entry(p, c.entry);
    std::cout << std::setw(8) << "bound" << std::setw(10) << "gates" << std::setw(10) << "qubits" << "l1-ops\n";
    std::vector<long long> lx, lg, lq;
    for (int b : f.bound_var ? parse_range(sizes, 1, 6) : std::vector<int>{0}) {
        Common cb = c;
        cb.bound = b;
        auto r = cost_report(compile(lower(p, f, cb, cfg.k, 0), cfg.heap, cfg.k));
        std::cout << std::setw(8) << (f.bound_var ? std::to_string(b) : "-") << std::setw(10) << r.gates
                  << std::setw(10) << r.qubits << r.l1_ops << "\n";
        lx.push_back(b);
        lg.push_back(long(r.gates));
        lq.push_back(long(r.qubits));
    }
    if (f.bound_var) std::cout << "gates:  " << growth(lx, lg, 'n') << "\nqubits: " << growth(lx, lq, 'n') << "\n";
    return 0;
}

int cmd_corpus(const std::string& what, const std::string& corpus, int trials, std::uint64_t seed,
               const std::string& json_out, const std::string& only) {
    g::Harness h(corpus);
    bool ok = true;
    std::cout << std::left;
    if (what == "run") {
        RunConfig cfg;
        cfg.heap.sections = {{4, 24}};
        cfg.perm = PermutationSource::seeded(seed);
        g::Sizes s;
        nlohmann::json report = nlohmann::json::array();
        for (const auto& e : h.entries()) {
            if (!only.empty() && e.name != only) continue;
            auto r = h.check_entry(e, trials, seed, cfg, s);
            ok = ok && r.pass;
            std::cout << (r.pass ? "pass " : "FAIL ") << std::setw(22) << e.name << " steps " << std::setw(8)
                      << r.steps << " gates " << std::setw(6) << r.gates << " qubits " << r.qubits;
            if (!r.pass) std::cout << "  " << r.detail;
            std::cout << "\n";
            report.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}, {"trials", r.trials},
                              {"steps", r.steps}, {"gates", r.gates}, {"qubits", r.qubits}});
        }
        if (!json_out.empty()) write_out(json_out, report.dump(1) + "\n");
    } else if (what == "hi") {
        for (const auto& c : g::standard_hi_cases(h)) {
            ok = ok && c.ok();
            std::cout << (c.ok() ? "pass " : "FAIL ") << std::setw(40) << c.name << (c.result.equal ? "equal" : "unequal")
                      << " over " << c.result.permutations << " initial heaps"
                      << (c.expect_equal ? "" : " (expected unequal)") << "\n";
            if (!c.result.equal) std::cout << "     " << c.result.detail << "\n";
        }
    } else if (what == "complexity") {
        std::cout << std::setw(22) << "entry" << std::setw(20) << "gates" << std::setw(18) << "table"
                  << std::setw(20) << "qubits" << "table\n";
        for (const auto& e : h.entries()) {
            if (!only.empty() && e.name != only) continue;
            auto s = h.sweep_costs(e);
            bool good = s.gates_ok && s.qubits_ok;
            ok = ok && good;
            auto law = [&](const g::Fit& f, const std::vector<long long>& ys) {
                if (f.exact) return f.law(s.var);
                std::string r;
                for (auto y : ys) r += (r.empty() ? "" : ",") + std::to_string(y);
                return r;
            };
            std::cout << std::setw(22) << e.name << std::setw(20) << law(s.gates_fit, s.gates) << std::setw(18)
                      << (e.paper_gates.empty() ? "-" : e.paper_gates) << std::setw(20)
                      << law(s.qubits_fit, s.qubits) << (e.paper_qubits.empty() ? "-" : e.paper_qubits)
                      << (good ? "" : "  FAIL") << "\n";
        }
    } else {
        throw Diagnostics("corpus subcommand is run, hi or complexity");
    }
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tower: reversible programs, their inverses and circuits"};
    app.require_subcommand(1);
    Common c;
    std::string file, out, level = "l1", init, sizes, corpus = TOWER_CORPUS_DIR, json_out, only;
    std::vector<std::string> inputs;
    bool reverse = false, stats = false, cost = false, no_heap = false;
    int trials = 20;
    std::uint64_t seed = 1;

    auto* check = app.add_subcommand("check", "parse and type-check a program");
    check->add_option("file", file)->required();
    check->add_option("--k", c.k, "word size");

    auto* run = app.add_subcommand("run", "run an entry forward or in reverse");
    run->add_option("file", file)->required();
    run->add_option("--input,-i", inputs, "one input, repeated in parameter order ([1,2] for lists, \"0110\" for strings)")
        ->expected(1, 64)
        ->allow_extra_args(false);
    run->add_flag("--reverse", reverse, "inputs are the post-state: parameters then result");
    run->add_flag("--stats", stats, "print step counts to stderr");
    c.add(run, true);

    auto* inv = app.add_subcommand("invert", "print the inverse of an entry's inlined body");
    inv->add_option("file", file)->required();
    inv->add_option("-o", out, "output file (default stdout)");
    c.add(inv, false);

    auto* core = app.add_subcommand("emit-core", "print an entry inlined to Core");
    core->add_option("file", file)->required();
    core->add_option("-o", out, "output file (default stdout)");
    c.add(core, false);

    auto* comp = app.add_subcommand("compile", "compile an entry to a netlist");
    comp->add_option("file", file)->required();
    comp->add_option("--level", level, "l1 (word macros) or l2 (bit gates)");
    comp->add_option("-o", out, "output file (default stdout)");
    comp->add_flag("--cost", cost, "print gate and qubit counts to stderr");
    c.add(comp, false);

    auto* sim = app.add_subcommand("simulate", "run a netlist on a basis state");
    sim->add_option("netlist", file)->required();
    sim->add_option("--init", init, "initial values, e.g. \"l=3 x=6 M1[3]=1,0\"");
    sim->add_flag("--empty-heap", no_heap, "start memory and hp registers at zero");
    sim->add_flag("--reverse", reverse, "apply the adjoint");

    auto* st = app.add_subcommand("stats", "steps, gates and qubits over an input-size sweep");
    st->add_option("target", file, "corpus entry name or program file")->required();
    st->add_option("--sizes,--sweep", sizes, "range, e.g. 1..6 or n=1..6");
    st->add_option("--seed", seed);
    st->add_option("--corpus", corpus);
    c.add(st, false);

    std::string what;
    auto* cor = app.add_subcommand("corpus", "run the data-structure corpus checks");
    cor->add_option("what", what, "run, hi or complexity")->required();
    cor->add_option("--corpus", corpus);
    cor->add_option("--trials", trials);
    cor->add_option("--seed", seed);
    cor->add_option("--json", json_out, "machine-readable report (run)");
    cor->add_option("--entry", only, "restrict to one entry");

    CLI11_PARSE(app, argc, argv);

    try {
        int k = c.k.value_or(8);
        if (*check) return cmd_check(file, k);
        if (*run) return cmd_run(file, inputs, reverse, stats, c);
        if (*inv) return cmd_core(file, out, true, c);
        if (*core) return cmd_core(file, out, false, c);
        if (*comp) return cmd_compile(file, level, out, cost, c);
        if (*sim) return cmd_simulate(file, init, no_heap, reverse);
        if (*st) return cmd_stats(file, sizes, seed, corpus, c);
        if (*cor) return cmd_corpus(what, corpus, trials, seed, json_out, only);
    } catch (const Diagnostics& ex) {
        std::cerr << ex.what() << "\n";
        return 1;
    } catch (const ParseError& ex) {
        std::cerr << file << ":" << ex.what() << "\n";
        return 1;
    } catch (const DesugarError& ex) {
        std::cerr << file << ":" << ex.what() << "\n";
        return 1;
    } catch (const StepError& ex) {
        std::cerr << ex.format(file) << "\n";
        return ex.kind == StepErrorKind::InvalidState ? 2 : 1;
    } catch (const AncillaViolation& ex) {
        std::cerr << file << ": " << ex.what() << "\n";
        return 1;
    } catch (const CompileError& ex) {
        std::cerr << file << ":" << ex.pos.line << ":" << ex.pos.col << ": " << ex.what() << "\n";
        return 1;
    } catch (const HeapError& ex) {
        std::cerr << "heap: " << ex.what() << "\n";
        return 1;
    } catch (const ConfigError& ex) {
        std::cerr << "config: " << ex.what() << "\n";
        return 1;
    } catch (const InlineError& ex) {
        std::cerr << file << ": " << ex.what() << "\n";
        return 1;
    } catch (const g::ManifestError& ex) {
        std::cerr << ex.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& ex) {
        std::cerr << ex.what() << "\n";
        return 1;
    } catch (const std::exception& ex) {
        std::cerr << "internal error: " << ex.what() << "\n";
        return 2;
    }
    return 0;
}
