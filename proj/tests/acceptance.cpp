// One PASS/FAIL line per acceptance criterion; exits non-zero on any FAIL.
#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <iostream>
#include <sstream>
#include <string>

#include "support.hpp"
#include "tower/circuit.hpp"
#include "tower/ground.hpp"

using namespace tower;
using namespace tower::test;
namespace g = tower::ground;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    bool pass = true;
    std::string summary;
    std::vector<std::string> notes;  // printed under the verdict line
};

int failures = 0;

void report(int n, const std::string& title, const std::function<Verdict()>& body) {
    auto t0 = Clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v.pass = false;
        v.summary = std::string("exception: ") + e.what();
    }
    char head[64];
    std::snprintf(head, sizeof head, "%s %2d ", v.pass ? "PASS" : "FAIL", n);
    std::cout << head << title << ": " << v.summary << " (" << std::fixed;
    std::cout.precision(1);
    std::cout << seconds_since(t0) << " s)\n";
    for (const auto& line : v.notes) std::cout << "        " << line << "\n";
    std::cout.flush();
    if (!v.pass) ++failures;
}

std::string join(const std::vector<long long>& xs) {
    std::string s;
    for (auto x : xs) s += (s.empty() ? "" : " ") + std::to_string(x);
    return s;
}

Verdict invertibility(g::Harness& h) {
    Verdict v;
    auto t0 = Clock::now();
    RunConfig cfg;
    cfg.heap.sections = {{4, 24}};
    cfg.perm = PermutationSource::seeded(2024);
    g::Sizes sizes;
    sizes.n = 5;
    int ops = 0, trials = 0, bad = 0;
    for (const auto& e : h.entries()) {
        auto rec = h.check_entry(e, 20, 7, cfg, sizes);
        ++ops;
        trials += rec.trials;
        if (!rec.pass) {
            ++bad;
            v.notes.push_back(e.name + ": " + rec.detail);
        }
    }
    double secs = seconds_since(t0);
    v.pass = bad == 0 && ops >= 25 && trials >= 20 * ops && secs < 60;
    v.summary = std::to_string(ops) + " ops, " + std::to_string(trials) + " runs, " + std::to_string(bad) +
                " failing ops";
    return v;
}

Verdict equivalence(g::Harness& h) {
    Verdict v;
    auto t0 = Clock::now();
    RunConfig cfg;
    cfg.k = 4;
    cfg.heap.sections = {{4, 8}};
    g::Sizes sizes;
    sizes.n = 3;
    sizes.k = 4;
    sizes.depth = 2;
    std::mt19937_64 rng(31);
    int states = 0, bad = 0;
    for (const char* name :
         {"stack.push_front", "stack.pop_front", "list.length", "list.find_pos", "radix.insert", "radix.contains"}) {
        const auto& e = h.entry(name);
        std::map<std::optional<int>, std::pair<Netlist, Netlist>> nets;
        for (int t = 0; t < 40; ++t) {
            cfg.perm = PermutationSource::seeded(rng());
            g::Sizes s = sizes;
            s.n = int(rng() % 4);
            auto out = h.run(e, g::random_inputs(e, rng, s), cfg, s.depth);
            auto it = nets.find(out.prep.bound);
            if (it == nets.end()) {
                Netlist l1 = compile(*out.prep.low, cfg.heap, cfg.k);
                it = nets.emplace(out.prep.bound, std::make_pair(l1, expand(l1))).first;
            }
            for (const Netlist* net : {&it->second.first, &it->second.second}) {
                CircuitState st = encode_state(*net, out.prep.R, out.prep.heap);
                std::string why;
                try {
                    simulate(*net, st);
                    if (!state_matches(*net, st, out.run.R, out.run.heap, &why)) {
                        ++bad;
                        v.notes.push_back(std::string(name) + " L" + std::to_string(net->level) + ": " + why);
                    }
                } catch (const AncillaViolation& ex) {
                    ++bad;
                    v.notes.push_back(std::string(name) + " L" + std::to_string(net->level) + ": " + ex.what());
                }
                ++states;
            }
        }
    }
    double secs = seconds_since(t0);
    v.pass = bad == 0 && secs < 300;
    v.summary = std::to_string(states) + " basis states over 6 ops at k=4, levels 1 and 2, " + std::to_string(bad) +
                " mismatches";
    return v;
}

Verdict history_independence(const std::vector<g::HiCase>& cases, bool hash) {
    Verdict v;
    int n = 0;
    bool identity_gap = false;
    for (const auto& c : cases) {
        bool is_hash = c.name.rfind("hash", 0) == 0;
        if (is_hash != hash) continue;
        ++n;
        if (c.name.find("identity only") != std::string::npos && !c.expect_equal && c.ok()) identity_gap = true;
        if (!c.ok()) v.pass = false;
        v.notes.push_back(std::string(c.ok() ? "ok  " : "BAD ") + c.name + ": " +
                          (c.result.equal ? "equal" : "unequal") + " over " + std::to_string(c.result.permutations) +
                          " permutations");
    }
    if (!hash && !identity_gap) v.pass = false;
    v.summary = std::to_string(n) + (hash ? " pair, distributions differ as expected" : " pairs as expected");
    if (!v.pass) v.summary = "unexpected outcome";
    return v;
}

Verdict uncomputation(g::Harness& h) {
    Verdict v;
    auto exp_steps = h.list_steps(h.entry("list.length_exp"), {4, 5, 6, 7, 8, 9});
    for (std::size_t i = 1; i < exp_steps.size(); ++i) {
        double r = double(exp_steps[i]) / double(exp_steps[i - 1]);
        if (r < 1.8 || r > 2.2) v.pass = false;
    }
    std::vector<long long> ns{1, 2, 3, 4, 5, 6, 7, 8};
    auto lin_steps = h.list_steps(h.entry("list.length"), {1, 2, 3, 4, 5, 6, 7, 8});
    auto lin_fit = g::fit_exact(ns, lin_steps, 1);
    if (!lin_fit.exact || lin_fit.degree != 1) v.pass = false;
    auto ge = h.sweep_costs(h.entry("list.length_exp"));
    auto gl = h.sweep_costs(h.entry("list.length"));
    bool gates_exp = g::form_matches("exp", ge.xs, ge.gates);
    g::Fit gl_fit;
    bool gates_aff = g::form_matches("affine", gl.xs, gl.gates, &gl_fit);
    if (!gates_exp || !gates_aff) v.pass = false;
    v.notes.push_back("recursive uncompute steps, n=4..9: " + join(exp_steps));
    v.notes.push_back("accumulator steps, n=1..8: " + join(lin_steps) + "  = " + lin_fit.law('n'));
    v.notes.push_back("recursive uncompute gates, n=1..6: " + join(ge.gates));
    v.notes.push_back("accumulator gates, n=1..6: " + join(gl.gates) + "  = " + gl_fit.law('n'));
    v.summary = v.pass ? "step ratios within [1.8, 2.2], accumulator exact affine; gates exponential vs affine"
                       : "growth outside the expected classes";
    return v;
}

Verdict sequentialization(g::Harness& h) {
    Verdict v;
    auto two = h.sweep_costs(h.entry("bst.contains_seq"));
    auto one = h.sweep_costs(h.entry("bst.contains"));
    double min_ratio = 1e9;
    for (std::size_t i = 1; i < two.gates.size(); ++i)
        min_ratio = std::min(min_ratio, double(two.gates[i]) / double(two.gates[i - 1]));
    g::Fit fit;
    bool affine = g::form_matches("affine", one.xs, one.gates, &fit);
    v.pass = min_ratio >= 1.9 && affine;
    std::ostringstream os;
    os.precision(3);
    os << "two-call growth >= " << min_ratio << "x per bound, one-call gates " << fit.law('n');
    v.summary = os.str();
    v.notes.push_back("two calls, n=1..6: " + join(two.gates));
    v.notes.push_back("one call,  n=1..6: " + join(one.gates));
    return v;
}

Verdict table_forms(g::Harness& h) {
    Verdict v;
    int rows = 0;
    char line[200];
    std::snprintf(line, sizeof line, "%-20s %-6s %-22s %-20s %-20s %s", "op", "form", "gates (ours)",
                  "gates (table)", "qubits (ours)", "qubits (table)");
    v.notes.push_back(line);
    for (const auto& e : h.entries()) {
        if (!e.table1) continue;
        ++rows;
        auto s = h.sweep_costs(e);
        bool ok = s.gates_ok && s.qubits_ok;
        if (!ok) v.pass = false;
        std::string gl = s.gates_fit.exact ? s.gates_fit.law(s.var) : "? " + join(s.gates);
        std::string ql = s.qubits_fit.exact ? s.qubits_fit.law(s.var) : "? " + join(s.qubits);
        std::snprintf(line, sizeof line, "%-20s %-6s %-22s %-20s %-20s %s%s", e.name.c_str(), e.gates_form.c_str(),
                      gl.c_str(), e.paper_gates.c_str(), ql.c_str(), e.paper_qubits.c_str(), ok ? "" : "  <- off");
        v.notes.push_back(line);
    }
    v.summary = std::to_string(rows) + " rows, gate and qubit counts fit their classes by exact fit";
    if (!v.pass) v.summary = "some rows fall outside their class";
    return v;
}

Verdict negatives(const std::string& dir, bool runtime, std::size_t minimum) {
    Verdict v;
    auto cases = negative_cases(dir);
    std::size_t hit = 0;
    std::set<std::string> kinds;
    for (const auto& c : cases) {
        auto o = runtime ? run_runtime_negative(c) : run_static_negative(c);
        bool ok = o.detected && o.got == c.expect && o.line == c.line;
        if (ok) {
            ++hit;
            kinds.insert(c.expect);
        } else {
            v.notes.push_back(c.path + ": expected " + c.expect + " at line " + std::to_string(c.line) + ", got " +
                              (o.detected ? o.got + " at line " + std::to_string(o.line) : "acceptance"));
        }
    }
    v.pass = hit == cases.size() && cases.size() >= minimum;
    v.summary = std::to_string(hit) + "/" + std::to_string(cases.size()) + " detected at the marked line, " +
                std::to_string(kinds.size()) + " distinct " + (runtime ? "error kinds" : "rules");
    if (runtime && (!kinds.count("Stuck-UnAssign") || !kinds.count("Leak"))) v.pass = false;
    return v;
}

Verdict corpus_and_negatives(g::Harness& h) {
    Verdict v = negatives("negative", false, 30);
    int files = 0;
    std::set<std::string> seen;
    for (const auto& e : h.entries()) {
        if (!seen.insert(e.file).second) continue;
        ++files;
        auto r = check_program(load_program(read_file(h.dir() + "/" + e.file), e.file));
        if (!r.ok()) {
            v.pass = false;
            v.notes.push_back(r.errors.front().format(e.file));
        }
    }
    v.summary += "; " + std::to_string(files) + " corpus files accepted";
    return v;
}

Verdict fuzz() {
    Verdict v;
    CoreFuzzer fz(1234);
    RunConfig cfg;
    cfg.validate = true;
    cfg.heap.sections = {{1, 8}, {2, 48}};
    int finished = 0, stuck = 0, other = 0;
    for (int i = 0; i < 10000; ++i) {
        StmtPtr s = fz.statement(4 + i % 20);
        HeapState heap = HeapState::init(cfg.heap, PermutationSource::seeded(std::uint64_t(i)), cfg.k);
        Registers R = fz.initial_registers(heap);
        try {
            Machine m(s, R, heap, Direction::Forward, cfg);
            m.check_valid();
            while (!m.done()) m.step();
            if (m.residual()->kind != StmtKind::Skip) throw std::runtime_error("stopped before skip");
            ++finished;
        } catch (const StepError& e) {
            if (e.kind == StepErrorKind::StuckUnAssign) {
                ++stuck;
            } else {
                ++other;
                if (v.notes.size() < 5) v.notes.push_back(e.format() + "\n" + print_stmt(s));
            }
        } catch (const std::exception& e) {
            ++other;
            if (v.notes.size() < 5) v.notes.push_back(std::string(e.what()) + "\n" + print_stmt(s));
        }
    }
    v.pass = other == 0;
    v.summary = "10000 statements: " + std::to_string(finished) + " reached skip, " + std::to_string(stuck) +
                " Stuck-UnAssign, " + std::to_string(other) + " other";
    return v;
}

} // namespace

int main() {
    g::Harness h;
    report(1, "invertibility", [&] { return invertibility(h); });
    report(2, "circuit equivalence", [&] { return equivalence(h); });
    auto hi = g::standard_hi_cases(h);
    report(3, "history independence", [&] { return history_independence(hi, false); });
    report(4, "hash set control", [&] { return history_independence(hi, true); });
    report(5, "uncomputation complexity", [&] { return uncomputation(h); });
    report(6, "branch sequentialization", [&] { return sequentialization(h); });
    report(7, "cost forms", [&] { return table_forms(h); });
    report(8, "runtime checks", [] { return negatives("runtime", true, 2); });
    report(9, "type system", [&] { return corpus_and_negatives(h); });
    report(10, "preservation and progress", [] { return fuzz(); });
    return failures == 0 ? 0 : 1;
}
