#include "tower/ground.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tower/syntax.hpp"

namespace tower::ground {

using json = nlohmann::json;

static Word mask_of(int bits) { return bits >= 32 ? ~Word(0) : ((Word(1) << bits) - 1); }

AValue AValue::num(Word v) {
    AValue a;
    a.kind = Kind::Num;
    a.n = v;
    return a;
}

AValue AValue::boolean(bool b) {
    AValue a;
    a.kind = Kind::Bool;
    a.n = b ? 1 : 0;
    return a;
}

AValue AValue::list(std::vector<Word> xs) {
    AValue a;
    a.kind = Kind::List;
    a.items = std::move(xs);
    return a;
}

AValue AValue::str(Word len, Word bits) {
    AValue a;
    a.kind = Kind::Str;
    a.n = len;
    a.bits = bits;
    return a;
}

AValue AValue::set(std::vector<Word> keys) {
    AValue a;
    a.kind = Kind::Set;
    a.items = std::move(keys);
    return a;
}

static std::vector<Word> sorted_unique(std::vector<Word> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

bool operator==(const AValue& a, const AValue& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
    case AValue::Kind::Unit: return true;
    case AValue::Kind::Num:
    case AValue::Kind::Bool: return a.n == b.n;
    case AValue::Kind::List: return a.items == b.items;
    case AValue::Kind::Str: return a.n == b.n && a.bits == b.bits;
    case AValue::Kind::Set: return sorted_unique(a.items) == sorted_unique(b.items);
    }
    return false;
}

std::string to_string(const AValue& v) {
    std::ostringstream os;
    switch (v.kind) {
    case AValue::Kind::Unit: return "()";
    case AValue::Kind::Num: return std::to_string(v.n);
    case AValue::Kind::Bool: return v.n ? "true" : "false";
    case AValue::Kind::List:
    case AValue::Kind::Set: {
        bool set = v.kind == AValue::Kind::Set;
        auto xs = set ? sorted_unique(v.items) : v.items;
        os << (set ? '{' : '[');
        for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? "," : "") << xs[i];
        os << (set ? '}' : ']');
        return os.str();
    }
    case AValue::Kind::Str:
        os << '"';
        for (Word i = 0; i < v.n && i < 32; ++i) os << ((v.bits >> i) & 1);
        os << '"';
        return os.str();
    }
    return "?";
}

static std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\n");
    return s.substr(b, e - b + 1);
}

static std::vector<Word> parse_items(const std::string& body) {
    std::vector<Word> xs;
    std::istringstream is(body);
    std::string item;
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        std::size_t used = 0;
        unsigned long v = std::stoul(item, &used, 0);
        if (used != item.size()) throw std::invalid_argument("bad element '" + item + "'");
        xs.push_back(Word(v));
    }
    return xs;
}

AValue parse_avalue(const std::string& text) {
    std::string t = trim(text);
    if (t.empty()) throw std::invalid_argument("empty value");
    if (t == "()") return AValue::unit();
    if (t == "true") return AValue::boolean(true);
    if (t == "false") return AValue::boolean(false);
    char open = t.front(), close = t.back();
    if ((open == '[' && close == ']') || (open == '{' && close == '}')) {
        auto xs = parse_items(t.substr(1, t.size() - 2));
        return open == '[' ? AValue::list(xs) : AValue::set(xs);
    }
    if (open == '"' && close == '"' && t.size() >= 2) {
        Word bits = 0, len = 0;
        for (char c : t.substr(1, t.size() - 2)) {
            if (c != '0' && c != '1') throw std::invalid_argument("strings use the characters 0 and 1");
            if (c == '1') bits |= Word(1) << len;
            ++len;
        }
        return AValue::str(len, bits);
    }
    std::size_t used = 0;
    unsigned long v = 0;
    try {
        v = std::stoul(t, &used, 0);
    } catch (const std::exception&) {
        throw std::invalid_argument("cannot read value '" + t + "'");
    }
    if (used != t.size()) throw std::invalid_argument("cannot read value '" + t + "'");
    return AValue::num(Word(v));
}

// ---- manifest ----

std::vector<CorpusEntry> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ManifestError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& ex) {
        throw ManifestError(path + ": " + ex.what());
    }
    std::vector<CorpusEntry> out;
    std::set<std::string> names;
    for (const auto& r : j.at("entries")) {
        CorpusEntry e;
        try {
            e.name = r.at("name").get<std::string>();
            e.file = r.at("file").get<std::string>();
            e.entry = r.at("entry").get<std::string>();
            e.params = r.at("params").get<std::vector<std::string>>();
            e.result = r.at("result").get<std::string>();
            e.bound = r.value("bound", "none");
            e.sweep = r.value("sweep", "n");
            e.gates_form = r.value("gates_form", "");
            e.qubits_form = r.value("qubits_form", "");
            e.paper_qubits = r.value("paper_qubits", "");
            e.paper_gates = r.value("paper_gates", "");
            e.structure = r.value("structure", "");
            e.mutates = r.value("mutates", false);
            e.table1 = r.value("table1", true);
            if (r.contains("hi_expected")) e.hi_expected = r["hi_expected"].get<bool>();
        } catch (const json::exception& ex) {
            throw ManifestError(path + ": " + ex.what());
        }
        if (!names.insert(e.name).second) throw ManifestError(path + ": duplicate entry " + e.name);
        out.push_back(std::move(e));
    }
    return out;
}

std::optional<int> bound_for(const CorpusEntry& e, int n, int k, int depth) {
    if (e.bound == "none") return std::nullopt;
    if (e.bound == "n+1") return n + 1;
    if (e.bound == "k+1") return k + 1;
    if (e.bound == "depth+1") return depth + 1;
    throw ManifestError(e.name + ": unknown bound formula '" + e.bound + "'");
}

// ---- reference models ----

static bool str_kind(const std::string& k) { return k == "str" || k == "str_rel" || k == "str_fit"; }
static bool set_kind(const std::string& k) { return k == "trie" || k == "hash" || k == "sorted" || k == "tree"; }

static bool contains(const std::vector<Word>& xs, Word x) { return std::find(xs.begin(), xs.end(), x) != xs.end(); }

ModelOutput reference(const CorpusEntry& e, const std::vector<AValue>& in, int k, int depth) {
    (void)depth;
    ModelOutput m;
    m.params = in;
    const std::string& op = e.name;
    Word km = mask_of(k);
    auto& p0 = m.params.at(0);
    auto fail = [&](const std::string& why) { throw std::invalid_argument(op + ": " + why); };

    if (op == "list.length" || op == "list.length_exp") {
        m.result = AValue::num(Word(p0.items.size()) & km);
    } else if (op == "list.sum") {
        Word s = 0;
        for (Word x : p0.items) s = (s + x) & km;
        m.result = AValue::num(s);
    } else if (op == "list.find_pos" || op == "list.remove") {
        Word x = in.at(1).n;
        auto it = std::find(p0.items.begin(), p0.items.end(), x);
        if (it == p0.items.end()) fail("element not in list");
        m.result = AValue::num(Word(it - p0.items.begin()) & km);
        if (op == "list.remove") p0.items.erase(p0.items.begin() + (it - p0.items.begin()));
    } else if (op == "stack.push_front") {
        p0.items.insert(p0.items.begin(), in.at(1).n);
    } else if (op == "stack.pop_front" || op == "queue.pop_front") {
        if (p0.items.empty()) fail("empty list");
        m.result = AValue::num(p0.items.front());
        p0.items.erase(p0.items.begin());
    } else if (op == "queue.push_back") {
        p0.items.push_back(in.at(1).n);
    } else if (op.rfind("string.", 0) == 0) {
        Word l1 = in[0].n, b1 = in[0].bits;
        auto ch = [](Word bits, Word i) { return i >= 32 ? 0u : (bits >> i) & 1; };
        if (op == "string.is_empty") {
            m.result = AValue::boolean(l1 == 0);
        } else if (op == "string.length") {
            m.result = AValue::num(l1);
        } else if (op == "string.get_prefix") {
            Word i = in.at(1).n;
            m.result = AValue::str(i, b1 & (Word(i) >= Word(k) ? km : mask_of(int(i))));
        } else if (op == "string.get_substring") {
            Word i = in.at(1).n;
            m.result = AValue::str((l1 - i) & km, i >= Word(k) ? 0 : b1 >> i);
        } else if (op == "string.get") {
            Word i = in.at(1).n;
            m.result = AValue::num(i >= Word(k) ? 0 : ch(b1, i));
        } else {
            Word l2 = in.at(1).n, b2 = in.at(1).bits;
            Word common = 0;
            while (common < l1 && common < l2 && ch(b1, common) == ch(b2, common)) ++common;
            if (op == "string.is_prefix") {
                m.result = AValue::boolean(common == l1);
            } else if (op == "string.num_matching") {
                m.result = AValue::num(common);
            } else if (op == "string.equal") {
                m.result = AValue::boolean(l1 == l2 && b1 == b2);
            } else if (op == "string.concat") {
                m.result = AValue::str((l1 + l2) & km, (b1 | (l1 >= Word(k) ? 0 : b2 << l1)) & km);
            } else if (op == "string.compare") {
                bool le = common == l1 || (common < l2 && ch(b1, common) < ch(b2, common));
                m.result = AValue::boolean(le);
            } else {
                fail("no reference model");
            }
        }
    } else if (set_kind(e.params.at(0))) {
        Word key = in.at(1).n;
        bool present = contains(p0.items, key);
        m.result = AValue::boolean(present);
        if (op.size() > 7 && op.compare(op.size() - 7, 7, ".insert") == 0) {
            if (!present) p0.items.push_back(key);
        } else if (op.find("contains") == std::string::npos) {
            fail("no reference model");
        }
    } else {
        fail("no reference model");
    }
    return m;
}

// ---- random inputs ----

std::vector<AValue> random_inputs(const CorpusEntry& e, std::mt19937_64& rng, const Sizes& s) {
    auto below = [&](std::uint64_t bound) -> Word { return bound == 0 ? 0 : Word(rng() % bound); };
    std::uint64_t word_range = std::uint64_t(1) << s.k;
    std::uint64_t key_range = std::uint64_t(1) << s.depth;
    int n = s.n;
    bool needs_elem = std::count(e.params.begin(), e.params.end(), "member") > 0 || e.name == "stack.pop_front" ||
                      e.name == "queue.pop_front";
    if (needs_elem) n = std::max(n, 1);

    std::vector<AValue> out;
    const AValue* last_str = nullptr;
    std::size_t last_list = SIZE_MAX, last_set = SIZE_MAX;
    for (const auto& kind : e.params) {
        AValue v;
        if (kind == "list") {
            std::vector<Word> xs;
            for (int i = 0; i < n; ++i) xs.push_back(below(word_range));
            v = AValue::list(xs);
            last_list = out.size();
        } else if (kind == "member") {
            const auto& xs = out.at(last_list).items;
            v = AValue::num(xs.at(below(xs.size())));
        } else if (kind == "uint") {
            v = AValue::num(below(word_range));
        } else if (kind == "zero") {
            v = AValue::num(0);
        } else if (kind == "depth") {
            v = AValue::num(Word(s.depth));
        } else if (kind == "str" || (kind == "str_rel" && rng() % 2)) {
            Word len = below(s.k + 1);
            v = AValue::str(len, below(word_range) & mask_of(int(len)));
        } else if (kind == "str_rel") {
            // shares a prefix with the previous string
            Word len = below(s.k + 1);
            Word keep = std::min(len, last_str->n);
            Word bits = (last_str->bits & mask_of(int(keep))) | (below(word_range) & mask_of(int(len)) & ~mask_of(int(keep)));
            if (rng() % 2 && len > keep) bits ^= Word(1) << below(len);
            v = AValue::str(len, bits);
        } else if (kind == "str_fit") {
            Word len = below(s.k - last_str->n + 1);
            v = AValue::str(len, below(word_range) & mask_of(int(len)));
        } else if (kind == "index") {
            v = AValue::num(below(last_str->n + 1));
        } else if (set_kind(kind)) {
            std::uint64_t range = kind == "trie" ? key_range : word_range;
            int count = int(std::min<std::uint64_t>(n, range));
            std::set<Word> seen;
            std::vector<Word> keys;
            while (int(keys.size()) < count) {
                Word x = below(range);
                if (seen.insert(x).second) keys.push_back(x);
            }
            v = AValue::set(keys);
            last_set = out.size();
        } else if (kind == "key") {
            const auto& set = out.at(last_set);
            std::uint64_t range = e.params.at(last_set) == "trie" ? key_range : word_range;
            if (!set.items.empty() && rng() % 2)
                v = AValue::num(set.items.at(below(set.items.size())));
            else
                v = AValue::num(below(range));
        } else {
            throw ManifestError(e.name + ": unknown parameter kind '" + kind + "'");
        }
        out.push_back(v);
        if (str_kind(kind)) last_str = &out.back();
    }
    return out;
}

// ---- encodings ----

Type pointee_of(const Type& ptr) {
    Type h = head(ptr);
    if (!h || h->kind != TypeKind::Ptr) throw std::invalid_argument("expected a pointer type, got " + to_string(ptr));
    return h->a;
}

bool is_list_ptr(const Type& t) {
    Type h = head(t);
    if (!h || h->kind != TypeKind::Ptr) return false;
    Type node = head(h->a);
    if (!node || node->kind != TypeKind::Pair) return false;
    Type first = head(node->a), second = head(node->b);
    return first->kind == TypeKind::UInt && second->kind == TypeKind::Ptr && type_equiv(second, t, false);
}

static void store(HeapState& heap, Word addr, const std::vector<Word>& words) {
    auto& blk = heap.block(addr);
    if (words.size() > blk.size()) throw DecodeError("value does not fit its block");
    std::copy(words.begin(), words.end(), blk.begin());
}

static const std::vector<Word>& fetch(const HeapState& heap, Word addr, std::size_t words) {
    if (!heap.allocated(addr)) throw DecodeError("pointer to unallocated address " + std::to_string(addr));
    const auto& blk = heap.block(addr);
    if (blk.size() < words) throw DecodeError("block at " + std::to_string(addr) + " is too small");
    return blk;
}

Value encode_list(HeapState& heap, const Type& ptr_ty, const std::vector<Word>& xs) {
    Type node = pointee_of(ptr_ty);
    int words = word_count(node);
    Word l = 0;
    for (auto it = xs.rbegin(); it != xs.rend(); ++it) {
        Word a = heap.alloc(words);
        store(heap, a, {*it, l});
        l = a;
    }
    return Value::addr(node, l);
}

std::vector<Word> decode_list(const HeapState& heap, const Value& l) {
    std::vector<Word> xs;
    std::size_t limit = heap.total_blocks() + 1;
    for (Word a = l.n; a != 0; a = fetch(heap, a, 2)[1]) {
        if (xs.size() >= limit) throw DecodeError("list has a cycle");
        xs.push_back(fetch(heap, a, 2)[0]);
    }
    return xs;
}

Value encode_tree(HeapState& heap, const Type& ptr_ty, const std::vector<Word>& keys) {
    Type node = pointee_of(ptr_ty);
    int words = word_count(node);
    Word root = 0;
    for (Word key : keys) {
        Word* link = &root;
        bool dup = false;
        while (*link != 0) {
            auto& blk = heap.block(*link);
            if (blk[0] == key) {
                dup = true;
                break;
            }
            link = key < blk[0] ? &blk[1] : &blk[2];
        }
        if (dup) continue;
        Word a = heap.alloc(words);
        store(heap, a, {key, 0, 0});
        *link = a;
    }
    return Value::addr(node, root);
}

std::vector<Word> decode_tree(const HeapState& heap, const Value& t, int k) {
    std::vector<Word> out;
    std::size_t visits = 0;
    std::function<void(Word, std::uint64_t, std::uint64_t)> walk = [&](Word a, std::uint64_t lo, std::uint64_t hi) {
        if (a == 0) return;
        if (++visits > heap.total_blocks()) throw DecodeError("tree has a cycle");
        const auto& blk = fetch(heap, a, 3);
        if (blk[0] < lo || blk[0] >= hi) throw DecodeError("search-tree order violated at " + std::to_string(a));
        walk(blk[1], lo, blk[0]);
        out.push_back(blk[0]);
        walk(blk[2], std::uint64_t(blk[0]) + 1, hi);
    };
    walk(t.n, 0, std::uint64_t(1) << k);
    return out;
}

std::vector<Word> decode_trie(const HeapState& heap, const Value& t, int depth) {
    std::vector<Word> out;
    std::size_t visits = 0;
    // returns the number of keys below a
    std::function<Word(Word, int, Word)> walk = [&](Word a, int level, Word key) -> Word {
        if (a == 0) return 0;
        if (++visits > heap.total_blocks()) throw DecodeError("trie has a cycle");
        const auto& blk = fetch(heap, a, 3);
        Word below = 0;
        if (level == depth) {
            if (blk[1] != 0 || blk[2] != 0) throw DecodeError("trie leaf with children at " + std::to_string(a));
            if (blk[0] > 1) throw DecodeError("trie leaf count " + std::to_string(blk[0]));
            if (blk[0] == 1) out.push_back(key);
            below = blk[0];
        } else {
            below = walk(blk[1], level + 1, key) + walk(blk[2], level + 1, key | (Word(1) << level));
        }
        if (below != blk[0]) throw DecodeError("trie count mismatch at " + std::to_string(a));
        if (below == 0) throw DecodeError("empty trie node at " + std::to_string(a));
        return below;
    };
    walk(t.n, 0, 0);
    return out;
}

Word hash_bucket(Word key, int k) { return (((key * 3) & mask_of(k)) >> 1) & 1; }

std::vector<Word> decode_hash(const HeapState& heap, const Value& m, int k) {
    const auto& tab = fetch(heap, m.n, 2);
    std::vector<Word> out;
    for (int b = 0; b < 2; ++b) {
        Value l = Value::uint(tab[b]);
        for (Word x : decode_list(heap, l)) {
            if (hash_bucket(x, k) != Word(b)) throw DecodeError("key " + std::to_string(x) + " in the wrong bucket");
            if (contains(out, x)) throw DecodeError("duplicate key " + std::to_string(x));
            out.push_back(x);
        }
    }
    return out;
}

std::vector<Word> decode_sorted(const HeapState& heap, const Value& l) {
    auto xs = decode_list(heap, l);
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (xs[i - 1] >= xs[i]) throw DecodeError("sorted set out of order");
    return xs;
}

// ---- fits ----

Fit fit_exact(const std::vector<long long>& xs, const std::vector<long long>& ys, int max_degree) {
    Fit f;
    for (int d = 0; d <= max_degree && d < int(xs.size()); ++d) {
        // Solve the Vandermonde system on the first d+1 samples.
        int m = d + 1;
        std::vector<std::vector<long double>> A(m, std::vector<long double>(m + 1));
        for (int i = 0; i < m; ++i) {
            long double p = 1;
            for (int j = 0; j < m; ++j, p *= xs[i]) A[i][j] = p;
            A[i][m] = ys[i];
        }
        for (int c = 0; c < m; ++c) {
            int piv = c;
            for (int r = c + 1; r < m; ++r)
                if (std::fabs(A[r][c]) > std::fabs(A[piv][c])) piv = r;
            std::swap(A[c], A[piv]);
            for (int r = 0; r < m; ++r) {
                if (r == c || A[c][c] == 0) continue;
                long double q = A[r][c] / A[c][c];
                for (int j = c; j <= m; ++j) A[r][j] -= q * A[c][j];
            }
        }
        std::vector<double> coeffs(m);
        for (int i = 0; i < m; ++i) coeffs[i] = double(A[i][m] / A[i][i]);
        bool ok = true;
        for (std::size_t i = 0; i < xs.size() && ok; ++i) {
            long double y = 0, p = 1;
            for (int j = 0; j < m; ++j, p *= xs[i]) y += coeffs[j] * p;
            ok = std::fabs(y - ys[i]) < 1e-6;
        }
        if (ok) {
            f.exact = true;
            f.degree = d;
            f.coeffs = coeffs;
            // trailing zero coefficients lower the degree
            while (f.degree > 0 && std::fabs(f.coeffs[f.degree]) < 1e-9) --f.degree;
            f.coeffs.resize(f.degree + 1);
            return f;
        }
    }
    return f;
}

std::string Fit::law(char var) const {
    if (!exact) return "(no exact fit)";
    std::ostringstream os;
    bool first = true;
    for (int d = degree; d >= 0; --d) {
        double c = coeffs[d];
        if (std::fabs(c) < 1e-9 && !(d == 0 && first)) continue;
        double r = std::round(c);
        std::ostringstream num;
        if (std::fabs(c - r) < 1e-9)
            num << (long long)std::fabs(r);
        else
            num << std::fabs(c);
        if (!first) os << (c < 0 ? " - " : " + ");
        else if (c < 0) os << "-";
        if (d == 0 || num.str() != "1") os << num.str();
        if (d >= 1) os << var;
        if (d >= 2) os << '^' << d;
        first = false;
    }
    return os.str();
}

// ---- harness ----

Harness::Harness(std::string dir) : dir_(std::move(dir)) { entries_ = load_manifest(dir_ + "/manifest.json"); }

const CorpusEntry& Harness::entry(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return e;
    throw ManifestError("no corpus entry named '" + name + "'");
}

const Program& Harness::program(const std::string& file) {
    auto it = programs_.find(file);
    if (it != programs_.end()) return it->second;
    std::string path = dir_ + "/" + file;
    std::ifstream in(path);
    if (!in) throw ManifestError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    Program p = load_program(ss.str(), file);
    auto res = check_program(p);
    if (!res.ok()) {
        std::string msg;
        for (const auto& e : res.errors) msg += e.format(file) + "\n";
        throw ManifestError(msg);
    }
    return programs_.emplace(file, res.program).first->second;
}

std::shared_ptr<const Lowered> Harness::lowered(const CorpusEntry& e, std::optional<int> bound, int k) {
    InlineOptions o;
    o.entry = e.entry;
    o.bound = bound;
    return cache_.get(program(e.file), o, k);
}

static int structure_size(const std::vector<AValue>& in) {
    for (const auto& v : in)
        if (v.kind == AValue::Kind::List || v.kind == AValue::Kind::Set) return int(v.items.size());
    return 0;
}

static std::string set_structure(const std::string& kind) {
    if (kind == "trie") return "radix";
    return kind;  // hash, sorted
}

Harness::Prepared Harness::prepare(const CorpusEntry& e, const std::vector<AValue>& in, const RunConfig& cfg,
                                   int depth) {
    if (in.size() != e.params.size())
        throw std::invalid_argument(e.name + " takes " + std::to_string(e.params.size()) + " arguments");
    Prepared p;
    p.n = structure_size(in);
    p.bound = bound_for(e, p.n, cfg.k, depth);
    p.low = lowered(e, p.bound, cfg.k);
    p.heap = HeapState::init(cfg.heap, cfg.perm, cfg.k);
    for (std::size_t i = 0; i < in.size(); ++i) {
        const auto& kind = e.params[i];
        const auto& par = p.low->inputs.at(i);
        Value v;
        if (kind == "list") {
            v = encode_list(p.heap, par.ty, in[i].items);
        } else if (kind == "tree") {
            v = encode_tree(p.heap, par.ty, in[i].items);
        } else if (set_kind(kind)) {
            v = build_set(set_structure(kind), in[i].items, p.heap, cfg, depth);
        } else if (str_kind(kind)) {
            v = Value::make_pair(Value::uint(in[i].n), Value::uint(in[i].bits));
        } else {
            v = Value::uint(in[i].n & mask_of(cfg.k));
        }
        p.R[par.name] = v;
    }
    return p;
}

std::vector<AValue> Harness::decode_params(const CorpusEntry& e, const Lowered& low, const Registers& R,
                                           const HeapState& heap, int k, int depth) const {
    std::vector<AValue> out;
    for (std::size_t i = 0; i < e.params.size(); ++i) {
        const auto& kind = e.params[i];
        auto it = R.find(low.inputs.at(i).name);
        if (it == R.end()) throw DecodeError("parameter " + low.inputs[i].name + " missing after the run");
        const Value& v = it->second;
        if (kind == "list") out.push_back(AValue::list(decode_list(heap, v)));
        else if (kind == "trie") out.push_back(AValue::set(decode_trie(heap, v, depth)));
        else if (kind == "hash") out.push_back(AValue::set(decode_hash(heap, v, k)));
        else if (kind == "sorted") out.push_back(AValue::set(decode_sorted(heap, v)));
        else if (kind == "tree") out.push_back(AValue::set(decode_tree(heap, v, k)));
        else if (str_kind(kind)) out.push_back(AValue::str(v.first().n, v.second().n));
        else out.push_back(AValue::num(v.n));
    }
    return out;
}

static AValue decode_result(const std::string& kind, const Value& v) {
    if (kind == "unit") return AValue::unit();
    if (kind == "bool") return AValue::boolean(v.n != 0);
    if (kind == "str") return AValue::str(v.first().n, v.second().n);
    return AValue::num(v.n);
}

Harness::Outcome Harness::run(const CorpusEntry& e, const std::vector<AValue>& in, const RunConfig& cfg, int depth) {
    Outcome o;
    o.prep = prepare(e, in, cfg, depth);
    o.run = run_lowered(*o.prep.low, o.prep.R, o.prep.heap, Direction::Forward, cfg);
    o.result = decode_result(e.result, o.run.R.at(o.prep.low->output));
    o.params = decode_params(e, *o.prep.low, o.run.R, o.run.heap, cfg.k, depth);
    return o;
}

RunResult Harness::run_raw(const CorpusEntry& e, const std::vector<Value>& args, HeapState heap, const RunConfig& cfg,
                           std::optional<int> bound, Direction dir) {
    auto low = lowered(e, bound, cfg.k);
    Registers R;
    for (std::size_t i = 0; i < args.size(); ++i) R[low->inputs.at(i).name] = args[i];
    return run_lowered(*low, R, heap, dir, cfg);
}

Value Harness::build_set(const std::string& structure, const std::vector<Word>& keys, HeapState& heap,
                         const RunConfig& cfg, int depth) {
    const CorpusEntry& e = entry(structure + ".insert");
    auto low = lowered(e, bound_for(e, 0, cfg.k, depth), cfg.k);
    Type node = pointee_of(low->inputs.at(0).ty);
    Value root = Value::null(node);
    if (e.params[0] == "hash") root = Value::addr(node, heap.alloc(word_count(node)));
    int n = 0;
    for (Word key : keys) {
        std::vector<Value> args{root, Value::uint(key)};
        if (e.params.size() > 2) args.push_back(Value::uint(Word(depth)));
        auto bound = bound_for(e, n, cfg.k, depth);
        RunResult r = run_raw(e, args, heap, cfg, bound);
        heap = r.heap;
        root = r.R.at(lowered(e, bound, cfg.k)->inputs[0].name);
        ++n;
    }
    return root;
}

OracleResult Harness::hi_check(const std::string& structure, const std::vector<Word>& a, const std::vector<Word>& b,
                               const HeapConfig& heap, int k, int depth, bool identity_only) {
    RunConfig cfg;
    cfg.k = k;
    cfg.heap = heap;
    auto runner = [&](const std::vector<Word>& keys) {
        return [&, keys](HeapState& h) {
            Value root = build_set(structure, keys, h, cfg, depth);
            return h.fingerprint() + " root=" + std::to_string(root.n);
        };
    };
    return hi_distribution_oracle(heap, k, runner(a), runner(b), identity_only);
}

EntryRecord Harness::check_entry(const CorpusEntry& e, int trials, std::uint64_t seed, const RunConfig& cfg,
                                 const Sizes& max_sizes) {
    EntryRecord rec;
    rec.name = e.name;
    std::mt19937_64 rng(seed ^ std::hash<std::string>{}(e.name));
    auto fail = [&](int t, const std::string& why) {
        if (rec.pass) rec.detail = "trial " + std::to_string(t) + ": " + why;
        rec.pass = false;
    };
    for (int t = 0; t < trials; ++t) {
        Sizes s = max_sizes;
        s.k = cfg.k;
        s.n = int(rng() % (max_sizes.n + 1));
        auto in = random_inputs(e, rng, s);
        std::string args;
        for (const auto& v : in) args += (args.empty() ? "" : " ") + to_string(v);
        try {
            auto out = run(e, in, cfg, s.depth);
            rec.steps += out.run.stats.steps;
            auto ref = reference(e, in, cfg.k, s.depth);
            if (out.result != ref.result) {
                fail(t, "(" + args + ") gave " + to_string(out.result) + ", expected " + to_string(ref.result));
            } else if (out.params != ref.params) {
                std::string got, want;
                for (const auto& v : out.params) got += " " + to_string(v);
                for (const auto& v : ref.params) want += " " + to_string(v);
                fail(t, "(" + args + ") left" + got + ", expected" + want);
            }
            std::set<std::string> keep;
            for (const auto& p : out.prep.low->inputs) keep.insert(p.name);
            RunResult back =
                run_statement(invert(out.prep.low->core), out.run.R, out.run.heap, Direction::Forward, cfg, keep);
            if (back.R != out.prep.R) fail(t, "(" + args + ") inverse did not restore the registers");
            else if (!(back.heap == out.prep.heap)) fail(t, "(" + args + ") inverse did not restore the heap");
        } catch (const StepError& ex) {
            fail(t, "(" + args + ") " + ex.format(e.file));
        } catch (const std::exception& ex) {
            fail(t, "(" + args + ") " + ex.what());
        }
        ++rec.trials;
    }
    try {
        auto c = cost_at(e, e.sweep == "k" ? cfg.k : max_sizes.n, cfg.k);
        rec.gates = c.gates;
        rec.qubits = c.qubits;
    } catch (const std::exception& ex) {
        if (rec.pass) rec.detail = std::string("compile: ") + ex.what();
        rec.pass = false;
    }
    return rec;
}

CostReport Harness::cost_at(const CorpusEntry& e, int size, int k) {
    int n = 0, depth = k;
    if (e.sweep == "k") k = depth = size;
    else n = size;
    auto low = lowered(e, bound_for(e, n, k, depth), k);
    HeapConfig heap;
    heap.sections = {{1, 4}, {4, 8}};
    return cost_report(compile(*low, heap, k));
}

} // namespace tower::ground

namespace tower::ground {

bool form_matches(const std::string& form, const std::vector<long long>& xs, const std::vector<long long>& ys,
                  Fit* fit) {
    Fit f = fit_exact(xs, ys, 2);
    if (fit) *fit = f;
    if (form == "const") return f.exact && f.degree == 0;
    if (form == "affine") return f.exact && f.degree <= 1;
    if (form == "poly2") return f.exact && f.degree <= 2;
    if (form == "exp") {
        // at least doubling per step once the base case is out of the way
        for (std::size_t i = 2; i < ys.size(); ++i)
            if (double(ys[i]) < 1.9 * double(ys[i - 1])) return false;
        return ys.size() >= 3;
    }
    return false;
}

Sweep Harness::sweep_costs(const CorpusEntry& e) {
    Sweep s;
    s.var = e.sweep == "k" ? 'k' : 'n';
    std::vector<int> sizes;
    if (s.var == 'k')
        for (int k = 4; k <= 12; ++k) sizes.push_back(k);
    else
        for (int n = 1; n <= 6; ++n) sizes.push_back(n);
    for (int x : sizes) {
        auto c = cost_at(e, x, 8);
        s.xs.push_back(x);
        s.gates.push_back((long long)c.gates);
        s.qubits.push_back((long long)c.qubits);
    }
    s.gates_ok = form_matches(e.gates_form, s.xs, s.gates, &s.gates_fit);
    s.qubits_ok = form_matches(e.qubits_form, s.xs, s.qubits, &s.qubits_fit);
    return s;
}

std::vector<long long> Harness::list_steps(const CorpusEntry& e, const std::vector<int>& lengths, int k) {
    std::vector<long long> out;
    for (int n : lengths) {
        RunConfig cfg;
        cfg.k = k;
        cfg.heap.sections = {{4, std::max(n, 1)}};
        std::vector<Word> xs;
        for (int i = 0; i < n; ++i) xs.push_back(Word(i + 1));
        std::vector<AValue> in{AValue::list(xs)};
        for (std::size_t i = 1; i < e.params.size(); ++i) in.push_back(AValue::num(0));
        out.push_back((long long)run(e, in, cfg, 0).run.stats.steps);
    }
    return out;
}

std::vector<HiCase> standard_hi_cases(Harness& h) {
    std::vector<HiCase> cases;
    auto alloc_case = [&](const std::string& name, const std::string& a, const std::string& b, int n, bool identity,
                          bool expect) {
        HiCase c{name, a, b, expect, {}};
        c.result = hi_distribution_oracle(parse_heap_ops(a), parse_heap_ops(b), n, identity);
        cases.push_back(c);
    };
    const std::string free_ab = "alloc a; alloc b; dealloc a; dealloc b";
    const std::string free_ba = "alloc a; alloc b; dealloc b; dealloc a";
    alloc_case("allocator round trip", free_ab, "", 4, false, true);
    alloc_case("allocator round trip, identity only", free_ab, "", 4, true, false);
    alloc_case("allocator free order", free_ab, free_ba, 3, false, true);
    alloc_case("allocator free order, identity only", free_ab, free_ba, 3, true, false);
    alloc_case("allocator alloc order", "alloc a; alloc b; alloc c; dealloc b", "alloc c; alloc b; alloc a; dealloc b", 4,
               false, true);
    alloc_case("allocator interleaving", "alloc a; alloc b; dealloc a; alloc c",
               "alloc c; alloc x; alloc b; dealloc x", 5, false, true);
    alloc_case("allocator free order, 6 blocks", "alloc a; alloc b; alloc c; dealloc a; dealloc c",
               "alloc a; alloc b; alloc c; dealloc c; dealloc a", 6, false, true);

    auto keys_text = [](const std::vector<Word>& ks) {
        std::string s;
        for (Word k : ks) s += (s.empty() ? "insert " : ", ") + std::to_string(k);
        return s;
    };
    auto set_case = [&](const std::string& name, const std::string& st, std::vector<Word> a, std::vector<Word> b,
                        int blocks, int depth, bool identity, bool expect) {
        HiCase c{name, keys_text(a), keys_text(b), expect, {}};
        HeapConfig heap;
        heap.sections = {{4, blocks}};
        c.result = h.hi_check(st, a, b, heap, 8, depth, identity);
        cases.push_back(c);
    };
    set_case("sorted-list set", "sorted", {1, 2, 3}, {3, 1, 2}, 6, 0, false, true);
    set_case("sorted-list set, two keys", "sorted", {5, 9}, {9, 5}, 4, 0, false, true);
    set_case("radix set", "radix", {1, 2}, {2, 1}, 6, 2, false, true);
    set_case("radix set, shared prefix", "radix", {1, 3}, {3, 1}, 6, 2, false, true);
    set_case("hash set (not history independent)", "hash", {1, 2}, {2, 1}, 5, 0, false, false);
    return cases;
}

} // namespace tower::ground
