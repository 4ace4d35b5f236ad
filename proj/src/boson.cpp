#include "tower/boson.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace tower {

const char* kind_name(HeapError::Kind k) {
    switch (k) {
    case HeapError::Kind::OutOfMemory: return "OutOfMemory";
    case HeapError::Kind::DeallocNonZero: return "DeallocNonZero";
    case HeapError::Kind::NoSizeClass: return "NoSizeClass";
    case HeapError::Kind::DeallocNull: return "DeallocNull";
    case HeapError::Kind::BadAddress: return "BadAddress";
    }
    return "?";
}

PermutationSource PermutationSource::seeded(std::uint64_t seed) {
    PermutationSource s;
    s.kind = Kind::Seeded;
    s.seed = seed;
    return s;
}

PermutationSource PermutationSource::explicit_perms(std::vector<std::vector<int>> perms) {
    PermutationSource s;
    s.kind = Kind::Explicit;
    s.perms = std::move(perms);
    return s;
}

// std::shuffle and uniform_int_distribution are implementation-defined, so
// the shuffle and the bounded draw are spelled out to keep seeds portable.
std::vector<int> seeded_permutation(std::uint64_t seed, int n, int salt) {
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ull * std::uint64_t(salt + 1)));
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 1);
    for (int i = n - 1; i > 0; --i) {
        std::uint64_t range = std::uint64_t(i) + 1;
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
        std::uint64_t r;
        do {
            r = rng();
        } while (r >= limit);
        std::swap(p[i], p[r % range]);
    }
    return p;
}

static bool is_bijection(const std::vector<int>& p, int n) {
    if (int(p.size()) != n) return false;
    std::vector<char> seen(n + 1, 0);
    for (int v : p) {
        if (v < 1 || v > n || seen[v]) return false;
        seen[v] = 1;
    }
    return true;
}

HeapState HeapState::init(const HeapConfig& cfg, const PermutationSource& src, int k) {
    if (k < 1 || k > 31) throw ConfigError("word size must be between 1 and 31");
    HeapState h;
    h.k_ = k;
    std::size_t total = 0;
    for (const auto& sp : cfg.sections) {
        if (sp.block_words < 1 || sp.count < 0) throw ConfigError("section needs block_words >= 1 and count >= 0");
        total += sp.count;
    }
    if (total >= (std::size_t(1) << k))
        throw ConfigError(std::to_string(total) + " heap blocks do not fit in " + std::to_string(k) + "-bit addresses");
    if (src.kind == PermutationSource::Kind::Explicit && src.perms.size() != cfg.sections.size())
        throw ConfigError("explicit permutation needed for each section");
    h.blocks_.assign(1, {});
    Word base = 1;
    for (std::size_t s = 0; s < cfg.sections.size(); ++s) {
        const auto& sp = cfg.sections[s];
        Section sec{sp.block_words, sp.count, base, 0};
        std::vector<int> perm;
        switch (src.kind) {
        case PermutationSource::Kind::Identity:
            perm.resize(sp.count);
            std::iota(perm.begin(), perm.end(), 1);
            break;
        case PermutationSource::Kind::Seeded: perm = seeded_permutation(src.seed, sp.count, int(s)); break;
        case PermutationSource::Kind::Explicit:
            perm = src.perms[s];
            if (!is_bijection(perm, sp.count))
                throw ConfigError("permutation for section " + std::to_string(s) + " is not a bijection on [1.." +
                                  std::to_string(sp.count) + "]");
            break;
        }
        for (int i = 0; i < sp.count; ++i) h.blocks_.emplace_back(sp.block_words, 0);
        // Thread the free list hp -> π(1) -> π(2) -> ... -> null.
        if (sp.count > 0) sec.hp = base + perm[0] - 1;
        for (int i = 0; i < sp.count; ++i) {
            Word at = base + perm[i] - 1;
            h.blocks_[at][0] = i + 1 < sp.count ? base + perm[i + 1] - 1 : 0;
        }
        h.sections_.push_back(sec);
        base += sp.count;
    }
    h.live_.assign(h.blocks_.size(), 0);
    return h;
}

int HeapState::size_class(int words) const {
    int best = -1;
    for (std::size_t s = 0; s < sections_.size(); ++s) {
        if (sections_[s].block_words < words) continue;
        if (best < 0 || sections_[s].block_words < sections_[best].block_words) best = int(s);
    }
    return best;
}

int HeapState::section_of(Word addr) const {
    for (std::size_t s = 0; s < sections_.size(); ++s)
        if (addr >= sections_[s].base && addr < sections_[s].base + Word(sections_[s].count)) return int(s);
    return -1;
}

Word HeapState::alloc(int words) {
    int s = size_class(std::max(words, 1));
    if (s < 0) throw HeapError(HeapError::Kind::NoSizeClass, 0, "no heap section holds " + std::to_string(words) + " words");
    return alloc_in(s);
}

Word HeapState::alloc_in(int s) {
    Section& sec = sections_[s];
    if (sec.hp == 0)
        throw HeapError(HeapError::Kind::OutOfMemory, 0,
                        "heap section " + std::to_string(s) + " (" + std::to_string(sec.block_words) +
                            "-word blocks) is exhausted");
    // x <-> hp; *x <-> hp
    Word x = sec.hp;
    sec.hp = blocks_[x][0];
    blocks_[x][0] = 0;
    live_[x] = 1;
    touched += 3;
    return x;
}

void HeapState::dealloc(Word addr) {
    if (addr == 0) throw HeapError(HeapError::Kind::DeallocNull, 0, "deallocating null");
    int s = section_of(addr);
    if (s < 0 || !live_[addr])
        throw HeapError(HeapError::Kind::BadAddress, addr, "address " + std::to_string(addr) + " is not allocated");
    auto& blk = blocks_[addr];
    if (std::any_of(blk.begin(), blk.end(), [](Word w) { return w != 0; }))
        throw HeapError(HeapError::Kind::DeallocNonZero, addr,
                        "block " + std::to_string(addr) + " is not zero at deallocation");
    Section& sec = sections_[s];
    blk[0] = sec.hp;
    sec.hp = addr;
    live_[addr] = 0;
    touched += 3;
}

bool HeapState::allocated(Word addr) const { return addr < live_.size() && addr != 0 && live_[addr]; }

std::vector<Word> HeapState::allocated_blocks() const {
    std::vector<Word> out;
    for (Word a = 1; a < live_.size(); ++a)
        if (live_[a]) out.push_back(a);
    return out;
}

std::size_t HeapState::free_count(int s) const {
    std::size_t n = 0;
    for (Word a = sections_[s].hp; a != 0 && n <= blocks_.size(); a = blocks_[a][0]) ++n;
    return n;
}

std::vector<Word>& HeapState::block(Word addr) {
    if (addr == 0 || addr >= blocks_.size())
        throw HeapError(HeapError::Kind::BadAddress, addr, "address " + std::to_string(addr) + " is outside the heap");
    return blocks_[addr];
}

const std::vector<Word>& HeapState::block(Word addr) const {
    if (addr == 0 || addr >= blocks_.size())
        throw HeapError(HeapError::Kind::BadAddress, addr, "address " + std::to_string(addr) + " is outside the heap");
    return blocks_[addr];
}

std::string HeapState::fingerprint() const {
    std::ostringstream os;
    os << "hp";
    for (const auto& s : sections_) os << ' ' << s.hp;
    os << " |";
    for (std::size_t a = 1; a < blocks_.size(); ++a) {
        os << ' ';
        for (std::size_t i = 0; i < blocks_[a].size(); ++i) os << (i ? "," : "") << blocks_[a][i];
    }
    return os.str();
}

bool HeapState::operator==(const HeapState& o) const {
    if (sections_.size() != o.sections_.size() || blocks_ != o.blocks_) return false;
    for (std::size_t s = 0; s < sections_.size(); ++s)
        if (sections_[s].hp != o.sections_[s].hp) return false;
    return true;
}

std::vector<std::vector<int>> all_permutations(int n) {
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 1);
    std::vector<std::vector<int>> out;
    do {
        out.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
}

OracleResult hi_distribution_oracle(const HeapConfig& cfg, int k, const HeapRun& a, const HeapRun& b,
                                    bool identity_only) {
    std::vector<std::vector<std::vector<int>>> per_section;
    for (const auto& s : cfg.sections) {
        if (identity_only) {
            std::vector<int> id(s.count);
            std::iota(id.begin(), id.end(), 1);
            per_section.push_back({id});
        } else {
            per_section.push_back(all_permutations(s.count));
        }
    }
    std::map<std::string, long> diff;  // count under a minus count under b
    OracleResult res;
    std::vector<std::size_t> idx(per_section.size(), 0);
    while (true) {
        std::vector<std::vector<int>> choice;
        for (std::size_t s = 0; s < per_section.size(); ++s) choice.push_back(per_section[s][idx[s]]);
        auto src = PermutationSource::explicit_perms(choice);
        HeapState ha = HeapState::init(cfg, src, k);
        HeapState hb = HeapState::init(cfg, src, k);
        ++diff[a(ha)];
        --diff[b(hb)];
        ++res.permutations;
        std::size_t s = 0;
        for (; s < idx.size(); ++s) {
            if (++idx[s] < per_section[s].size()) break;
            idx[s] = 0;
        }
        if (s == idx.size()) break;
    }
    for (const auto& [fp, n] : diff) {
        if (n == 0) continue;
        res.equal = false;
        res.detail = "representation '" + fp + "' occurs " + std::to_string(std::abs(n)) + " more times under " +
                     (n > 0 ? "A" : "B");
        break;
    }
    return res;
}

std::vector<HeapOp> parse_heap_ops(const std::string& text) {
    std::vector<HeapOp> ops;
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ';')) {
        std::istringstream ws(item);
        std::string verb, handle;
        if (!(ws >> verb)) continue;
        if (!(ws >> handle)) throw std::invalid_argument("missing handle in '" + item + "'");
        HeapOp op;
        if (verb == "alloc") {
            op.kind = HeapOp::Kind::Alloc;
        } else if (verb == "dealloc") {
            op.kind = HeapOp::Kind::Dealloc;
        } else {
            throw std::invalid_argument("unknown heap op '" + verb + "'");
        }
        op.handle = handle;
        ops.push_back(op);
    }
    return ops;
}

static std::string run_ops(const std::vector<HeapOp>& ops, HeapState& h) {
    std::map<std::string, Word> handles;
    for (const auto& op : ops) {
        if (op.kind == HeapOp::Kind::Alloc) {
            handles[op.handle] = h.alloc(op.words);
        } else {
            h.dealloc(handles.at(op.handle));
            handles.erase(op.handle);
        }
    }
    std::string out = h.fingerprint();
    for (const auto& [name, addr] : handles) out += " " + name + "=" + std::to_string(addr);
    return out;
}

OracleResult hi_distribution_oracle(const std::vector<HeapOp>& a, const std::vector<HeapOp>& b, int n,
                                    bool identity_only) {
    HeapConfig cfg;
    cfg.sections = {{1, n}};
    return hi_distribution_oracle(
        cfg, 8, [&](HeapState& h) { return run_ops(a, h); }, [&](HeapState& h) { return run_ops(b, h); },
        identity_only);
}

} // namespace tower
