#include <gtest/gtest.h>

#include <set>

#include "support.hpp"
#include "tower/ground.hpp"

using namespace tower;
using namespace tower::test;
namespace g = tower::ground;

namespace {

HeapState one_section_heap() {
    HeapConfig c;
    c.sections = {{4, 24}};
    return HeapState::init(c, PermutationSource::identity(), 8);
}

} // namespace

TEST(Manifest, OneEntryPerOperation) {
    g::Harness h;
    std::set<std::string> names;
    for (const auto& e : h.entries()) {
        EXPECT_TRUE(names.insert(e.name).second) << e.name;
        EXPECT_NO_THROW(h.program(e.file)) << e.name;
        EXPECT_NE(h.program(e.file).find(e.entry), nullptr) << e.name;
    }
    EXPECT_GE(h.entries().size(), 25u);
    for (const char* n : {"stack.push_front", "stack.pop_front", "queue.push_back", "list.length", "list.sum",
                          "list.find_pos", "list.remove", "string.is_empty", "string.length", "string.equal",
                          "string.concat", "string.is_prefix", "string.num_matching", "string.compare",
                          "radix.insert", "radix.contains", "hash.insert", "hash.contains"})
        EXPECT_TRUE(names.count(n)) << n;
    EXPECT_EQ(h.entry("hash.insert").hi_expected, std::optional<bool>(false));
}

TEST(Manifest, MalformedIsRejected) {
    EXPECT_THROW(g::load_manifest("/nonexistent/manifest.json"), g::ManifestError);
}

TEST(AValue, TextRoundTrip) {
    for (const char* t : {"[6,1,2]", "[]", "{1,2}", "\"0110\"", "5", "true", "()"})
        EXPECT_EQ(g::to_string(g::parse_avalue(t)), t);
    EXPECT_EQ(g::parse_avalue("{1,2}"), g::parse_avalue("{2,1}"));
    EXPECT_NE(g::parse_avalue("[1,2]"), g::parse_avalue("[2,1]"));
}

TEST(Encode, EmptyListIsNull) {
    HeapState h = one_section_heap();
    HeapState before = h;
    Value l = g::encode_list(h, list_ptr(), {});
    EXPECT_EQ(l.kind, ValueKind::Null);
    EXPECT_TRUE(h == before);
}

TEST(Encode, TwoNodeChain) {
    HeapState h = one_section_heap();
    Value l = g::encode_list(h, list_ptr(), {1, 2});
    // the last element goes in first, so it takes the first free block
    ASSERT_EQ(l.kind, ValueKind::Addr);
    EXPECT_EQ(l.n, 2u);
    EXPECT_EQ(h.block(2), (std::vector<Word>{1, 1, 0, 0}));
    EXPECT_EQ(h.block(1), (std::vector<Word>{2, 0, 0, 0}));
    EXPECT_EQ(g::decode_list(h, l), (std::vector<Word>{1, 2}));
}

TEST(Encode, RoundTrip) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 200; ++i) {
        HeapConfig c;
        c.sections = {{4, 24}};
        HeapState h = HeapState::init(c, PermutationSource::seeded(rng()), 8);
        std::vector<Word> xs(rng() % 10);
        for (auto& x : xs) x = Word(rng() % 256);
        Value l = g::encode_list(h, list_ptr(), xs);
        EXPECT_EQ(g::decode_list(h, l), xs);
    }
}

TEST(Reference, ListOps) {
    g::Harness h;
    auto ref = [&](const char* name, std::vector<g::AValue> in) { return g::reference(h.entry(name), in, 8, 4); };
    EXPECT_EQ(ref("list.length", {g::AValue::list({1, 2, 3}), g::AValue::num(0)}).result, g::AValue::num(3));
    EXPECT_EQ(ref("list.find_pos", {g::AValue::list({4, 7, 9}), g::AValue::num(7), g::AValue::num(0)}).result,
              g::AValue::num(1));
    EXPECT_EQ(g::to_string(ref("stack.push_front", {g::AValue::list({1, 2}), g::AValue::num(6)}).params[0]),
              "[6,1,2]");
}

TEST(Corpus, RadixSet) {
    g::Harness h;
    RunConfig cfg;
    cfg.heap.sections = {{4, 24}};
    HeapState heap = HeapState::init(cfg.heap, cfg.perm, cfg.k);
    Value t = h.build_set("radix", {3, 5, 9}, heap, cfg, 4);
    std::set<Word> keys;
    for (Word w : g::decode_trie(heap, t, 4)) keys.insert(w);
    EXPECT_EQ(keys, (std::set<Word>{3, 5, 9}));
    const auto& contains = h.entry("radix.contains");
    auto bound = g::bound_for(contains, 3, 8, 4);
    auto ask = [&](Word key) {
        auto low = h.lowered(contains, bound, 8);
        auto res = h.run_raw(contains, {t, Value::uint(key), Value::uint(4)}, heap, cfg, bound);
        return res.R.at(low->output);
    };
    EXPECT_EQ(ask(5), Value::boolean(true));
    EXPECT_EQ(ask(6), Value::boolean(false));
}

TEST(Corpus, EveryEntryMatchesItsReference) {
    g::Harness h;
    RunConfig cfg;
    cfg.heap.sections = {{4, 24}};
    cfg.perm = PermutationSource::seeded(17);
    for (const auto& e : h.entries()) {
        auto rec = h.check_entry(e, 5, 99, cfg, g::Sizes{});
        EXPECT_TRUE(rec.pass) << e.name << ": " << rec.detail;
    }
}

TEST(HistoryIndependence, Pairs) {
    g::Harness h;
    HeapConfig heap;
    heap.sections = {{4, 5}};
    EXPECT_TRUE(h.hi_check("radix", {1, 2}, {2, 1}, heap, 8, 2).equal);
    EXPECT_TRUE(h.hi_check("sorted", {4, 2}, {2, 4}, heap, 8, 2).equal);
    EXPECT_TRUE(h.hi_check("hash", {1, 2}, {1, 2}, heap, 8, 2).equal);
    EXPECT_FALSE(h.hi_check("hash", {1, 2}, {2, 1}, heap, 8, 2).equal);
}

TEST(Fit, ExactPolynomials) {
    std::vector<long long> xs{1, 2, 3, 4, 5, 6};
    auto f = g::fit_exact(xs, {7, 7, 7, 7, 7, 7}, 2);
    EXPECT_TRUE(f.exact);
    EXPECT_EQ(f.degree, 0);
    f = g::fit_exact(xs, {26, 49, 72, 95, 118, 141}, 2);
    EXPECT_EQ(f.degree, 1);
    EXPECT_EQ(f.law('n'), "23n + 3");
    f = g::fit_exact(xs, {3, 9, 19, 33, 51, 73}, 2);
    EXPECT_EQ(f.degree, 2);
    f = g::fit_exact(xs, {2, 4, 8, 16, 32, 64}, 2);
    EXPECT_FALSE(f.exact);
    EXPECT_TRUE(g::form_matches("exp", xs, {2, 4, 8, 16, 32, 64}));
    EXPECT_FALSE(g::form_matches("affine", xs, {2, 4, 8, 16, 32, 64}));
    EXPECT_FALSE(g::form_matches("exp", xs, {26, 49, 72, 95, 118, 141}));
}
