#include <gtest/gtest.h>

#include <set>

#include "support.hpp"

using namespace tower;
using namespace tower::test;

TEST(Negative, StaticSuiteCitesTheIntendedRule) {
    auto cases = negative_cases("negative");
    EXPECT_GE(cases.size(), 30u);
    std::set<std::string> rules;
    for (const auto& c : cases) {
        ASSERT_FALSE(c.expect.empty()) << c.path;
        ASSERT_GT(c.line, 0) << c.path;
        auto o = run_static_negative(c);
        EXPECT_TRUE(o.detected) << c.path << " accepted";
        EXPECT_EQ(o.got, c.expect) << c.path << ": " << o.message;
        EXPECT_EQ(o.line, c.line) << c.path << ": " << o.message;
        rules.insert(c.expect);
    }
    for (const char* r : {"TV-Var", "TV-Num", "TE-Proj", "TE-Not", "TE-Test", "TE-Lop", "TE-Aop", "TE-Cmp", "TE-Bit",
                          "TE-Alloc", "TypOk-Var", "TypOk-Ind", "TE-CallSelf", "TE-CallBounded", "TE-CallUnbounded",
                          "S-Assign", "S-UnAssign", "S-Swap", "S-MemSwap", "S-If", "S-Return", "Fun-Decl"})
        EXPECT_TRUE(rules.count(r)) << "no negative program for " << r;
}

TEST(Negative, RuntimeSuiteIsDetectedWithLocations) {
    auto cases = negative_cases("runtime");
    EXPECT_GE(cases.size(), 3u);
    for (const auto& c : cases) {
        auto o = run_runtime_negative(c);
        EXPECT_TRUE(o.detected) << c.path << " ran to completion";
        EXPECT_EQ(o.got, c.expect) << c.path << ": " << o.message;
        EXPECT_EQ(o.line, c.line) << c.path << ": " << o.message;
    }
}

TEST(Negative, LeakReportNamesTheVariable) {
    auto cases = negative_cases("runtime");
    for (const auto& c : cases) {
        if (c.expect != "Leak") continue;
        auto o = run_runtime_negative(c);
        EXPECT_NE(o.message.find("registers still bound at exit"), std::string::npos) << o.message;
    }
}
