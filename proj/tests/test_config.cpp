#include <doctest.h>

#include "xfmr/config.hpp"

using namespace xfmr;

TEST_SUITE_BEGIN("config");

TEST_CASE("sections and dotted keys") {
    const Config cfg = Config::parse_string(R"(
top = 1
[plan]
name = desk   ; trailing comment
seeds = 0, 1, 2
[target.qalb_30g.grid]
tech = tgt22_qalb_30g
d_out = 50:100:10
[target.qblb_30g.grid]
tech = tgt22_qblb_30g
)");
    CHECK(cfg.number("top") == 1);
    CHECK(cfg.str("plan.name") == "desk");
    CHECK(cfg.number_list("plan.seeds") == std::vector<double>{0, 1, 2});
    CHECK(cfg.str("target.qalb_30g.grid.tech") == "tgt22_qalb_30g");
    CHECK(cfg.subsections("target") ==
          std::vector<std::string>{"qalb_30g", "qblb_30g"});
}

TEST_CASE("missing and malformed keys") {
    const Config cfg = Config::parse_string("a = 1\nb = x\n");
    CHECK_THROWS_WITH_AS(cfg.raw("missing"), "missing config key: missing", ConfigError);
    CHECK_THROWS_AS(cfg.number("b"), ConfigError);
    CHECK_THROWS_AS(Config::parse_string("no equals sign"), ConfigError);
    CHECK_THROWS_AS(Config::parse_string("[unclosed"), ConfigError);
}

TEST_CASE("fallbacks and booleans") {
    const Config cfg = Config::parse_string("flag = true\nn = 7\n");
    CHECK(cfg.boolean("flag", false));
    CHECK(cfg.boolean("absent", true));
    CHECK(cfg.integer("n") == 7);
    CHECK(cfg.number("absent", 2.5) == 2.5);
    CHECK(cfg.str("absent", "x") == "x");
}

TEST_CASE("later assignment wins") {
    const Config cfg = Config::parse_string("a = 1\na = 2\n");
    CHECK(cfg.number("a") == 2);
}

TEST_SUITE_END();
