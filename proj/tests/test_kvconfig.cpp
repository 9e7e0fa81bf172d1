#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "uwf/errors.hpp"
#include "uwf/kvconfig.hpp"
#include "uwf/vtime.hpp"

using namespace uwf;

TEST_CASE("scalars, arrays and comments") {
    KvConfig cfg = KvConfig::parse(
        "# machine file\n"
        "name: archer2   # trailing comment\n"
        "cores_per_node: 128\n"
        "latency: 1.5\n"
        "quoted: \"a # not a comment\"\n"
        "members: [a, b, c]\n"
        "empty_list: []\n");
    CHECK(cfg.get_string("name") == "archer2");
    CHECK(cfg.get_int("cores_per_node") == 128);
    CHECK(cfg.get_double("latency") == doctest::Approx(1.5));
    CHECK(cfg.get_string("quoted") == "a # not a comment");
    CHECK(cfg.get_array("members") == std::vector<std::string>{"a", "b", "c"});
    CHECK(cfg.get_array("empty_list").empty());
    CHECK_FALSE(cfg.has("missing"));
    CHECK(cfg.get_int("missing", 7) == 7);
}

TEST_CASE("durations are decimal seconds") {
    KvConfig cfg = KvConfig::parse("cycle: 0.25\n");
    CHECK(cfg.get_duration("cycle", 0) == 250'000);
    CHECK(cfg.get_duration("absent", kMicrosPerSecond) == kMicrosPerSecond);
}

TEST_CASE("strict number parsing rejects trailing junk") {
    CHECK(parse_int_strict("42", "x") == 42);
    CHECK(parse_int_strict("-3", "x") == -3);
    CHECK_THROWS_AS(parse_int_strict("42x", "x"), Error);
    CHECK_THROWS_AS(parse_int_strict("", "x"), Error);
    CHECK_THROWS_AS(parse_double_strict("1.2.3", "x"), Error);
    KvConfig cfg = KvConfig::parse("n: twelve\n");
    CHECK_THROWS_AS(cfg.get_int("n"), Error);
}

TEST_CASE("malformed lines carry origin and line number") {
    try {
        KvConfig::parse("ok: 1\nno colon here\n", "conf.yaml");
        FAIL("expected parse failure");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("conf.yaml") != std::string::npos);
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}

TEST_CASE("split_blocks groups repeated block keys") {
    KvConfig cfg = KvConfig::parse(
        "machine: a\n"
        "nodes: 4\n"
        "machine: b\n"
        "nodes: 8\n"
        "cores_per_node: 64\n");
    std::vector<KvConfig> blocks = cfg.split_blocks("machine");
    REQUIRE(blocks.size() == 2);
    CHECK(blocks[0].get_string("machine") == "a");
    CHECK(blocks[0].get_int("nodes") == 4);
    CHECK(blocks[1].get_int("nodes") == 8);
    CHECK(blocks[1].get_int("cores_per_node") == 64);
    CHECK_FALSE(blocks[0].has("cores_per_node"));
    CHECK_THROWS_AS(KvConfig::parse("stray: 1\nmachine: a\n").split_blocks("machine"), Error);
}

TEST_CASE("first occurrence wins on repeated keys") {
    KvConfig cfg = KvConfig::parse("x: 1\nx: 2\n");
    CHECK(cfg.get_int("x") == 1);
    CHECK(cfg.entries().size() == 2);
}

TEST_CASE("parse_file round trip") {
    auto path = std::filesystem::temp_directory_path() / "uwf-kv-test.yaml";
    {
        std::ofstream out(path);
        out << "alpha: 1\nbeta: [x, y]\n";
    }
    KvConfig cfg = KvConfig::parse_file(path);
    CHECK(cfg.get_int("alpha") == 1);
    CHECK(cfg.get_array("beta").size() == 2);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(KvConfig::parse_file(path), Error);
}

TEST_CASE("walltime parsing") {
    CHECK(parse_walltime("00:00:01") == kMicrosPerSecond);
    CHECK(parse_walltime("01:30:00") == 5400 * kMicrosPerSecond);
    CHECK(parse_walltime("100:00:00") == 360000LL * kMicrosPerSecond);
    CHECK_THROWS_AS(parse_walltime("1:2"), Error);
    CHECK_THROWS_AS(parse_walltime("00:61:00"), Error);
    CHECK_THROWS_AS(parse_walltime("junk"), Error);
}

TEST_CASE("fixed point vtime formatting") {
    CHECK(format_vtime(0) == "0.000000");
    CHECK(format_vtime(1'500'000) == "1.500000");
    CHECK(format_vtime(42) == "0.000042");
}
