#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "uwf/bench/experiments.hpp"
#include "uwf/errors.hpp"

using namespace uwf;
using namespace uwf::bench;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

const RunRecord* find(const std::vector<RunRecord>& rs, Strategy s, long long n) {
    for (const RunRecord& r : rs)
        if (r.strategy == s && r.n_ensembles == n) return &r;
    return nullptr;
}

}  // namespace

TEST_CASE("runtime model evaluates the Amdahl-plus-overhead formula") {
    RuntimeModel m;  // t1=512, f=0.01, beta=0.02
    CHECK(m.runtime_seconds(1) == doctest::Approx(512.0));
    CHECK(m.runtime_seconds(8) == doctest::Approx(512.0 * (0.01 + 0.99 / 8.0) + 0.02 * 7));
    CHECK(m.runtime_seconds(128) == doctest::Approx(512.0 * (0.01 + 0.99 / 128.0) + 0.02 * 127));
    // more cores always help between 1 and 8 for these defaults
    CHECK(m.runtime_seconds(8) < m.runtime_seconds(1));
    CHECK_THROWS_AS(m.runtime_seconds(0), Error);
}

TEST_CASE("runtime model parsing") {
    RuntimeModel m = RuntimeModel::parse("t1=100,f=0.5,beta=1.5");
    CHECK(m.t1 == doctest::Approx(100.0));
    CHECK(m.serial_fraction == doctest::Approx(0.5));
    CHECK(m.overhead_per_core == doctest::Approx(1.5));
    CHECK_THROWS_AS(RuntimeModel::parse("t1=100,gamma=2"), Error);
    CHECK_THROWS_AS(RuntimeModel::parse("t1=abc"), Error);
    CHECK_THROWS_AS(RuntimeModel::parse("f=1.5"), Error);   // fraction out of range
    CHECK_THROWS_AS(RuntimeModel::parse("t1=-4"), Error);
}

TEST_CASE("ensemble count parsing") {
    CHECK(ExperimentConfig::parse_counts("1,16,128") ==
          std::vector<long long>{1, 16, 128});
    CHECK_THROWS_AS(ExperimentConfig::parse_counts(""), Error);
    CHECK_THROWS_AS(ExperimentConfig::parse_counts("1,x"), Error);
}

TEST_CASE("fine-grained submission times follow the serial-channel closed form") {
    ExperimentConfig cfg;
    cfg.ensemble_counts = {16, 64, 128, 256};
    cfg.strategies = {Strategy::FineGrained, Strategy::Scatter};
    std::vector<RunRecord> rs = run_fig5(cfg);

    for (long long n : cfg.ensemble_counts) {
        const RunRecord* f = find(rs, Strategy::FineGrained, n);
        REQUIRE(f);
        CHECK(f->jobs_submitted == n);
        // Below the 64-job cap every attempt is accepted: last queued at n
        // seconds. Above it, each extra member costs one rejected attempt plus
        // one accepted attempt: 2n - 64 seconds.
        double expect = n <= 64 ? double(n) : double(2 * n - 64);
        CHECK(f->time_last_queued == doctest::Approx(expect));
        CHECK(f->rejections_deferred == (n > 64 ? n - 64 : 0));

        const RunRecord* s = find(rs, Strategy::Scatter, n);
        REQUIRE(s);
        long long jobs = (n + 127) / 128;
        CHECK(s->jobs_submitted == jobs);
        CHECK(s->time_last_queued == doctest::Approx(double(jobs)));
    }
    CHECK(check_fig5(rs).empty());
}

TEST_CASE("strategy runtime orderings hold at representative ensemble sizes") {
    ExperimentConfig cfg;
    cfg.ensemble_counts = {1, 16, 128, 512};
    cfg.strategies = {Strategy::MpiScatter, Strategy::ScatterOnly, Strategy::MpiOnly};
    std::vector<RunRecord> rs = run_fig6(cfg);
    CHECK(check_fig6(rs).empty());
    for (long long n : cfg.ensemble_counts) {
        const RunRecord* ms = find(rs, Strategy::MpiScatter, n);
        const RunRecord* so = find(rs, Strategy::ScatterOnly, n);
        const RunRecord* mo = find(rs, Strategy::MpiOnly, n);
        REQUIRE((ms && so && mo));
        CHECK(so->total_runtime > ms->total_runtime);
        if (n <= 16) CHECK(mo->total_runtime < ms->total_runtime);
        if (n >= 128) CHECK(mo->total_runtime > ms->total_runtime);
        // job counts from packing: 16 members of 8 cores per 128-core node
        CHECK(ms->jobs_submitted == (n + 15) / 16);
        CHECK(so->jobs_submitted == (n + 127) / 128);
        CHECK(mo->jobs_submitted == n);
    }
}

TEST_CASE("CSV emission is ordered, headed and deterministic") {
    ExperimentConfig cfg;
    cfg.ensemble_counts = {64, 16};  // intentionally unsorted
    cfg.strategies = {Strategy::Scatter, Strategy::FineGrained};
    std::vector<RunRecord> rs = run_fig5(cfg);

    fs::path dir = fs::temp_directory_path() / ("uwf-bench-csv-" + std::to_string(::getpid()));
    fs::create_directories(dir);
    emit_csv(rs, dir / "a.csv");
    emit_csv(run_fig5(cfg), dir / "b.csv");
    std::string a = slurp(dir / "a.csv");
    CHECK(a == slurp(dir / "b.csv"));  // byte-identical across runs

    std::istringstream in(a);
    std::string line;
    std::getline(in, line);
    CHECK(line == "strategy,n,jobs,nodes,time_last_queued,total_runtime,deferred");
    std::vector<std::string> rows;
    while (std::getline(in, line)) rows.push_back(line);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].rfind("FINE_GRAINED,16,", 0) == 0);
    CHECK(rows[1].rfind("FINE_GRAINED,64,", 0) == 0);
    CHECK(rows[2].rfind("SCATTER,16,", 0) == 0);
    CHECK(rows[3].rfind("SCATTER,64,", 0) == 0);

    CHECK_THROWS_AS(emit_csv({}, dir / "empty.csv"), Error);
    CHECK_THROWS_AS(emit_summary({}), Error);
    CHECK(emit_summary(rs).find("FINE_GRAINED") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("shape checks reject seeded violations") {
    ExperimentConfig cfg;
    cfg.ensemble_counts = {64, 128, 2048};
    cfg.strategies = {Strategy::FineGrained, Strategy::Scatter};
    std::vector<RunRecord> rs = run_fig5(cfg);
    REQUIRE(check_fig5(rs).empty());

    std::vector<RunRecord> broken = rs;
    for (RunRecord& r : broken)
        if (r.strategy == Strategy::FineGrained && r.n_ensembles == 128)
            r.time_last_queued = 1.0;  // kills monotonicity and the cap jump
    CHECK(!check_fig5(broken).empty());

    broken = rs;
    for (RunRecord& r : broken)
        if (r.strategy == Strategy::Scatter && r.n_ensembles == 2048)
            r.time_last_queued = 1000.0;  // ratio collapses below 100
    CHECK(!check_fig5(broken).empty());

    ExperimentConfig cfg6;
    cfg6.ensemble_counts = {16, 128};
    cfg6.strategies = {Strategy::MpiScatter, Strategy::ScatterOnly, Strategy::MpiOnly};
    std::vector<RunRecord> rs6 = run_fig6(cfg6);
    REQUIRE(check_fig6(rs6).empty());
    for (RunRecord& r : rs6)
        if (r.strategy == Strategy::ScatterOnly) r.total_runtime = 0.0;
    CHECK(!check_fig6(rs6).empty());
}

TEST_CASE("experiment drivers reject strategies from the other experiment") {
    ExperimentConfig cfg;
    cfg.ensemble_counts = {16};
    cfg.strategies = {Strategy::MpiOnly};
    CHECK_THROWS_AS(run_fig5(cfg), Error);
    cfg.strategies = {Strategy::FineGrained};
    CHECK_THROWS_AS(run_fig6(cfg), Error);
}
