#include "doctest.h"

#include "ragkit/ranked_list.hpp"
#include "ragkit/workspace.hpp"
#include "test_util.hpp"

using namespace ragkit;
using testutil::TempDir;

TEST_CASE("WorkspaceLayout: ensure_dirs creates the full tree") {
    TempDir tmp;
    WorkspaceLayout layout{tmp.path / "ws"};
    layout.ensure_dirs();
    for (const auto& p : {layout.corpora(), layout.indexes(), layout.embeddings(),
                          layout.adapters(), layout.runs(), layout.fixtures(), layout.reports()}) {
        CHECK(std::filesystem::is_directory(p));
    }
}

TEST_CASE("atomic_write_file: content lands, no temp residue, overwrite works") {
    TempDir tmp;
    auto path = tmp.path / "out.txt";
    atomic_write_file(path, "first");
    CHECK(read_file(path) == "first");
    atomic_write_file(path, "second");
    CHECK(read_file(path) == "second");
    int entries = 0;
    for (const auto& e : std::filesystem::directory_iterator(tmp.path)) {
        (void)e;
        ++entries;
    }
    CHECK(entries == 1);
    CHECK_THROWS(read_file(tmp.path / "missing.txt"));
}

TEST_CASE("run tags restricted to filesystem-safe characters") {
    CHECK(is_valid_run_tag("exp-1.baseline_A"));
    CHECK_FALSE(is_valid_run_tag(""));
    CHECK_FALSE(is_valid_run_tag("has space"));
    CHECK_FALSE(is_valid_run_tag("slash/y"));
    CHECK_FALSE(is_valid_run_tag("dots/../escape"));
}

TEST_CASE("run file round-trip preserves order, scores, and tags") {
    TempDir tmp;
    RankedList l1;
    l1.query_id = "q1";
    l1.entries = {{"c2", 2.5, 1}, {"c7", 1.25, 2}};
    RankedList l2;
    l2.query_id = "q2";
    l2.entries = {{"c1", 0.5, 1}};
    auto path = tmp.path / "run.txt";
    write_run_file(path, {l1, l2}, "mytag");
    auto back = read_run_file(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].query_id == "q1");
    CHECK(back[0].entries.size() == 2);
    CHECK(back[0].entries[0].chunk_id == "c2");
    CHECK(back[0].entries[0].score == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(back[0].entries[1].rank == 2);
    CHECK(back[1].query_id == "q2");
    // write -> read -> write is byte-identical
    auto path2 = tmp.path / "run2.txt";
    write_run_file(path2, back, "mytag");
    CHECK(read_file(path) == read_file(path2));
}

TEST_CASE("run file rejects malformed ranks") {
    TempDir tmp;
    RankedList gap;
    gap.query_id = "q";
    gap.entries = {{"a", 2.0, 1}, {"b", 1.0, 3}};  // rank gap
    CHECK_THROWS(write_run_file(tmp.path / "bad.txt", {gap}, "t"));
}
