#include <random>

#include "doctest.h"

#include "corpusforge/corpus_index.hpp"
#include "corpusforge/error.hpp"
#include "test_support.hpp"

using namespace corpusforge;

TEST_SUITE("corpus_index") {
  TEST_CASE("empty file") {
    cftest::TempDir tmp;
    cftest::write_file(tmp / "e.jsonl", "");
    const auto idx = build_index(tmp / "e.jsonl");
    CHECK(idx.spans.empty());
    CHECK(idx.source_size == 0);
  }

  TEST_CASE("two-document fixture spans and reads") {
    const auto raw = cftest::fixture("corpus/two_docs.jsonl");
    const auto idx = build_index(raw);
    CHECK(idx.source_size == 27);
    CHECK(idx.spans == std::vector<DocSpan>{{0, 12}, {13, 13}});
    CHECK(read_document(raw, idx, 0) == R"({"text":"a"})");
    CHECK(read_document(raw, idx, 1) == R"({"text":"bc"})");
    CHECK_THROWS_AS(read_document(raw, idx, 2), OutOfRangeError);
  }

  TEST_CASE("final line without newline, blank lines skipped, CR kept") {
    const auto raw = cftest::fixture("corpus/mixed.jsonl");
    const auto idx = build_index(raw);
    const auto size = std::filesystem::file_size(raw);
    REQUIRE(idx.spans.size() == 4);
    CHECK(idx.spans.back().byte_offset + idx.spans.back().byte_length == size);
    CHECK(read_document(raw, idx, 0).back() == '\r');
  }

  TEST_CASE("sidecar matches the oracle bytes and round-trips") {
    cftest::TempDir tmp;
    for (const char* name : {"two_docs.jsonl", "mixed.jsonl"}) {
      CAPTURE(name);
      const auto idx = build_index(cftest::fixture(std::string("corpus/") + name));
      write_index(idx, tmp / "x.didx");
      CHECK(cftest::read_file(tmp / "x.didx") == cftest::read_file(cftest::fixture(std::string("golden/") + name + ".didx")));
      CHECK(load_index(tmp / "x.didx") == idx);
    }
    write_index(DocumentIndex{}, tmp / "empty.didx");
    CHECK(load_index(tmp / "empty.didx") == DocumentIndex{});
  }

  TEST_CASE("load rejects bad magic, version and truncation") {
    cftest::TempDir tmp;
    const auto good = cftest::read_file(cftest::fixture("golden/two_docs.jsonl.didx"));
    auto bad = good;
    bad[0] = 'X';
    cftest::write_file(tmp / "m.didx", bad);
    CHECK_THROWS_AS(load_index(tmp / "m.didx"), FormatError);
    bad = good;
    bad[8] = 2;
    cftest::write_file(tmp / "v.didx", bad);
    CHECK_THROWS_AS(load_index(tmp / "v.didx"), FormatError);
    cftest::write_file(tmp / "t.didx", good.substr(0, good.size() - 1));
    CHECK_THROWS_AS(load_index(tmp / "t.didx"), FormatError);
    cftest::write_file(tmp / "s.didx", good.substr(0, 10));
    CHECK_THROWS_AS(load_index(tmp / "s.didx"), FormatError);
    bad = good;
    bad[28] = 20;  // first span now overlaps the second
    cftest::write_file(tmp / "o.didx", bad);
    CHECK_THROWS_AS(load_index(tmp / "o.didx"), FormatError);
  }

  TEST_CASE("staleness by size") {
    cftest::TempDir tmp;
    cftest::write_file(tmp / "c.jsonl", "{\"text\":\"a\"}\n");
    const auto idx = build_index(tmp / "c.jsonl");
    CHECK(verify_index(idx, tmp / "c.jsonl") == IndexStatus::Ok);
    cftest::write_file(tmp / "c.jsonl", "{\"text\":\"a\"}\n{\"text\":\"b\"}\n");
    CHECK(verify_index(idx, tmp / "c.jsonl") == IndexStatus::Stale);
    cftest::write_file(tmp / "c.jsonl", "{}");
    CHECK(verify_index(idx, tmp / "c.jsonl") == IndexStatus::Stale);
  }

  TEST_CASE("load_or_build writes and reuses the sidecar, rebuilding when stale") {
    cftest::TempDir tmp;
    const auto raw = tmp / "c.jsonl";
    cftest::write_file(raw, "{\"text\":\"a\"}\n");
    CHECK(load_or_build_index(raw).size() == 1);
    CHECK(std::filesystem::exists(index_path_for(raw)));
    CHECK(index_path_for(raw).filename() == "c.jsonl.didx");
    cftest::write_file(raw, "{\"text\":\"a\"}\n{\"text\":\"b\"}\n");
    CHECK(load_or_build_index(raw).size() == 2);
    CHECK(load_index(index_path_for(raw)).size() == 2);
  }

  TEST_CASE("missing file is an IoError") {
    CHECK_THROWS_AS(build_index("/nonexistent/corpus.jsonl"), IoError);
  }

  TEST_CASE("property: buffer-size independence and exact reconstruction") {
    std::mt19937_64 rng(11);
    cftest::TempDir tmp;
    for (int trial = 0; trial < 25; ++trial) {
      std::string text;
      const std::size_t lines = rng() % 200;
      std::size_t non_empty = 0;
      for (std::size_t i = 0; i < lines; ++i) {
        const std::size_t len = rng() % 4 == 0 ? 0 : rng() % 300;
        for (std::size_t k = 0; k < len; ++k) text.push_back(static_cast<char>('a' + rng() % 26));
        non_empty += len > 0;
        if (i + 1 < lines || rng() % 2) text.push_back('\n');
      }
      const auto raw = tmp / "r.jsonl";
      cftest::write_file(raw, text);
      const auto reference = build_index(raw, 1);
      CHECK(reference.size() == non_empty);
      for (std::size_t buf : {std::size_t{7}, std::size_t{64} << 10, std::size_t{1} << 20})
        CHECK(build_index(raw, buf) == reference);

      // Spans plus the skipped newlines reproduce the file.
      std::string rebuilt(text.size(), '\n');
      for (std::size_t i = 0; i < reference.size(); ++i) {
        const std::string doc = read_document(raw, reference, i);
        rebuilt.replace(reference.spans[i].byte_offset, doc.size(), doc);
      }
      CHECK(rebuilt == text);
      for (std::size_t i = 1; i < reference.size(); ++i)
        CHECK(reference.spans[i].byte_offset > reference.spans[i - 1].byte_offset + reference.spans[i - 1].byte_length);
    }
  }
}
