#include <atomic>
#include <chrono>
#include <random>
#include <thread>

#include "doctest.h"

#include "corpusforge/bench.hpp"
#include "corpusforge/bounded_queue.hpp"
#include "corpusforge/packed_data.hpp"
#include "corpusforge/tokenize_pipeline.hpp"
#include "test_support.hpp"

using namespace corpusforge;

namespace {

PipelineConfig config_for(const std::filesystem::path& out, std::size_t workers, std::size_t batch,
                          std::size_t capacity) {
  PipelineConfig cfg;
  cfg.out_path = out;
  cfg.workers = workers;
  cfg.batch_size = batch;
  cfg.queue_capacity = capacity;
  return cfg;
}

}  // namespace

TEST_SUITE("bounded_queue") {
  TEST_CASE("fifo, capacity and close") {
    BoundedQueue<int> q(2);
    CHECK(q.push(1));
    CHECK(q.push(2));
    std::atomic<bool> third_done{false};
    std::thread producer([&] {
      q.push(3);
      third_done = true;
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    CHECK_FALSE(third_done.load());
    CHECK(q.pop() == 1);
    producer.join();
    CHECK(third_done.load());
    CHECK(q.high_water() == 2);
    q.close();
    CHECK_FALSE(q.push(4));
    CHECK(q.pop() == 2);
    CHECK(q.pop() == 3);
    CHECK_FALSE(q.pop().has_value());
  }

  TEST_CASE("last producer out closes") {
    BoundedQueue<int> q(4, 3);
    q.close_producer();
    q.close_producer();
    CHECK(q.push(1));
    q.close_producer();
    CHECK(q.pop() == 1);
    CHECK_FALSE(q.pop().has_value());
  }
}

TEST_SUITE("tokenize_pipeline") {
  TEST_CASE("extract_text") {
    CHECK(extract_text(R"({"text":"hi"})").text == "hi");
    CHECK(extract_text(R"({"other":1})").status == ExtractStatus::MissingKey);
    CHECK(extract_text(R"({"text":1})").status == ExtractStatus::NotString);
    CHECK(extract_text("not json").status == ExtractStatus::Malformed);
    CHECK(extract_text("[1]").status == ExtractStatus::Malformed);
    CHECK(extract_text("{\"text\":\"x\"}\r").text == "x");
    CHECK(extract_text(R"({"body":"b"})", "body").text == "b");
    CHECK(extract_text(R"({"text":"é"})").text == "\xc3\xa9");
  }

  TEST_CASE("config validation and default workers") {
    CHECK(default_worker_count() >= 1);
    PipelineConfig cfg;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);  // no out_path
    cfg.out_path = "x";
    cfg.workers = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg.workers = 2;
    cfg.queue_capacity = 3;
    CHECK(cfg.effective_max_reorder() == 12);
    cfg.max_reorder = 5;
    CHECK(cfg.effective_max_reorder() == 5);
  }

  TEST_CASE("two-document fixture matches the oracle bytes for every worker count") {
    cftest::TempDir tmp;
    const auto raw = cftest::fixture("corpus/two_docs.jsonl");
    const auto idx = build_index(raw);
    ByteTokenizer tok(256);
    for (std::size_t w : {1, 2, 8}) {
      for (std::size_t cap : {1, 4, 64}) {
        const auto stats = run_pipeline(raw, idx, tok, config_for(tmp / "o.cfpk", w, 1, cap));
        CHECK(stats.documents == 2);
        CHECK(stats.tokens == 5);
        CHECK(cftest::read_file(tmp / "o.cfpk") == cftest::read_file(cftest::fixture("golden/two_docs.byte_eod256.cfpk")));
      }
    }
  }

  TEST_CASE("one malformed line among 100") {
    cftest::TempDir tmp;
    const auto raw = cftest::fixture("corpus/hundred_one_malformed.jsonl");
    const auto stats = run_pipeline(raw, build_index(raw), ByteTokenizer(256), config_for(tmp / "o.cfpk", 3, 7, 2));
    CHECK(stats.documents == 99);
    CHECK(stats.skipped == 1);
    CHECK(stats.malformed == 1);
    CHECK(open_packed(tmp / "o.cfpk").doc_count() == 99);
    CHECK(cftest::read_file(tmp / "o.cfpk") ==
          cftest::read_file(cftest::fixture("golden/hundred_one_malformed.byte_eod256.cfpk")));
  }

  TEST_CASE("mixed fixture: empty text, missing key, CRLF, no final newline") {
    cftest::TempDir tmp;
    const auto raw = cftest::fixture("corpus/mixed.jsonl");
    const auto stats = run_pipeline(raw, build_index(raw), ByteTokenizer(256), config_for(tmp / "o.cfpk", 2, 1, 1));
    CHECK(stats.documents == 2);
    CHECK(stats.empty == 1);
    CHECK(stats.missing_text == 1);
    CHECK(cftest::read_file(tmp / "o.cfpk") == cftest::read_file(cftest::fixture("golden/mixed.byte_eod256.cfpk")));
  }

  TEST_CASE("append_eod=false and tokenizers without eod") {
    cftest::TempDir tmp;
    const auto raw = cftest::fixture("corpus/two_docs.jsonl");
    auto cfg = config_for(tmp / "o.cfpk", 1, 4, 4);
    cfg.append_eod = false;
    run_pipeline(raw, build_index(raw), ByteTokenizer(256), cfg);
    auto r = open_packed(tmp / "o.cfpk");
    CHECK(r.document_tokens(1) == std::vector<TokenId>{98, 99});
    CHECK(r.token_width() == 2);
    cfg.append_eod = true;
    run_pipeline(raw, build_index(raw), ByteTokenizer(), cfg);
    r = open_packed(tmp / "o.cfpk");
    CHECK(r.token_width() == 1);
    CHECK(r.token_count() == 3);
  }

  TEST_CASE("empty corpus and more workers than documents") {
    cftest::TempDir tmp;
    cftest::write_file(tmp / "e.jsonl", "");
    auto stats = run_pipeline(tmp / "e.jsonl", build_index(tmp / "e.jsonl"), ByteTokenizer(256),
                              config_for(tmp / "e.cfpk", 8, 3, 1));
    CHECK(stats.documents == 0);
    CHECK(open_packed(tmp / "e.cfpk").token_count() == 0);
    const auto raw = cftest::fixture("corpus/two_docs.jsonl");
    stats = run_pipeline(raw, build_index(raw), ByteTokenizer(256), config_for(tmp / "o.cfpk", 16, 1, 1));
    CHECK(stats.documents == 2);
  }

  TEST_CASE("stale index is refused") {
    cftest::TempDir tmp;
    cftest::write_file(tmp / "c.jsonl", "{\"text\":\"a\"}\n");
    const auto idx = build_index(tmp / "c.jsonl");
    cftest::write_file(tmp / "c.jsonl", "{\"text\":\"ab\"}\n");
    CHECK_THROWS_AS(run_pipeline(tmp / "c.jsonl", idx, ByteTokenizer(), config_for(tmp / "o.cfpk", 1, 1, 1)),
                    StaleIndexError);
    CHECK_FALSE(std::filesystem::exists(tmp / "o.cfpk"));
  }

  TEST_CASE("failures abort cleanly and remove the output") {
    cftest::TempDir tmp;
    const auto raw = cftest::fixture("corpus/hundred_one_malformed.jsonl");
    const auto idx = build_index(raw);
    PipelineHooks hooks;
    hooks.before_tokenize = [](std::uint64_t seq) {
      if (seq == 5) throw IoError("injected");
    };
    CHECK_THROWS_AS(run_pipeline(raw, idx, ByteTokenizer(256), config_for(tmp / "o.cfpk", 4, 3, 1), hooks), IoError);
    CHECK_FALSE(std::filesystem::exists(tmp / "o.cfpk"));

    hooks = {};
    hooks.before_write = [](std::uint64_t seq) {
      if (seq == 2) throw IoError("disk full");
    };
    CHECK_THROWS_AS(run_pipeline(raw, idx, ByteTokenizer(256), config_for(tmp / "o.cfpk", 2, 3, 1), hooks), IoError);
    CHECK_FALSE(std::filesystem::exists(tmp / "o.cfpk"));
  }

  TEST_CASE("reorder buffer restores order when early batches are slow") {
    cftest::TempDir tmp;
    const auto raw = cftest::fixture("corpus/hundred_one_malformed.jsonl");
    const auto idx = build_index(raw);
    PipelineHooks hooks;
    hooks.before_tokenize = [](std::uint64_t seq) {
      if (seq % 7 == 0) std::this_thread::sleep_for(std::chrono::milliseconds(3));
    };
    const auto stats = run_pipeline(raw, idx, ByteTokenizer(256), config_for(tmp / "o.cfpk", 4, 2, 2), hooks);
    CHECK(stats.reorder_high_water <= PipelineConfig{}.effective_max_reorder() + 8);
    CHECK(cftest::read_file(tmp / "o.cfpk") ==
          cftest::read_file(cftest::fixture("golden/hundred_one_malformed.byte_eod256.cfpk")));
  }

  TEST_CASE("backpressure: a slow writer bounds what the reader has in flight") {
    cftest::TempDir tmp;
    const auto raw = cftest::fixture("corpus/hundred_one_malformed.jsonl");
    const auto idx = build_index(raw);
    PipelineHooks hooks;
    hooks.before_write = [](std::uint64_t) { std::this_thread::sleep_for(std::chrono::milliseconds(2)); };
    for (std::size_t w : {1, 3}) {
      auto cfg = config_for(tmp / "o.cfpk", w, 4, 1);
      const auto stats = run_pipeline(raw, idx, ByteTokenizer(256), cfg, hooks);
      CHECK(stats.work_queue_high_water <= 1);
      CHECK(stats.output_queue_high_water <= 1);
      CHECK(stats.reorder_high_water <= cfg.effective_max_reorder());
      CHECK(stats.batches == 25);
    }
  }

  TEST_CASE("stats are consistent") {
    cftest::TempDir tmp;
    const auto raw = tmp / "s.jsonl";
    generate_synthetic_corpus(raw, SyntheticCorpusSpec{300, 1, 30, 100, 3, 17, 0});
    const auto stats = run_pipeline(raw, build_index(raw), ByteTokenizer(256), config_for(tmp / "o.cfpk", 2, 16, 2));
    const auto r = open_packed(tmp / "o.cfpk");
    CHECK(stats.documents == r.doc_count());
    CHECK(stats.tokens == r.token_count());
    CHECK(stats.documents + stats.skipped == 300);
    CHECK(stats.malformed == 300 / 17);
    CHECK(stats.tokens_per_second == doctest::Approx(static_cast<double>(stats.tokens) / stats.elapsed_seconds));
    std::uint64_t sum = 0;
    for (std::uint64_t i = 0; i < r.doc_count(); ++i) sum += r.span(i).token_length;
    CHECK(sum == r.token_count());
  }

  TEST_CASE("document order equals corpus order (byte decode)") {
    cftest::TempDir tmp;
    const auto raw = tmp / "s.jsonl";
    generate_synthetic_corpus(raw, SyntheticCorpusSpec{500, 1, 20, 50, 9, 0, 0});
    const auto idx = build_index(raw);
    ByteTokenizer tok(256);
    run_pipeline(raw, idx, tok, config_for(tmp / "o.cfpk", 4, 3, 2));
    const auto r = open_packed(tmp / "o.cfpk");
    REQUIRE(r.doc_count() == idx.size());
    for (std::uint64_t i = 0; i < r.doc_count(); ++i) {
      const auto expected = extract_text(read_document(raw, idx, i)).text;
      CHECK(tok.decode(r.document_tokens(i)) == expected);
    }
  }

  TEST_CASE("property: identical output across workers, capacities and batch sizes; equals the sequential reference") {
    std::mt19937_64 rng(31);
    cftest::TempDir tmp;
    ByteTokenizer byte_tok(256);
    WhitespaceTokenizer ws({"alpha", "beta", "gamma", "x", "<eod>"}, std::nullopt, 4);
    for (int trial = 0; trial < 6; ++trial) {
      const auto raw = tmp / "r.jsonl";
      cftest::write_file(raw, cftest::random_jsonl(rng, 1 + rng() % 400));
      const auto idx = build_index(raw);
      const Tokenizer& tok = trial % 2 ? static_cast<const Tokenizer&>(ws) : byte_tok;
      const auto ref = cftest::reference_tokenize(raw, tok, true, "text", tmp / "ref.cfpk");
      const auto expected = cftest::read_file(tmp / "ref.cfpk");
      for (std::size_t w : {1, 2, 4, 8}) {
        for (std::size_t cap : {1, 4, 64}) {
          const std::size_t batch = 1 + rng() % 50;
          CAPTURE(trial);
          CAPTURE(w);
          CAPTURE(cap);
          const auto stats = run_pipeline(raw, idx, tok, config_for(tmp / "o.cfpk", w, batch, cap));
          CHECK(stats.documents == ref.documents);
          CHECK(stats.skipped == ref.skipped);
          CHECK(cftest::read_file(tmp / "o.cfpk") == expected);
        }
      }
    }
  }
}

TEST_SUITE("bench") {
  TEST_CASE("synthetic corpus is deterministic and counts lines") {
    cftest::TempDir tmp;
    const SyntheticCorpusSpec spec{200, 0, 50, 300, 4, 10, 0};
    const auto a = generate_synthetic_corpus(tmp / "a.jsonl", spec);
    const auto b = generate_synthetic_corpus(tmp / "b.jsonl", spec);
    CHECK(a.lines == 200);
    CHECK(a.malformed == 20);
    CHECK(a.bytes == std::filesystem::file_size(tmp / "a.jsonl"));
    CHECK(cftest::read_file(tmp / "a.jsonl") == cftest::read_file(tmp / "b.jsonl"));
    CHECK(build_index(tmp / "a.jsonl").size() == 200);

    SyntheticCorpusSpec sized{1000000, 10, 20, 100, 1, 0, 50000};
    const auto c = generate_synthetic_corpus(tmp / "c.jsonl", sized);
    CHECK(c.bytes >= 50000);
    CHECK(c.bytes < 50000 + 2000);
  }

  TEST_CASE("learned BPE tables load and round-trip text") {
    cftest::TempDir tmp;
    const auto lexicon = synthetic_lexicon(200, 1);
    std::vector<std::string> texts;
    for (std::size_t i = 0; i + 5 < lexicon.size(); i += 5)
      texts.push_back(lexicon[i] + " " + lexicon[i + 1] + " " + lexicon[i + 2]);
    const auto tables = learn_bpe_tables(texts, 60, {"<eod>"});
    CHECK(tables.merges.merges.size() == 60);
    write_bpe_tables(tables, tmp / "v.txt", tmp / "m.txt");
    TokenizerSpec spec;
    spec.kind = TokenizerKind::Bpe;
    spec.vocab_path = tmp / "v.txt";
    spec.merges_path = tmp / "m.txt";
    const auto tok = load_tokenizer(spec);
    for (const auto& t : texts) {
      const auto ids = tok->encode(t);
      CHECK(ids.size() < t.size());
      CHECK(tok->decode(ids) == t);
    }
  }

  TEST_CASE("bench_pipeline conserves documents and writes the CSV header") {
    cftest::TempDir tmp;
    const auto raw = tmp / "b.jsonl";
    const auto info = generate_synthetic_corpus(raw, SyntheticCorpusSpec{150, 1, 20, 100, 2, 0, 0});
    std::vector<PipelineConfig> sweep(2);
    sweep[0].workers = 1;
    sweep[1].workers = 2;
    const auto rows = bench_pipeline(raw, build_index(raw), ByteTokenizer(256), sweep, tmp / "work");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].stats.documents == info.lines);
    CHECK(rows[1].stats.tokens == rows[0].stats.tokens);
    const auto csv = bench_csv(rows);
    CHECK(csv.rfind("workers,batch_size,queue_capacity,documents,tokens,seconds,tokens_per_sec\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  }
}
