#include "corpusforge/tokenize_pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "json.hpp"

#include "corpusforge/bounded_queue.hpp"
#include "corpusforge/mapped_file.hpp"
#include "corpusforge/packed_data.hpp"

namespace corpusforge {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// Caps the number of batches issued by the reader but not yet written.
class InFlightWindow {
 public:
  explicit InFlightWindow(std::size_t limit) : limit_(limit) {}

  bool acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return cancelled_ || in_flight_ < limit_; });
    if (cancelled_) return false;
    ++in_flight_;
    return true;
  }
  void release() {
    {
      std::lock_guard lock(mutex_);
      --in_flight_;
    }
    cv_.notify_one();
  }
  void cancel() {
    {
      std::lock_guard lock(mutex_);
      cancelled_ = true;
    }
    cv_.notify_all();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::size_t limit_;
  std::size_t in_flight_ = 0;
  bool cancelled_ = false;
};

// First failure wins; everybody else is told to stop.
class FailureLatch {
 public:
  template <class F>
  void fail(F&& stop_all) {
    std::lock_guard lock(mutex_);
    if (!error_) error_ = std::current_exception();
    stop_all();
  }
  std::exception_ptr error() const {
    std::lock_guard lock(mutex_);
    return error_;
  }

 private:
  mutable std::mutex mutex_;
  std::exception_ptr error_;
};

}  // namespace

std::size_t default_worker_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 3 ? hw - 2 : 1;
}

std::size_t PipelineConfig::effective_max_reorder() const {
  if (max_reorder != 0) return max_reorder;
  return std::max(4 * queue_capacity, 2 * workers);
}

void PipelineConfig::validate() const {
  if (workers < 1) throw InvalidArgument("workers must be >= 1");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (queue_capacity < 1) throw InvalidArgument("queue_capacity must be >= 1");
  if (out_path.empty()) throw InvalidArgument("out_path must be set");
}

ExtractResult extract_text(std::string_view raw, std::string_view key) {
  ExtractResult r;
  const auto doc = nlohmann::json::parse(raw.begin(), raw.end(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    r.status = ExtractStatus::Malformed;
    return r;
  }
  const auto it = doc.find(key);
  if (it == doc.end()) {
    r.status = ExtractStatus::MissingKey;
  } else if (!it->is_string()) {
    r.status = ExtractStatus::NotString;
  } else {
    r.status = ExtractStatus::Ok;
    r.text = it->get<std::string>();
  }
  return r;
}

PipelineStats run_pipeline(const std::filesystem::path& raw_path, const DocumentIndex& index,
                           const Tokenizer& tokenizer, const PipelineConfig& cfg, const PipelineHooks& hooks) {
  cfg.validate();
  if (verify_index(index, raw_path) == IndexStatus::Stale)
    throw StaleIndexError("index of " + raw_path.string() + " is stale (source size changed)");

  const auto start = Clock::now();
  const MappedFile raw(raw_path);
  const std::size_t reorder_cap = cfg.effective_max_reorder();
  const unsigned width = token_width_for(tokenizer.vocab_size());
  const std::optional<TokenId> eod = cfg.append_eod ? tokenizer.eod_token_id() : std::nullopt;
  if (cfg.append_eod && !eod) spdlog::warn("append_eod is set but the tokenizer has no eod_token_id");

  BoundedQueue<RawBatch> work(cfg.queue_capacity);
  BoundedQueue<TokenBatch> output(cfg.queue_capacity, cfg.workers);
  InFlightWindow window(reorder_cap + 1);
  FailureLatch latch;
  auto stop_all = [&] {
    work.close();
    output.close();
    window.cancel();
  };

  PipelineStats stats;
  std::mutex stats_mutex;
  auto writer = std::make_unique<PackedWriter>(cfg.out_path, width);

  std::thread reader_thread([&] {
    double idle = 0;
    const auto t0 = Clock::now();
    try {
      const auto& spans = index.spans;
      std::uint64_t seq = 0;
      for (std::size_t first = 0; first < spans.size(); first += cfg.batch_size) {
        const std::size_t last = std::min(spans.size(), first + cfg.batch_size);
        RawBatch batch;
        batch.seq_no = seq++;
        batch.first_ordinal = first;
        const std::uint64_t lo = spans[first].byte_offset;
        const std::uint64_t hi = spans[last - 1].byte_offset + spans[last - 1].byte_length;
        if (hi - lo > 0xFFFFFFFFu) throw InvalidArgument("batch exceeds 4 GiB; lower batch_size");
        batch.bytes.assign(reinterpret_cast<const char*>(raw.data() + lo), hi - lo);
        batch.docs.reserve(last - first);
        for (std::size_t i = first; i < last; ++i)
          batch.docs.emplace_back(static_cast<std::uint32_t>(spans[i].byte_offset - lo),
                                  static_cast<std::uint32_t>(spans[i].byte_length));
        const auto w0 = Clock::now();
        const bool ok = window.acquire() && work.push(std::move(batch));
        idle += seconds_since(w0);
        if (!ok) break;
      }
    } catch (...) {
      latch.fail(stop_all);
    }
    work.close();
    std::lock_guard lock(stats_mutex);
    stats.reader.idle_seconds = idle;
    stats.reader.busy_seconds = seconds_since(t0) - idle;
  });

  std::vector<std::thread> workers;
  workers.reserve(cfg.workers);
  for (std::size_t w = 0; w < cfg.workers; ++w) {
    workers.emplace_back([&] {
      double idle = 0;
      const auto t0 = Clock::now();
      try {
        for (;;) {
          auto w0 = Clock::now();
          std::optional<RawBatch> in = work.pop();
          idle += seconds_since(w0);
          if (!in) break;
          if (hooks.before_tokenize) hooks.before_tokenize(in->seq_no);

          TokenBatch out;
          out.seq_no = in->seq_no;
          out.ordinals.reserve(in->docs.size());
          out.lengths.reserve(in->docs.size());
          for (std::size_t k = 0; k < in->docs.size(); ++k) {
            const auto [off, len] = in->docs[k];
            ExtractResult ex = extract_text(std::string_view(in->bytes).substr(off, len), cfg.text_key);
            if (!ex.ok()) {
              (ex.status == ExtractStatus::Malformed ? out.malformed : out.missing_text) += 1;
              continue;
            }
            const std::size_t before = out.tokens.size();
            tokenizer.encode_into(ex.text, out.tokens);
            if (out.tokens.size() == before) {
              ++out.empty;
              continue;
            }
            if (eod) out.tokens.push_back(*eod);
            out.ordinals.push_back(in->first_ordinal + k);
            out.lengths.push_back(out.tokens.size() - before);
          }
          w0 = Clock::now();
          const bool ok = output.push(std::move(out));
          idle += seconds_since(w0);
          if (!ok) break;
        }
      } catch (...) {
        latch.fail(stop_all);
      }
      output.close_producer();
      std::lock_guard lock(stats_mutex);
      stats.workers.idle_seconds += idle;
      stats.workers.busy_seconds += seconds_since(t0) - idle;
    });
  }

  std::thread writer_thread([&] {
    double idle = 0;
    const auto t0 = Clock::now();
    std::uint64_t next_seq = 0;
    std::uint64_t last_ordinal_plus_one = 0;
    std::map<std::uint64_t, TokenBatch> pending;
    std::size_t reorder_high = 0;
    PipelineStats local;
    try {
      auto write = [&](TokenBatch& b) {
        if (hooks.before_write) hooks.before_write(b.seq_no);
        std::size_t at = 0;
        for (std::size_t k = 0; k < b.lengths.size(); ++k) {
          if (b.ordinals[k] < last_ordinal_plus_one) throw Error("document order violated in writer");
          last_ordinal_plus_one = b.ordinals[k] + 1;
          writer->append_document(std::span<const TokenId>(b.tokens).subspan(at, b.lengths[k]));
          at += b.lengths[k];
        }
        local.documents += b.lengths.size();
        local.tokens += b.tokens.size();
        local.malformed += b.malformed;
        local.missing_text += b.missing_text;
        local.empty += b.empty;
        ++local.batches;
        window.release();
      };
      for (;;) {
        const auto w0 = Clock::now();
        std::optional<TokenBatch> in = output.pop();
        idle += seconds_since(w0);
        if (!in) break;
        if (in->seq_no == next_seq) {
          write(*in);
          ++next_seq;
          for (auto it = pending.find(next_seq); it != pending.end(); it = pending.find(next_seq)) {
            write(it->second);
            pending.erase(it);
            ++next_seq;
          }
        } else {
          pending.emplace(in->seq_no, std::move(*in));
          reorder_high = std::max(reorder_high, pending.size());
          if (pending.size() > reorder_cap)
            throw ReorderOverflowError("reorder buffer exceeded " + std::to_string(reorder_cap) +
                                       " batches while waiting for batch " + std::to_string(next_seq));
        }
      }
      if (!pending.empty() && !latch.error())
        throw Error("pipeline ended with " + std::to_string(pending.size()) + " batches missing their predecessors");
    } catch (...) {
      latch.fail(stop_all);
    }
    std::lock_guard lock(stats_mutex);
    stats.documents = local.documents;
    stats.tokens = local.tokens;
    stats.malformed = local.malformed;
    stats.missing_text = local.missing_text;
    stats.empty = local.empty;
    stats.batches = local.batches;
    stats.reorder_high_water = reorder_high;
    stats.writer.idle_seconds = idle;
    stats.writer.busy_seconds = seconds_since(t0) - idle;
  });

  reader_thread.join();
  for (auto& t : workers) t.join();
  writer_thread.join();

  if (auto err = latch.error()) {
    writer.reset();
    std::error_code ec;
    std::filesystem::remove(cfg.out_path, ec);
    std::rethrow_exception(err);
  }
  writer->finish();

  stats.skipped = stats.malformed + stats.missing_text + stats.empty;
  stats.work_queue_high_water = work.high_water();
  stats.output_queue_high_water = output.high_water();
  stats.elapsed_seconds = seconds_since(start);
  stats.tokens_per_second = stats.elapsed_seconds > 0 ? static_cast<double>(stats.tokens) / stats.elapsed_seconds : 0;
  if (stats.malformed > 0) spdlog::info("{}: skipped {} malformed documents", raw_path.string(), stats.malformed);
  return stats;
}

}  // namespace corpusforge
