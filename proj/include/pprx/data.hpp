#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pprx/classifier.hpp"
#include "pprx/embeddings.hpp"
#include "pprx/errors.hpp"
#include "pprx/explain.hpp"
#include "pprx/parallel.hpp"
#include "pprx/textgraph.hpp"

namespace pprx {

struct NewsRecord {
  std::string title;
  std::string text;
  std::string subject;
  std::string date;
  int label = kLabelReal;

  // Pipeline input: title and body joined by a space.
  std::string article() const { return title + " " + text; }
  bool operator==(const NewsRecord&) const = default;
};

// ---------------------------------------------------------------------------
// RFC 4180 CSV

// Parses a whole CSV document into rows of fields. Quoted fields may contain
// commas, doubled quotes and line breaks; CRLF and LF both end a record.
// Errors carry the 1-based record number where the bad row starts.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view input) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  std::size_t record = 1;
  std::size_t i = 0;
  bool any = false;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_record = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
    ++record;
    any = false;
  };

  while (i < input.size()) {
    const char c = input[i];
    if (c == '"' && field.empty() && !any) {
      // Quoted field.
      const std::size_t start_record = record;
      ++i;
      for (;;) {
        if (i >= input.size())
          throw Error(ErrorKind::Corpus, "row " + std::to_string(start_record) + ": unterminated quoted field");
        if (input[i] == '"') {
          if (i + 1 < input.size() && input[i + 1] == '"') {
            field.push_back('"');
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        field.push_back(input[i++]);
      }
      any = true;
      if (i < input.size() && input[i] != ',' && input[i] != '\n' && input[i] != '\r')
        throw Error(ErrorKind::Corpus, "row " + std::to_string(start_record) + ": unexpected character after quoted field");
      continue;
    }
    if (c == ',') {
      end_field();
      any = false;
      ++i;
    } else if (c == '\r' || c == '\n') {
      end_record();
      i += (c == '\r' && i + 1 < input.size() && input[i + 1] == '\n') ? 2 : 1;
    } else {
      field.push_back(c);
      any = true;
      ++i;
    }
  }
  if (any || !row.empty()) end_record();
  return rows;
}

inline std::string csv_escape(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline const char* const kCorpusHeader[] = {"title", "text", "subject", "date"};

struct Corpus {
  std::vector<NewsRecord> records;
  std::size_t dropped = 0;  // rows whose title + text has no word characters
};

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Corpus, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline bool has_words(const std::string& text) {
  try {
    (void)tokenize(text);
    return true;
  } catch (const Error&) {
    return false;
  }
}

inline void load_csv_records(const std::filesystem::path& path, int label, Corpus& corpus) {
  std::vector<std::vector<std::string>> rows;
  try {
    rows = parse_csv(read_file(path));
  } catch (const Error& e) {
    throw Error(ErrorKind::Corpus, path.filename().string() + ": " + e.what());
  }
  if (rows.empty()) throw Error(ErrorKind::Corpus, path.filename().string() + ": missing header");
  auto& header = rows.front();
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
  if (header.size() != 4 || !std::equal(header.begin(), header.end(), std::begin(kCorpusHeader)))
    throw Error(ErrorKind::Corpus, path.filename().string() + ": header must be title,text,subject,date");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    auto& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;  // blank line
    if (row.size() != 4)
      throw Error(ErrorKind::Corpus, path.filename().string() + ": row " + std::to_string(r + 1) + " has " +
                                         std::to_string(row.size()) + " fields, expected 4");
    NewsRecord rec{std::move(row[0]), std::move(row[1]), std::move(row[2]), std::move(row[3]), label};
    if (!has_words(rec.article())) {
      ++corpus.dropped;
      continue;
    }
    corpus.records.push_back(std::move(rec));
  }
}

}  // namespace detail

// Reads Fake.csv (label fake) then True.csv (label real) from `dir`.
inline Corpus load_corpus(const std::filesystem::path& dir) {
  Corpus corpus;
  for (auto [name, label] : {std::pair{"Fake.csv", kLabelFake}, std::pair{"True.csv", kLabelReal}}) {
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) throw Error(ErrorKind::Corpus, "missing corpus file '" + path.string() + "'");
    detail::load_csv_records(path, label, corpus);
  }
  return corpus;
}

inline void write_corpus(const std::filesystem::path& dir, std::span<const NewsRecord> records) {
  std::filesystem::create_directories(dir);
  for (auto [name, label] : {std::pair{"Fake.csv", kLabelFake}, std::pair{"True.csv", kLabelReal}}) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + (dir / name).string() + "'");
    out << "title,text,subject,date\n";
    for (const auto& r : records)
      if (r.label == label)
        out << csv_escape(r.title) << ',' << csv_escape(r.text) << ',' << csv_escape(r.subject) << ','
            << csv_escape(r.date) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Splits and metrics

template <class T>
struct Split {
  std::vector<T> train;
  std::vector<T> test;
};

// Seeded shuffle, then the first floor(n * test_fraction) items form the test
// set. Both classes must remain in the training part. T needs a `label` member.
template <class T>
Split<T> split(std::span<const T> items, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw Error(ErrorKind::InvalidArgument, "test fraction must lie in (0, 1)");
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 engine(seed);
  std::shuffle(order.begin(), order.end(), engine);
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(items.size()) * test_fraction));
  Split<T> out;
  out.test.reserve(n_test);
  out.train.reserve(items.size() - n_test);
  for (std::size_t k = 0; k < order.size(); ++k) (k < n_test ? out.test : out.train).push_back(items[order[k]]);
  bool seen[kNumClasses] = {false, false};
  for (const auto& item : out.train) seen[item.label] = true;
  if (!seen[kLabelReal] || !seen[kLabelFake])
    throw Error(ErrorKind::MissingClass, "training split lacks one of the classes");
  return out;
}

template <class T>
Split<T> split(const std::vector<T>& items, double test_fraction, std::uint64_t seed) {
  return split(std::span<const T>(items), test_fraction, seed);
}

struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::uint64_t seed = 0;
};

// Positive class is fake; zero denominators give 0.
inline MetricsReport compute_metrics(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size())
    throw Error(ErrorKind::LengthMismatch, std::to_string(predictions.size()) + " predictions vs " +
                                               std::to_string(labels.size()) + " labels");
  if (predictions.empty()) throw Error(ErrorKind::LengthMismatch, "no predictions");
  std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred_fake = predictions[i] == kLabelFake;
    const bool is_fake = labels[i] == kLabelFake;
    if (pred_fake == is_fake) ++correct;
    if (pred_fake && is_fake) ++tp;
    if (pred_fake && !is_fake) ++fp;
    if (!pred_fake && is_fake) ++fn;
  }
  auto ratio = [](std::size_t num, std::size_t den) { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); };
  MetricsReport m;
  m.accuracy = ratio(correct, labels.size());
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  m.n_test = labels.size();
  return m;
}

inline nlohmann::json metrics_to_json(const MetricsReport& m) {
  return {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
          {"n_train", m.n_train},   {"n_test", m.n_test},       {"seed", m.seed}};
}

// ---------------------------------------------------------------------------
// Feature extraction and the train/evaluate protocol

inline std::vector<LabeledEmbedding> featurize(std::span<const NewsRecord> records, const EmbeddingStore& store,
                                               const PipelineConfig& pipeline, unsigned workers = 1) {
  std::vector<LabeledEmbedding> out(records.size());
  parallel_for(records.size(), workers, [&](std::size_t i) {
    out[i] = LabeledEmbedding{embed_text(records[i].article(), store, pipeline), records[i].label};
  });
  return out;
}

inline PipelineConfig pipeline_for(const EmbeddingStore& store) {
  PipelineConfig p;
  p.dim = store.dim();
  p.embedding_source = store.source_meta();
  p.fallback_seed = store.fallback_seed();
  return p;
}

struct TrainOutcome {
  MlpModel model;
  MetricsReport metrics;  // on the held-out part
};

inline MetricsReport evaluate(const MlpModel& model, std::span<const LabeledEmbedding> test) {
  std::vector<int> preds, labels;
  preds.reserve(test.size());
  labels.reserve(test.size());
  for (const auto& ex : test) {
    preds.push_back(predict(model, ex.embedding).argmax());
    labels.push_back(ex.label);
  }
  return compute_metrics(preds, labels);
}

// One run of the protocol on pre-extracted features: seeded split, train on
// the training part (initialization seeded identically), score the rest.
inline TrainOutcome train_and_evaluate(std::span<const LabeledEmbedding> features, const PipelineConfig& pipeline,
                                       double test_fraction, std::uint64_t seed, TrainConfig cfg) {
  const auto parts = split(features, test_fraction, seed);
  cfg.rng_seed = seed;
  TrainOutcome out{train(parts.train, cfg, pipeline), {}};
  if (!parts.test.empty()) out.metrics = evaluate(out.model, parts.test);
  out.metrics.n_train = parts.train.size();
  out.metrics.n_test = parts.test.size();
  out.metrics.seed = seed;
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic two-distribution corpus for desk-scale runs without ISOT.

struct SyntheticCorpusConfig {
  std::size_t per_class = 1000;
  std::size_t shared_vocab = 600;
  std::size_t topic_vocab = 30;    // per class
  double topic_rate = 0.25;        // share of tokens drawn from a topic list
  double cross_topic = 0.25;       // share of topic tokens taken from the other class's list
  std::size_t min_length = 60;
  std::size_t max_length = 180;
  std::uint64_t seed = 7;
};

namespace detail {

inline std::string synthetic_word(std::uint64_t id, char prefix) {
  static constexpr const char* kSyllables[] = {"ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo",
                                               "ze", "pa", "do", "gi", "hu", "ber", "tan", "qua"};
  std::string w(1, prefix);
  do {
    w += kSyllables[id % 16];
    id /= 16;
  } while (id != 0);
  return w;
}

}  // namespace detail

// Articles over a Zipf-distributed shared vocabulary, with a fraction of
// tokens drawn from class-leaning topic words. Deterministic per seed.
inline std::vector<NewsRecord> synthetic_corpus(const SyntheticCorpusConfig& cfg = {}) {
  std::mt19937_64 engine(cfg.seed);
  std::vector<double> zipf(cfg.shared_vocab);
  for (std::size_t r = 0; r < zipf.size(); ++r) zipf[r] = 1.0 / static_cast<double>(r + 1);
  std::discrete_distribution<std::size_t> shared(zipf.begin(), zipf.end());
  std::uniform_int_distribution<std::size_t> topic(0, cfg.topic_vocab - 1);
  std::uniform_int_distribution<std::size_t> length(cfg.min_length, cfg.max_length);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  static constexpr const char* kSubjects[] = {"politicsNews", "worldnews", "News", "politics"};

  std::vector<NewsRecord> out;
  out.reserve(cfg.per_class * 2);
  for (std::size_t k = 0; k < cfg.per_class * 2; ++k) {
    const int label = static_cast<int>(k % 2);
    auto draw = [&]() {
      if (unit(engine) < cfg.topic_rate) {
        const bool own = unit(engine) >= cfg.cross_topic;
        const int cls = own ? label : 1 - label;
        return detail::synthetic_word(topic(engine), cls == kLabelFake ? 'f' : 'r');
      }
      return detail::synthetic_word(shared(engine), 's');
    };
    NewsRecord rec;
    rec.label = label;
    for (int t = 0; t < 6; ++t) rec.title += (t ? " " : "") + draw();
    const std::size_t len = length(engine);
    for (std::size_t t = 0; t < len; ++t) {
      rec.text += draw();
      rec.text += (t + 1) % 12 == 0 ? ". " : " ";
    }
    rec.subject = kSubjects[k % 4];
    rec.date = "2017-01-" + std::to_string(1 + k % 28);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace pprx
