#include "mrsc/eval/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <optional>
#include <set>

#include "mrsc/error.hpp"

namespace mrsc::eval {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "seed",
      "corpus.classes", "corpus.sentences_per_class", "corpus.seed", "corpus.test_fraction",
      "corpus.kind", "corpus.dir",
      "arch.d_model", "arch.n_layers", "arch.n_heads", "arch.d_attn", "arch.d_ff", "arch.n_ce",
      "arch.n_cd", "arch.slot_len",
      "train.lr", "train.batch_size", "train.epochs", "train.snr_low_db", "train.snr_high_db",
      "train.clip_norm", "train.loss_threshold", "train.insert_sep", "train.stop_at_threshold",
      "train.validate_sentences", "train.validate_snr_db",
      "channel.kind", "channel.fading_group",
      "transfer.channel", "transfer.epochs", "transfer.copy_init",
      "recognizer.d_model", "recognizer.n_layers", "recognizer.n_heads", "recognizer.d_ff",
      "recognizer.lr", "recognizer.epochs", "recognizer.batch_size", "recognizer.clip_norm",
      "sweep.snr_db", "sweep.users", "sweep.users_snr_db", "sweep.users_channel",
      "sweep.users_sentences_per_class", "sweep.rx1_channel", "sweep.rx2_channel",
      "sweep.max_rows", "sweep.route", "sweep.ber_bits",
      "baseline.block_bits", "baseline.iterations", "baseline.interleaver_seed",
      "eval.batch_size",
  };
  return keys;
}

std::string num(double v) { return format_number(v); }

std::string list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
  return s;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

CorpusKind resolve_kind(const std::string& kind, int classes) {
  if (kind == "sentiment") return CorpusKind::kSentiment;
  if (kind == "topic") return CorpusKind::kTopic;
  if (kind == "auto") return classes == 2 ? CorpusKind::kSentiment : CorpusKind::kTopic;
  throw ConfigError("corpus.kind must be sentiment, topic or auto, got '" + kind + "'");
}

}  // namespace

ExperimentConfig ExperimentConfig::from(const ConfigFile& f) {
  f.reject_unknown(known_keys());
  ExperimentConfig c;
  c.seed = f.get_u64("seed", c.seed);

  auto& co = c.corpus;
  co.classes = static_cast<int>(f.get_size("corpus.classes", static_cast<std::size_t>(co.classes)));
  co.sentences_per_class = f.get_size("corpus.sentences_per_class", co.sentences_per_class);
  co.seed = f.get_u64("corpus.seed", co.seed);
  co.test_fraction = f.get_double("corpus.test_fraction", co.test_fraction);
  co.kind = f.get_string("corpus.kind", co.kind);
  co.dir = f.get_string("corpus.dir", co.dir);
  if (co.classes < 2 || co.classes > 7) throw ConfigError("corpus.classes must be in [2,7]");
  if (!(co.test_fraction > 0.0 && co.test_fraction < 1.0))
    throw ConfigError("corpus.test_fraction must be in (0,1)");

  auto& a = c.arch;
  a.d_model = f.get_size("arch.d_model", a.d_model);
  a.d_attn = f.get_size("arch.d_attn", a.d_model);
  a.n_layers = f.get_size("arch.n_layers", a.n_layers);
  a.n_heads = f.get_size("arch.n_heads", a.n_heads);
  a.d_ff = f.get_size("arch.d_ff", a.d_ff);
  a.n_ce = f.get_size("arch.n_ce", a.n_ce);
  a.n_cd = f.get_size("arch.n_cd", a.n_cd);
  a.slot_len = f.get_size("arch.slot_len", a.slot_len);

  auto& t = c.train;
  t.lr = f.get_double("train.lr", t.lr);
  t.batch_size = f.get_size("train.batch_size", t.batch_size);
  t.epochs = f.get_size("train.epochs", t.epochs);
  t.snr_low_db = f.get_double("train.snr_low_db", t.snr_low_db);
  t.snr_high_db = f.get_double("train.snr_high_db", t.snr_high_db);
  t.clip_norm = f.get_double("train.clip_norm", t.clip_norm);
  t.loss_threshold = f.get_double("train.loss_threshold", t.loss_threshold);
  t.insert_sep = f.get_bool("train.insert_sep", t.insert_sep);
  t.stop_at_threshold = f.get_bool("train.stop_at_threshold", t.stop_at_threshold);
  t.validate_sentences = f.get_size("train.validate_sentences", t.validate_sentences);
  t.validate_snr_db = f.get_double("train.validate_snr_db", t.validate_snr_db);
  t.channel = channel_kind_from(f.get_string("channel.kind", to_string(t.channel)));
  t.fading_group = f.get_size("channel.fading_group", t.fading_group);
  t.validate();

  c.transfer.channel = channel_kind_from(f.get_string("transfer.channel", to_string(c.transfer.channel)));
  c.transfer.epochs = f.get_size("transfer.epochs", c.transfer.epochs);
  c.transfer.copy_init = f.get_bool("transfer.copy_init", c.transfer.copy_init);

  auto& r = c.recognizer;
  r.d_model = f.get_size("recognizer.d_model", r.d_model);
  r.n_layers = f.get_size("recognizer.n_layers", r.n_layers);
  r.n_heads = f.get_size("recognizer.n_heads", r.n_heads);
  r.d_ff = f.get_size("recognizer.d_ff", r.d_ff);
  r.lr = f.get_double("recognizer.lr", r.lr);
  r.epochs = f.get_size("recognizer.epochs", r.epochs);
  r.batch_size = f.get_size("recognizer.batch_size", r.batch_size);
  r.clip_norm = f.get_double("recognizer.clip_norm", r.clip_norm);

  auto& s = c.sweep;
  s.snr_db = f.get_list("sweep.snr_db", s.snr_db);
  s.users = f.get_list("sweep.users", s.users);
  for (double k : s.users)
    if (k != std::floor(k) || k < 2 || k > 7)
      throw ConfigError("sweep.users entries must be integers in [2,7], got " + num(k));
  s.users_snr_db = f.get_double("sweep.users_snr_db", s.users_snr_db);
  s.users_channel = channel_kind_from(f.get_string("sweep.users_channel", to_string(s.users_channel)));
  s.users_sentences_per_class = f.get_size("sweep.users_sentences_per_class", s.users_sentences_per_class);
  s.rx1_channel = channel_kind_from(f.get_string("sweep.rx1_channel", to_string(s.rx1_channel)));
  s.rx2_channel = channel_kind_from(f.get_string("sweep.rx2_channel", to_string(s.rx2_channel)));
  s.max_rows = f.get_size("sweep.max_rows", s.max_rows);
  s.route = f.get_bool("sweep.route", s.route);
  s.ber_bits = f.get_u64("sweep.ber_bits", s.ber_bits);

  c.baseline.block_bits = f.get_size("baseline.block_bits", c.baseline.block_bits);
  c.baseline.iterations = static_cast<int>(f.get_size("baseline.iterations", 5));
  c.baseline.interleaver_seed = f.get_u64("baseline.interleaver_seed", c.baseline.interleaver_seed);
  c.eval_batch = f.get_size("eval.batch_size", c.eval_batch);
  if (c.eval_batch == 0) throw ConfigError("eval.batch_size must be positive");

  c.set_seed(c.seed);
  return c;
}

void ExperimentConfig::set_seed(std::uint64_t s) {
  seed = s;
  train.seed = s;
  recognizer.seed = mix(s, 1);
}

std::map<std::string, std::string> ExperimentConfig::to_map() const {
  std::map<std::string, std::string> m;
  m["seed"] = std::to_string(seed);
  m["corpus.classes"] = std::to_string(corpus.classes);
  m["corpus.sentences_per_class"] = std::to_string(corpus.sentences_per_class);
  m["corpus.seed"] = std::to_string(corpus.seed);
  m["corpus.test_fraction"] = num(corpus.test_fraction);
  m["corpus.kind"] = corpus.kind;
  m["corpus.dir"] = corpus.dir;
  m["arch.d_model"] = std::to_string(arch.d_model);
  m["arch.d_attn"] = std::to_string(arch.d_attn);
  m["arch.n_layers"] = std::to_string(arch.n_layers);
  m["arch.n_heads"] = std::to_string(arch.n_heads);
  m["arch.d_ff"] = std::to_string(arch.d_ff);
  m["arch.n_ce"] = std::to_string(arch.n_ce);
  m["arch.n_cd"] = std::to_string(arch.n_cd);
  m["arch.slot_len"] = std::to_string(arch.slot_len);
  m["train.lr"] = num(train.lr);
  m["train.batch_size"] = std::to_string(train.batch_size);
  m["train.epochs"] = std::to_string(train.epochs);
  m["train.snr_low_db"] = num(train.snr_low_db);
  m["train.snr_high_db"] = num(train.snr_high_db);
  m["train.clip_norm"] = num(train.clip_norm);
  m["train.loss_threshold"] = num(train.loss_threshold);
  m["train.insert_sep"] = train.insert_sep ? "true" : "false";
  m["train.stop_at_threshold"] = train.stop_at_threshold ? "true" : "false";
  m["train.validate_sentences"] = std::to_string(train.validate_sentences);
  m["train.validate_snr_db"] = num(train.validate_snr_db);
  m["channel.kind"] = to_string(train.channel);
  m["channel.fading_group"] = std::to_string(train.fading_group);
  m["transfer.channel"] = to_string(transfer.channel);
  m["transfer.epochs"] = std::to_string(transfer.epochs);
  m["transfer.copy_init"] = transfer.copy_init ? "true" : "false";
  m["recognizer.d_model"] = std::to_string(recognizer.d_model);
  m["recognizer.n_layers"] = std::to_string(recognizer.n_layers);
  m["recognizer.n_heads"] = std::to_string(recognizer.n_heads);
  m["recognizer.d_ff"] = std::to_string(recognizer.d_ff);
  m["recognizer.lr"] = num(recognizer.lr);
  m["recognizer.epochs"] = std::to_string(recognizer.epochs);
  m["recognizer.batch_size"] = std::to_string(recognizer.batch_size);
  m["recognizer.clip_norm"] = num(recognizer.clip_norm);
  m["sweep.snr_db"] = list(sweep.snr_db);
  m["sweep.users"] = list(sweep.users);
  m["sweep.users_snr_db"] = num(sweep.users_snr_db);
  m["sweep.users_channel"] = to_string(sweep.users_channel);
  m["sweep.users_sentences_per_class"] = std::to_string(sweep.users_sentences_per_class);
  m["sweep.rx1_channel"] = to_string(sweep.rx1_channel);
  m["sweep.rx2_channel"] = to_string(sweep.rx2_channel);
  m["sweep.max_rows"] = std::to_string(sweep.max_rows);
  m["sweep.route"] = sweep.route ? "true" : "false";
  m["sweep.ber_bits"] = std::to_string(sweep.ber_bits);
  m["baseline.block_bits"] = std::to_string(baseline.block_bits);
  m["baseline.iterations"] = std::to_string(baseline.iterations);
  m["baseline.interleaver_seed"] = std::to_string(baseline.interleaver_seed);
  m["baseline.encoder2"] = "unterminated, fed zeros during encoder-1 tail";
  m["eval.batch_size"] = std::to_string(eval_batch);
  return m;
}

Dataset make_dataset(const CorpusSettings& s) {
  Dataset d;
  Corpus all;
  if (!s.dir.empty()) {
    all = read_corpus_dir(s.dir, &d.class_names);
    d.kind = d.class_names.size() == 2 ? CorpusKind::kSentiment : CorpusKind::kTopic;
  } else {
    d.kind = resolve_kind(s.kind, s.classes);
    d.class_names = class_names(d.kind, s.classes);
    all = gen_corpus(d.kind, s.classes, s.sentences_per_class, s.seed);
  }
  auto split = split_corpus(all, s.test_fraction, mix(s.seed, 2));
  d.train = std::move(split.train);
  d.test = std::move(split.test);
  d.vocab = build_vocab(all);
  return d;
}

ArchConfig resolve_arch(const ExperimentConfig& cfg, const Dataset& data) {
  ArchConfig a = cfg.arch;
  a.users = data.class_names.size();
  a.vocab_size = data.vocab.size();
  a.validate();
  return a;
}

RecognizerConfig resolve_recognizer(const ExperimentConfig& cfg, const Dataset& data) {
  RecognizerConfig r = cfg.recognizer;
  r.classes = data.class_names.size();
  r.vocab_size = data.vocab.size();
  r.slot_len = cfg.arch.slot_len;
  return r;
}

TrainOutcome train_system(const ExperimentConfig& cfg, const Dataset& data, ParamStore& store,
                          std::ostream* log) {
  TrainOutcome out;
  const ArchConfig arch = resolve_arch(cfg, data);
  const Corpus* val = cfg.train.validate_sentences ? &data.test : nullptr;
  out.history = train_phase1(data.train, data.vocab, arch, cfg.train, store, val);
  if (log) {
    *log << "phase 1: initial loss " << out.history.initial_loss << ", final loss "
         << (out.history.loss.empty() ? out.history.initial_loss : out.history.loss.back())
         << " after " << out.history.loss.size() << " epochs\n";
  }
  const RecognizerConfig rc = resolve_recognizer(cfg, data);
  out.recognizer = train_recognizer(data.train, data.vocab, rc, store);
  std::mt19937_64 rng(rc.seed);
  const Recognizer rec(rc, store, rng);
  out.recognizer_accuracy = recognizer_accuracy(rec, data.test, data.vocab);
  if (log) *log << "recognizer: held-out accuracy " << out.recognizer_accuracy << "\n";
  return out;
}

void save_vocab(const std::filesystem::path& file, const Vocabulary& vocab) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + file.string());
  for (std::size_t i = kNumReserved; i < vocab.size(); ++i)
    out << vocab.word(static_cast<std::int32_t>(i)) << '\n';
}

Vocabulary load_vocab(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("missing vocabulary file " + file.string());
  Vocabulary v;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) v.add(line);
  return v;
}

void save_model(const std::filesystem::path& dir, const ParamStore& store,
                const Vocabulary& vocab) {
  std::filesystem::create_directories(dir);
  // write-then-rename so an interrupted run never leaves a torn checkpoint
  const auto tmp = dir / "model.mrsc.tmp";
  save_params(store, tmp);
  std::filesystem::rename(tmp, dir / "model.mrsc");
  save_vocab(dir / "vocab.txt", vocab);
}

ParamStore load_model_params(const std::filesystem::path& dir) {
  const auto file = dir / "model.mrsc";
  if (!std::filesystem::exists(file))
    throw ConfigError("missing checkpoint " + file.string() + " (run `train` first)");
  return load_params(file);
}

bool has_receiver(const ParamStore& store, int user) {
  return store.contains(receiver_prefix_chi(user) + "/dense1/w") &&
         store.contains(receiver_prefix_delta(user) + "/out/w");
}

bool has_recognizer(const ParamStore& store) { return store.contains("recognizer/head/w"); }

SemanticEval evaluate_semantic(ParamStore& store, const ArchConfig& arch, int receiver_user,
                               const Recognizer* recognizer, const Corpus& test,
                               const Vocabulary& vocab, const ChannelConfig& channel,
                               std::size_t batch_size, std::uint64_t seed, std::size_t max_rows) {
  if (!store.contains("alpha/embedding") || !has_receiver(store, receiver_user))
    throw ConfigError("checkpoint has no trained transmitter/receiver " +
                      std::to_string(receiver_user));
  std::mt19937_64 rng(seed);
  const Transmitter tx(arch, store, rng);
  const Receiver rx(arch, store, receiver_user, rng);
  const std::size_t K = arch.users;

  std::size_t per_class = test.size();
  for (std::size_t c = 0; c < K; ++c)
    per_class = std::min<std::size_t>(
        per_class, static_cast<std::size_t>(std::count_if(
                       test.begin(), test.end(),
                       [c](const LabeledSentence& s) { return s.label == static_cast<int>(c); })));
  const BatchOptions opts{std::max<std::size_t>(1, std::min(batch_size, per_class)), arch.slot_len,
                          false};
  const auto batches = make_batches(test, vocab, static_cast<int>(K), opts, seed);

  SemanticEval ev;
  ev.per_class.resize(K);
  ev.correct_delivery.assign(K, 0);
  for (std::size_t bi = 0; bi < batches.size(); ++bi) {
    if (max_rows && ev.rows >= max_rows) break;
    const auto& b = batches[bi];
    ChannelConfig ch = channel;
    ch.seed = mix(channel.seed, bi);
    const auto ids = run_link(tx, rx, TokenBatch::from(b), ch);
    for (std::size_t r = 0; r < b.rows; ++r) {
      if (max_rows && ev.rows >= max_rows) break;
      ++ev.rows;
      const auto sentences = split_slots(std::span(ids).subspan(r * b.width(), b.width()),
                                         arch.slot_len, K, vocab);
      std::vector<Prediction> pred;
      if (recognizer) pred = recognizer->classify(sentences, vocab);
      for (std::size_t c = 0; c < K; ++c) {
        std::size_t ref_slot = 0;
        for (std::size_t s = 0; s < K; ++s)
          if (b.labels[r * K + s] == static_cast<int>(c)) ref_slot = s;
        // pick the most confident slot predicted as class c
        int chosen = -1;
        if (recognizer) {
          double best = -1.0;
          for (std::size_t s = 0; s < K; ++s)
            if (pred[s].label == static_cast<int>(c) && pred[s].confidence > best) {
              best = pred[s].confidence;
              chosen = static_cast<int>(s);
            }
        } else {
          chosen = static_cast<int>(ref_slot);
        }
        const Words candidate = chosen >= 0 ? sentences[static_cast<std::size_t>(chosen)] : Words{};
        ev.per_class[c].add(bleu(candidate, b.references[r * K + ref_slot]));
        if (chosen == static_cast<int>(ref_slot)) ++ev.correct_delivery[c];
      }
    }
  }
  return ev;
}

baseline::ClassicalLink make_classical_link(const ExperimentConfig& cfg, const Dataset& data,
                                            std::size_t users) {
  std::vector<std::string> texts;
  for (const auto* part : {&data.train, &data.test})
    for (const auto& s : *part) texts.push_back(join(s.words));
  return baseline::ClassicalLink(baseline::HuffmanCodebook::from_texts(texts), users,
                                 cfg.baseline.block_bits, cfg.baseline.interleaver_seed,
                                 cfg.baseline.iterations);
}

std::vector<BleuAccumulator> evaluate_classical(const baseline::ClassicalLink& link,
                                                const Corpus& test, const Vocabulary& vocab,
                                                const ChannelConfig& channel,
                                                std::size_t slot_len, std::size_t batch_size,
                                                std::uint64_t seed, std::size_t max_rows) {
  const std::size_t K = link.users();
  std::size_t per_class = test.size();
  for (std::size_t c = 0; c < K; ++c)
    per_class = std::min<std::size_t>(
        per_class, static_cast<std::size_t>(std::count_if(
                       test.begin(), test.end(),
                       [c](const LabeledSentence& s) { return s.label == static_cast<int>(c); })));
  const BatchOptions opts{std::max<std::size_t>(1, std::min(batch_size, per_class)), slot_len,
                          false};
  const auto batches = make_batches(test, vocab, static_cast<int>(K), opts, seed);
  std::vector<BleuAccumulator> acc(K);
  std::size_t rows = 0;
  for (const auto& b : batches)
    for (std::size_t r = 0; r < b.rows; ++r) {
      if (max_rows && rows >= max_rows) return acc;
      std::vector<std::string> msgs(K);
      std::vector<const Words*> refs(K);
      for (std::size_t s = 0; s < K; ++s) {
        const auto c = static_cast<std::size_t>(b.labels[r * K + s]);
        refs[c] = &b.references[r * K + s];
        msgs[c] = join(*refs[c]);
      }
      const auto out = link.transmit(msgs, channel, rows);
      for (std::size_t c = 0; c < K; ++c) acc[c].add(bleu(tokenize(out[c]), *refs[c]));
      ++rows;
    }
  return acc;
}

std::vector<SweepRow> run_snr_sweep(const ExperimentConfig& cfg, const Dataset& data,
                                    ParamStore* store, bool classical) {
  std::vector<SweepRow> rows;
  const std::size_t K = data.class_names.size();
  const ChannelKind kinds[2] = {cfg.sweep.rx1_channel, cfg.sweep.rx2_channel};
  const std::uint64_t channel_seed = mix(cfg.seed, 0xc4a);

  std::optional<Recognizer> rec;
  ArchConfig arch;
  if (store) {
    arch = resolve_arch(cfg, data);
    for (int user = 1; user <= 2; ++user)
      if (!has_receiver(*store, user))
        throw ConfigError("checkpoint has no receiver " + std::to_string(user) +
                          (user == 2 ? " (run `transfer` first)" : " (run `train` first)"));
    if (cfg.sweep.route) {
      if (!has_recognizer(*store)) throw ConfigError("checkpoint has no recognizer");
      std::mt19937_64 rng(cfg.recognizer.seed);
      rec.emplace(resolve_recognizer(cfg, data), *store, rng);
    }
  }
  std::optional<baseline::ClassicalLink> link;
  if (classical) link.emplace(make_classical_link(cfg, data, K));

  for (double snr : cfg.sweep.snr_db) {
    for (int user = 1; user <= 2; ++user) {
      const ChannelKind kind = kinds[user - 1];
      ChannelConfig ch;
      ch.kind = kind;
      ch.snr_db = snr;
      ch.seed = channel_seed;
      ch.fading_group = cfg.train.fading_group;
      const std::string suffix = "_rx" + std::to_string(user) + "_" + to_string(kind);
      if (store) {
        const auto ev = evaluate_semantic(*store, arch, user, rec ? &*rec : nullptr, data.test,
                                          data.vocab, ch, cfg.eval_batch, cfg.seed,
                                          cfg.sweep.max_rows);
        const auto& acc = ev.per_class[static_cast<std::size_t>(user - 1)];
        rows.push_back({"semantic" + suffix, "snr_db", snr, acc.mean(), cfg.seed, acc.count});
      }
      if (link) {
        const auto acc = evaluate_classical(*link, data.test, data.vocab, ch, cfg.arch.slot_len,
                                            cfg.eval_batch, cfg.seed, cfg.sweep.max_rows);
        const auto& a = acc[static_cast<std::size_t>(user - 1)];
        rows.push_back({"classical" + suffix, "snr_db", snr, a.mean(), cfg.seed, a.count});
      }
    }
  }
  sort_rows(rows);
  return rows;
}

std::vector<baseline::BerPoint> run_ber_sweep(const ExperimentConfig& cfg, const Dataset& data,
                                              ChannelKind kind) {
  const auto link = make_classical_link(cfg, data, data.class_names.size());
  std::vector<baseline::BerPoint> pts;
  for (double snr : cfg.sweep.snr_db) {
    ChannelConfig ch;
    ch.kind = kind;
    ch.snr_db = snr;
    ch.seed = mix(cfg.seed, 0xbe4);
    pts.push_back(baseline::measure_ber(link, ch, cfg.sweep.ber_bits));
  }
  return pts;
}

void write_ber_csv(const std::filesystem::path& file, ChannelKind kind,
                   const std::vector<baseline::BerPoint>& points) {
  std::ofstream out(file, std::ios::binary | std::ios::app);
  if (!out) throw ConfigError("cannot write " + file.string());
  if (std::filesystem::file_size(file) == 0) out << "channel,snr_db,bits,errors,ber\n";
  for (const auto& p : points)
    out << to_string(kind) << ',' << format_number(p.snr_db) << ',' << p.bits << ',' << p.errors
        << ',' << format_number(p.ber()) << '\n';
}

std::vector<SweepRow> run_users_sweep(const ExperimentConfig& cfg,
                                      const std::filesystem::path& model_root, std::ostream* log) {
  std::vector<SweepRow> rows;
  for (double kd : cfg.sweep.users) {
    const int K = static_cast<int>(kd);
    if (K < 2 || K > 7) throw ConfigError("users sweep supports 2..7 users");
    ExperimentConfig c = cfg;
    c.corpus.classes = K;
    c.corpus.kind = "topic";
    c.corpus.dir.clear();
    if (cfg.sweep.users_sentences_per_class)
      c.corpus.sentences_per_class = cfg.sweep.users_sentences_per_class;
    const Dataset data = make_dataset(c.corpus);
    const ArchConfig arch = resolve_arch(c, data);

    ParamStore store;
    const auto dir = model_root.empty() ? model_root : model_root / ("K" + std::to_string(K));
    if (!dir.empty() && std::filesystem::exists(dir / "model.mrsc")) {
      store = load_model_params(dir);
      if (log) *log << "users=" << K << ": loaded " << (dir / "model.mrsc").string() << "\n";
    } else {
      if (log) *log << "users=" << K << ": training\n";
      train_system(c, data, store, log);
      if (!dir.empty()) save_model(dir, store, data.vocab);
    }
    std::mt19937_64 rng(c.recognizer.seed);
    const Recognizer rec(resolve_recognizer(c, data), store, rng);

    ChannelConfig ch;
    ch.kind = cfg.sweep.users_channel;
    ch.snr_db = cfg.sweep.users_snr_db;
    ch.seed = mix(cfg.seed, 0x05e);
    ch.fading_group = cfg.train.fading_group;
    const auto ev = evaluate_semantic(store, arch, 1, cfg.sweep.route ? &rec : nullptr, data.test,
                                      data.vocab, ch, cfg.eval_batch, cfg.seed, cfg.sweep.max_rows);
    BleuAccumulator all;
    for (const auto& a : ev.per_class) {
      for (std::size_t n = 0; n < 4; ++n) all.sum[n] += a.sum[n];
      all.count += a.count;
    }
    rows.push_back({"semantic", "users", kd, all.mean(), cfg.seed, all.count});

    const auto link = make_classical_link(c, data, static_cast<std::size_t>(K));
    const auto cl = evaluate_classical(link, data.test, data.vocab, ch, c.arch.slot_len,
                                       cfg.eval_batch, cfg.seed, cfg.sweep.max_rows);
    BleuAccumulator call;
    for (const auto& a : cl) {
      for (std::size_t n = 0; n < 4; ++n) call.sum[n] += a.sum[n];
      call.count += a.count;
    }
    rows.push_back({"classical", "users", kd, call.mean(), cfg.seed, call.count});
    if (log)
      *log << "users=" << K << ": semantic BLEU-4 " << all.mean()[3] << ", classical BLEU-4 "
           << call.mean()[3] << "\n";
  }
  sort_rows(rows);
  return rows;
}

}  // namespace mrsc::eval
