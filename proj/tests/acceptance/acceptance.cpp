// End-to-end acceptance run: trains the tiny system once and checks every
// acceptance criterion against it, one PASS/FAIL line each.
//
//   acceptance [criterion ...]     (no arguments: all of them)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mrsc/baseline/huffman.hpp"
#include "mrsc/baseline/qam.hpp"
#include "mrsc/baseline/turbo.hpp"
#include "mrsc/channel.hpp"
#include "mrsc/eval/complexity.hpp"
#include "mrsc/eval/experiment.hpp"
#include "mrsc/eval/results.hpp"
#include "mrsc/gradcheck.hpp"
#include "oracles.hpp"

using namespace mrsc;
using namespace mrsc::eval;
namespace bl = mrsc::baseline;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kGradTol = 1e-6;
constexpr double kGradSeconds = 60.0;
constexpr double kSnrTolDb = 0.1;
constexpr std::size_t kChannelSymbols = 1000000;
constexpr double kFadingPowerTol = 0.02;
constexpr double kClassicalSeconds = 300.0;
constexpr std::uint64_t kBerBits = 100000;
constexpr double kClassicalBleuHigh = 0.99;
constexpr double kLossRatio = 0.2;
constexpr double kHeldOutBleu = 0.9;
constexpr double kExactSentences = 0.9;
constexpr std::size_t kMaxVocab = 200;
constexpr std::size_t kTrainSentences = 400;
constexpr double kTrainSeconds = 30.0 * 60.0;
constexpr double kHighSnrMargin = 0.05;
constexpr double kTransferThreshold = 0.3;
constexpr std::size_t kTransferEpochCap = 30;
constexpr int kPairedSeeds = 3;
constexpr double kRecognizerAccuracy = 0.95;
constexpr double kRoutingRate = 0.9;
constexpr double kShuffledTol = 0.1;
constexpr int kUsersInversions = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// --- shared trained system --------------------------------------------------

struct System {
  ExperimentConfig cfg;
  Dataset data;
  ArchConfig arch;
  ParamStore store;
  TrainOutcome trained;
  double train_seconds = 0.0;
  fs::path phase1_dir;
  bool transferred = false;
};

System& system_once() {
  static System* s = [] {
    auto* sys = new System;
    sys->cfg = ExperimentConfig::from(ConfigFile::load(MRSC_TINY_CONFIG));
    sys->data = make_dataset(sys->cfg.corpus);
    sys->arch = resolve_arch(sys->cfg, sys->data);
    std::cout << "training tiny system (" << sys->data.train.size() << " sentences, vocabulary "
              << sys->data.vocab.size() << ")\n"
              << std::flush;
    const auto t0 = std::chrono::steady_clock::now();
    sys->trained = train_system(sys->cfg, sys->data, sys->store, &std::cout);
    sys->train_seconds = seconds_since(t0);
    sys->phase1_dir = fs::temp_directory_path() / "mrsc_acceptance_phase1";
    save_model(sys->phase1_dir, sys->store, sys->data.vocab);
    return sys;
  }();
  return *s;
}

// Receiver 2 trained by the configured transfer run.
System& transferred_system() {
  System& s = system_once();
  if (!s.transferred) {
    TrainConfig tc = s.cfg.train;
    tc.channel = s.cfg.transfer.channel;
    if (s.cfg.transfer.epochs) tc.epochs = s.cfg.transfer.epochs;
    transfer_phase2(s.store, s.data.train, s.data.vocab, s.arch, tc);
    s.transferred = true;
  }
  return s;
}

// --- criteria -----------------------------------------------------------------

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  auto results = check_primitives(1);
  results.push_back(check_transceiver(1));
  const double secs = seconds_since(t0);
  double worst = 0.0;
  std::string worst_name;
  for (const auto& r : results)
    if (!(r.rel_error <= worst)) {
      worst = r.rel_error;
      worst_name = r.name;
    }
  const bool ok = worst < kGradTol && secs < kGradSeconds;
  return {ok, std::to_string(results.size()) + " checks, worst " + worst_name + " " +
                  fmt("%.2e", worst) + ", " + fmt("%.1fs", secs)};
}

Outcome criterion2() {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  std::vector<Complex> v(kChannelSymbols);
  for (auto& z : v) z = {n(rng), n(rng)};
  const ComplexBlock x = normalize_power(ComplexBlock::from_complex(1000, 1000, v));
  bool ok = true;
  std::ostringstream d;
  for (ChannelKind kind : {ChannelKind::kAwgn, ChannelKind::kRayleigh}) {
    for (double snr : {0.0, 6.0, 12.0, 18.0}) {
      ChannelConfig ch{kind, snr, 21, 1};
      const auto out = pass_channel(x, ch);
      // Signal and noise power seen at the receiver input: |h x|^2 and
      // |h (y_eq - x)|^2, with h = 1 for AWGN.
      double ps = 0.0, pn = 0.0, ph = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const Complex h = kind == ChannelKind::kAwgn ? Complex(1.0) : out.h[i];
        ps += std::norm(h * x.at(i));
        pn += std::norm(h * (out.y.at(i) - x.at(i)));
        ph += std::norm(h);
      }
      const double measured = 10.0 * std::log10(ps / pn);
      const double eh = ph / static_cast<double>(x.size());
      const bool good = std::abs(measured - snr) <= kSnrTolDb &&
                        (kind == ChannelKind::kAwgn || std::abs(eh - 1.0) <= kFadingPowerTol);
      ok = ok && good;
      d << to_string(kind) << "@" << snr << "=" << fmt("%.3f", measured);
      if (kind == ChannelKind::kRayleigh) d << "(E|h|^2 " << fmt("%.4f", eh) << ")";
      d << " ";
    }
  }
  return {ok, d.str()};
}

Outcome criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream d;
  bool ok = true;

  // Huffman over every sentence of the generated corpora.
  std::size_t sentences = 0, huffman_bad = 0;
  std::vector<Corpus> corpora{gen_corpus(2, 250, 7)};
  for (int k = 3; k <= 4; ++k) corpora.push_back(gen_corpus(CorpusKind::kTopic, k, 250, 7));
  for (const auto& corpus : corpora) {
    std::vector<std::string> texts;
    for (const auto& s : corpus) texts.push_back(join(s.words));
    const auto cb = bl::HuffmanCodebook::from_texts(texts);
    for (const auto& t : texts) {
      bool complete = false;
      if (cb.decode_message(cb.encode_message(t), &complete) != t || !complete) ++huffman_bad;
      ++sentences;
    }
  }
  ok = ok && huffman_bad == 0;
  d << "huffman " << sentences - huffman_bad << "/" << sentences;

  // Noiseless turbo round trip on every 10-bit message.
  const auto tc = bl::TurboConfig::make(10, 1);
  std::size_t turbo_bad = 0;
  for (std::uint32_t m = 0; m < 1024; ++m) {
    std::vector<std::uint8_t> u(10);
    for (int i = 0; i < 10; ++i) u[i] = (m >> i) & 1u;
    const auto cw = bl::turbo_encode(u, tc);
    std::vector<double> llr(cw.size());
    for (std::size_t i = 0; i < cw.size(); ++i) llr[i] = cw[i] ? -1.0 : 1.0;
    if (bl::turbo_decode(llr, tc) != u) ++turbo_bad;
  }
  ok = ok && turbo_bad == 0;
  d << ", turbo " << 1024 - turbo_bad << "/1024";

  // Constituent decoder against the exhaustive path maximum.
  std::mt19937_64 rng(3);
  std::size_t map_cases = 0, map_bad = 0;
  for (std::size_t n = 1; n <= 12; ++n)
    for (int trial = 0; trial < 20; ++trial) {
      const auto ls = oracle::dyadic(rng, n), lp = oracle::dyadic(rng, n),
                 la = oracle::dyadic(rng, n);
      for (int variant = 0; variant < 3; ++variant) {
        const bool term = variant == 0;
        const std::size_t tail = variant == 2 ? std::min<std::size_t>(2, n) : 0;
        const auto got = bl::maxlog_map({ls, lp, la, term, tail});
        if (got != oracle::brute_force_app(ls, lp, la, term, tail)) ++map_bad;
        ++map_cases;
      }
    }
  ok = ok && map_bad == 0;
  d << ", max-log-map " << map_cases - map_bad << "/" << map_cases;

  // 64-QAM demap then slice.
  std::size_t qam_bad = 0;
  for (int s = 0; s < 64; ++s) {
    std::vector<std::uint8_t> bits(6);
    for (int b = 0; b < 6; ++b) bits[b] = (s >> b) & 1;
    const auto sym = bl::qam64_modulate(bits);
    const auto llr = bl::qam64_soft_demap(sym, 0.0);
    for (int b = 0; b < 6; ++b)
      if ((llr[b] < 0.0 ? 1 : 0) != bits[b]) {
        ++qam_bad;
        break;
      }
  }
  ok = ok && qam_bad == 0;
  d << ", qam " << 64 - qam_bad << "/64";

  const double secs = seconds_since(t0);
  ok = ok && secs < kClassicalSeconds;
  d << ", " << fmt("%.1fs", secs);
  return {ok, d.str()};
}

Outcome criterion4() {
  ExperimentConfig cfg = ExperimentConfig::from(ConfigFile::load(MRSC_TINY_CONFIG));
  cfg.sweep.snr_db = parse_number_list("0:18:3");
  cfg.sweep.ber_bits = kBerBits;
  const Dataset data = make_dataset(cfg.corpus);
  bool ok = true;
  std::ostringstream d;
  for (ChannelKind kind : {ChannelKind::kAwgn, ChannelKind::kRayleigh}) {
    const auto pts = run_ber_sweep(cfg, data, kind);
    d << to_string(kind) << " ber";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      ok = ok && pts[i].bits >= kBerBits;
      if (i && pts[i].ber() > pts[i - 1].ber()) ok = false;
      d << " " << fmt("%.2g", pts[i].ber());
    }
    d << "; ";
  }
  const auto link = make_classical_link(cfg, data, data.class_names.size());
  ChannelConfig ch{ChannelKind::kAwgn, 18.0, 5, 0};
  const auto acc = evaluate_classical(link, data.test, data.vocab, ch, cfg.arch.slot_len,
                                      cfg.eval_batch, 5);
  BleuAccumulator all;
  for (const auto& a : acc) {
    for (std::size_t n = 0; n < 4; ++n) all.sum[n] += a.sum[n];
    all.count += a.count;
  }
  const double b4 = all.mean()[3];
  ok = ok && b4 >= kClassicalBleuHigh;
  d << "classical BLEU-4 at 18 dB AWGN " << fmt("%.4f", b4) << " over " << all.count;
  return {ok, d.str()};
}

Outcome criterion5() {
  System& s = system_once();
  const auto& h = s.trained.history;
  const double final_loss = h.loss.empty() ? h.initial_loss : h.loss.back();

  std::mt19937_64 rng(0);
  const Transmitter tx(s.arch, s.store, rng);
  const Receiver rx(s.arch, s.store, 1, rng);
  ChannelConfig ch{ChannelKind::kAwgn, 18.0, 77, 0};
  const double held_out = evaluate_bleu(tx, rx, s.data.test, s.data.vocab, ch, s.cfg.eval_batch, 9);

  // Exact sentence recovery on the held-out rows.
  const auto batches = make_batches(s.data.test, s.data.vocab, static_cast<int>(s.arch.users),
                                    {s.cfg.eval_batch, s.arch.slot_len, false}, 9);
  std::size_t exact = 0, total = 0;
  for (std::size_t bi = 0; bi < batches.size(); ++bi) {
    ch.seed = 1000 + bi;
    const auto& b = batches[bi];
    const auto ids = run_link(tx, rx, TokenBatch::from(b), ch);
    for (std::size_t r = 0; r < b.rows; ++r)
      for (std::size_t k = 0; k < b.users; ++k) {
        const std::span<const std::int32_t> slot(ids.data() + r * b.width() + k * b.slot_len,
                                                 b.slot_len);
        exact += detokenize(slot, s.data.vocab) == b.references[r * b.users + k];
        ++total;
      }
  }
  const double exact_rate = static_cast<double>(exact) / static_cast<double>(total);

  const bool ok = s.data.vocab.size() <= kMaxVocab && s.data.train.size() == kTrainSentences &&
                  h.loss.size() == 60 && final_loss < kLossRatio * h.initial_loss &&
                  held_out >= kHeldOutBleu && exact_rate >= kExactSentences &&
                  s.train_seconds <= kTrainSeconds;
  std::ostringstream d;
  d << "vocab " << s.data.vocab.size() << ", train " << s.data.train.size() << ", loss "
    << fmt("%.4f", h.initial_loss) << " -> " << fmt("%.4f", final_loss) << " in "
    << h.loss.size() << " epochs, held-out BLEU-4 " << fmt("%.4f", held_out)
    << ", exact sentences " << fmt("%.3f", exact_rate) << ", " << fmt("%.0fs", s.train_seconds);
  return {ok, d.str()};
}

// Paired epochs-to-threshold for transfer and from-scratch receiver 2.
int epochs_needed(const System& s, std::uint64_t seed, bool copy) {
  ParamStore store = load_model_params(s.phase1_dir);
  TrainConfig tc = s.cfg.train;
  tc.channel = s.cfg.transfer.channel;
  tc.epochs = kTransferEpochCap;
  tc.seed = seed;
  tc.loss_threshold = kTransferThreshold;
  tc.stop_at_threshold = true;
  const auto h = transfer_phase2(store, s.data.train, s.data.vocab, s.arch, tc, 1, 2, copy);
  return h.epochs_to_threshold < 0 ? static_cast<int>(kTransferEpochCap) + 1
                                   : h.epochs_to_threshold;
}

Outcome criterion7() {
  System& s = system_once();
  std::ostringstream d;
  bool ok = true;

  // Step 0: receiver 2 is a copy of receiver 1.
  {
    ParamStore store = load_model_params(s.phase1_dir);
    TrainConfig tc = s.cfg.train;
    tc.epochs = 0;
    transfer_phase2(store, s.data.train, s.data.vocab, s.arch, tc);
    bool same = true;
    std::size_t n = 0;
    for (const auto& [path, t] : store.entries()) {
      for (const char* pre : {"chi_1/", "delta_1/"}) {
        if (path.rfind(pre, 0) != 0) continue;
        std::string other = path;
        other[other.find('1')] = '2';
        const auto a = t.data();
        const auto b = store.at(other).data();
        same = same && std::equal(a.begin(), a.end(), b.begin(), b.end());
        ++n;
      }
    }
    ok = ok && same && n > 0;
    d << "step-0 copy " << (same ? "exact" : "differs") << " (" << n << " tensors); ";
  }

  // Full transfer leaves the phase-1 checkpoint of alpha and beta untouched.
  transferred_system();
  const ParamStore phase1 = load_model_params(s.phase1_dir);
  for (const char* pre : {"alpha", "beta", "chi_1", "delta_1"}) {
    const bool same = serialize_prefix(phase1, pre) == serialize_prefix(s.store, pre);
    ok = ok && same;
    d << pre << (same ? " identical" : " CHANGED") << ", ";
  }

  std::vector<int> transfer, scratch;
  for (int k = 0; k < kPairedSeeds; ++k) {
    transfer.push_back(epochs_needed(s, 500 + k, true));
    scratch.push_back(epochs_needed(s, 500 + k, false));
  }
  auto median = [](std::vector<int> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const int mt = median(transfer), ms = median(scratch);
  ok = ok && mt <= ms;
  d << "epochs to loss " << kTransferThreshold << ": transfer";
  for (int e : transfer) d << " " << e;
  d << " (median " << mt << "), scratch";
  for (int e : scratch) d << " " << e;
  d << " (median " << ms << ")";
  return {ok, d.str()};
}

Outcome criterion6() {
  System& s = transferred_system();
  ExperimentConfig cfg = s.cfg;
  cfg.sweep.snr_db = {0, 3, 15, 18};
  const auto rows = run_snr_sweep(cfg, s.data, &s.store, true);
  std::map<std::pair<std::string, double>, double> b4;
  for (const auto& r : rows) b4[{r.model, r.value}] = r.bleu[3];
  const std::string sem = "semantic_rx1_awgn", cls = "classical_rx1_awgn";
  bool ok = true;
  std::ostringstream d;
  for (double snr : cfg.sweep.snr_db) {
    const double a = b4.at({sem, snr}), c = b4.at({cls, snr});
    const bool good = snr <= 3.0 ? a > c : c >= a - kHighSnrMargin;
    ok = ok && good;
    d << snr << "dB sem " << fmt("%.3f", a) << " cls " << fmt("%.3f", c) << "; ";
  }
  // Fading pair, reported for reference.
  d << "rayleigh rx2:";
  for (double snr : cfg.sweep.snr_db)
    d << " " << fmt("%.3f", b4.at({"semantic_rx2_rayleigh", snr})) << "/"
      << fmt("%.3f", b4.at({"classical_rx2_rayleigh", snr}));
  return {ok, d.str()};
}

// Training labels reassigned round-robin within each true class, so every
// shuffled label is independent of the text and the classes stay balanced.
double shuffled_accuracy(const ExperimentConfig& base, int classes) {
  ExperimentConfig cfg = base;
  cfg.corpus.classes = classes;
  cfg.corpus.kind = classes == 2 ? "sentiment" : "topic";
  Dataset data = make_dataset(cfg.corpus);
  std::mt19937_64 rng(13);
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < data.train.size(); ++i)
    by_class[static_cast<std::size_t>(data.train[i].label)].push_back(i);
  for (auto& idx : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t j = 0; j < idx.size(); ++j)
      data.train[idx[j]].label = static_cast<int>(j % static_cast<std::size_t>(classes));
  }
  const RecognizerConfig rc = resolve_recognizer(cfg, data);
  ParamStore store;
  train_recognizer(data.train, data.vocab, rc, store);
  std::mt19937_64 init(rc.seed);
  const Recognizer rec(rc, store, init);
  return recognizer_accuracy(rec, data.test, data.vocab);
}

Outcome criterion8() {
  System& s = system_once();
  const RecognizerConfig rc = resolve_recognizer(s.cfg, s.data);
  std::mt19937_64 rng(rc.seed);
  const Recognizer rec(rc, s.store, rng);
  const double acc = recognizer_accuracy(rec, s.data.test, s.data.vocab);

  ChannelConfig ch{ChannelKind::kAwgn, 18.0, 31, 0};
  const auto ev = evaluate_semantic(s.store, s.arch, 1, &rec, s.data.test, s.data.vocab, ch,
                                    s.cfg.eval_batch, 31);
  // User 1 is the "positive" class.
  const auto& names = s.data.class_names;
  const auto pos = static_cast<std::size_t>(
      std::find(names.begin(), names.end(), "positive") - names.begin());
  const double routed = pos < names.size() && ev.rows
                            ? static_cast<double>(ev.correct_delivery[pos]) / ev.rows
                            : 0.0;

  bool ok = acc >= kRecognizerAccuracy && routed >= kRoutingRate;
  std::ostringstream d;
  d << "held-out accuracy " << fmt("%.4f", acc) << ", user 1 got a positive sentence in "
    << fmt("%.3f", routed) << " of " << ev.rows << " rows; shuffled labels:";
  for (int k : {2, 4}) {
    const double a = shuffled_accuracy(s.cfg, k);
    ok = ok && std::abs(a - 1.0 / k) <= kShuffledTol;
    d << " K=" << k << " " << fmt("%.3f", a);
  }
  return {ok, d.str()};
}

Outcome criterion9() {
  ExperimentConfig cfg = ExperimentConfig::from(ConfigFile::load(MRSC_TINY_CONFIG));
  cfg.sweep.users = {2, 3, 4};
  const fs::path root = fs::temp_directory_path() / "mrsc_acceptance_users";
  fs::remove_all(root);
  const auto rows = run_users_sweep(cfg, root, &std::cout);

  std::ostringstream csv;
  write_results_csv(csv, rows);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  bool schema = line == kResultsHeader;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    schema = schema && std::count(line.begin(), line.end(), ',') == 8;
    std::istringstream f(line);
    std::string model, axis;
    std::getline(f, model, ',');
    std::getline(f, axis, ',');
    schema = schema && (model == "semantic" || model == "classical") && axis == "users";
  }
  schema = schema && lines == 6;

  std::vector<double> sem;
  for (double k : cfg.sweep.users)
    for (const auto& r : rows)
      if (r.model == "semantic" && r.value == k) sem.push_back(r.bleu[3]);
  int inversions = 0;
  for (std::size_t i = 1; i < sem.size(); ++i) inversions += sem[i] > sem[i - 1];
  const bool trend = sem.size() == 3 && sem.back() < sem.front() && inversions <= kUsersInversions;

  std::ostringstream d;
  d << "semantic BLEU-4";
  for (double b : sem) d << " " << fmt("%.4f", b);
  d << " (inversions " << inversions << "), schema " << (schema ? "ok" : "BAD");
  fs::remove_all(root);
  return {schema && trend, d.str()};
}

Outcome criterion10() {
  std::vector<std::pair<ArchConfig, RecognizerConfig>> cases;
  {
    ArchConfig a = ArchConfig::tiny();
    a.vocab_size = 120;
    RecognizerConfig r;
    r.vocab_size = 120;
    cases.emplace_back(a, r);
  }
  {
    ArchConfig a = ArchConfig::full();
    a.vocab_size = 150;
    RecognizerConfig r;
    r.vocab_size = 150;
    r.d_model = 128;
    r.n_layers = 3;
    r.n_heads = 8;
    r.d_ff = 512;
    cases.emplace_back(a, r);
  }
  {
    ArchConfig a = ArchConfig::tiny();
    a.users = 4;
    a.n_layers = 3;
    a.n_heads = 4;
    a.d_attn = 16;
    a.d_ff = 48;
    a.n_ce = 8;
    a.n_cd = 40;
    a.vocab_size = 90;
    RecognizerConfig r;
    r.vocab_size = 90;
    r.classes = 4;
    r.n_layers = 1;
    cases.emplace_back(a, r);
  }
  bool ok = true;
  std::ostringstream d;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& [a, r] = cases[i];
    const auto est = estimate_complexity(a, r);
    const auto got = measure_encoder_decoder_ops(a, 1 + i);
    const auto got_rec = measure_recognizer_ops(r, 1 + i);
    const bool same = got == est.encoder_decoder && got_rec == est.recognizer;
    ok = ok && same;
    d << "arch" << i + 1 << " " << est.encoder_decoder.mults << "/" << got.mults << " mults, rec "
      << est.recognizer.mults << "/" << got_rec.mults << (same ? "" : " MISMATCH") << "; ";
  }
  return {ok, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, Outcome (*)()> all{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));
  if (selected.empty())
    for (const auto& [k, f] : all) selected.insert(k);

  // 7 trains receiver 2, which 6 then evaluates.
  std::vector<int> order;
  for (int k : {1, 2, 3, 4, 10, 5, 7, 6, 8, 9})
    if (selected.count(k)) order.push_back(k);

  std::map<int, Outcome> results;
  for (int k : order) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      results[k] = all.at(k)();
    } catch (const std::exception& e) {
      results[k] = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << k << ": " << (results[k].pass ? "PASS" : "FAIL") << " ["
              << fmt("%.1fs", seconds_since(t0)) << "] " << results[k].detail << "\n"
              << std::flush;
  }
  std::cout << "\nsummary\n";
  int failed = 0;
  for (const auto& [k, r] : results) {
    std::cout << "criterion " << k << ": " << (r.pass ? "PASS" : "FAIL") << "\n";
    failed += !r.pass;
  }
  return failed ? 1 : 0;
}
