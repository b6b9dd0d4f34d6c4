// Command-line front end: corpus generation, training, transfer, sweeps,
// complexity report and gradient checks.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "mrsc/error.hpp"
#include "mrsc/eval/complexity.hpp"
#include "mrsc/eval/experiment.hpp"
#include "mrsc/gradcheck.hpp"

namespace fs = std::filesystem;
using namespace mrsc;
using namespace mrsc::eval;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
};

ExperimentConfig load_config(const Globals& g) {
  ExperimentConfig cfg = g.config.empty() ? ExperimentConfig::from(ConfigFile{})
                                          : ExperimentConfig::from(ConfigFile::load(g.config));
  if (g.seed) cfg.set_seed(*g.seed);
  return cfg;
}

void write_outputs(const fs::path& out, const std::vector<SweepRow>& rows,
                   const ExperimentConfig& cfg) {
  fs::create_directories(out);
  write_results_csv(out / "results.csv", rows);
  write_results_json(out / "results.json", rows, cfg.to_map());
  std::cout << "wrote " << (out / "results.csv").string() << " (" << rows.size() << " rows)\n";
}

int cmd_gen_corpus(const Globals& g) {
  const auto cfg = load_config(g);
  const Dataset d = make_dataset(cfg.corpus);
  Corpus all = d.train;
  all.insert(all.end(), d.test.begin(), d.test.end());
  const fs::path dir = fs::path(g.out) / "corpus";
  write_corpus_dir(all, d.class_names, dir);
  std::cout << "wrote " << all.size() << " sentences in " << d.class_names.size()
            << " classes to " << dir.string() << " (vocabulary " << d.vocab.size() << ")\n";
  return 0;
}

int cmd_train(const Globals& g) {
  const auto cfg = load_config(g);
  const Dataset d = make_dataset(cfg.corpus);
  ParamStore store;
  const auto outcome = train_system(cfg, d, store, &std::cout);
  const fs::path out(g.out);
  save_model(out, store, d.vocab);
  write_history_csv(outcome.history, (out / "history.csv").string());
  write_results_json(out / "results.json", {}, cfg.to_map());
  std::cout << "saved " << (out / "model.mrsc").string() << "\n";
  return 0;
}

int cmd_transfer(const Globals& g) {
  const auto cfg = load_config(g);
  const Dataset d = make_dataset(cfg.corpus);
  const fs::path out(g.out);
  ParamStore store = load_model_params(out);
  TrainConfig tc = cfg.train;
  tc.channel = cfg.transfer.channel;
  if (cfg.transfer.epochs) tc.epochs = cfg.transfer.epochs;
  const auto h = transfer_phase2(store, d.train, d.vocab, resolve_arch(cfg, d), tc, 1, 2,
                                 cfg.transfer.copy_init, tc.validate_sentences ? &d.test : nullptr);
  save_model(out, store, d.vocab);
  write_history_csv(h, (out / "history_transfer.csv").string());
  std::cout << "receiver 2: initial loss " << h.initial_loss << ", final loss "
            << (h.loss.empty() ? h.initial_loss : h.loss.back()) << ", epochs to threshold "
            << h.epochs_to_threshold << "\n";
  return 0;
}

int cmd_eval_snr(const Globals& g) {
  const auto cfg = load_config(g);
  const Dataset d = make_dataset(cfg.corpus);
  ParamStore store = load_model_params(g.out);
  const auto rows = run_snr_sweep(cfg, d, &store, true);
  write_results_csv(std::cout, rows);
  write_outputs(g.out, rows, cfg);
  return 0;
}

int cmd_eval_users(const Globals& g) {
  const auto cfg = load_config(g);
  const auto rows = run_users_sweep(cfg, fs::path(g.out) / "users", &std::cout);
  write_results_csv(std::cout, rows);
  write_outputs(g.out, rows, cfg);
  return 0;
}

int cmd_baseline_snr(const Globals& g) {
  const auto cfg = load_config(g);
  const Dataset d = make_dataset(cfg.corpus);
  const auto rows = run_snr_sweep(cfg, d, nullptr, true);
  write_results_csv(std::cout, rows);
  write_outputs(g.out, rows, cfg);
  const fs::path ber = fs::path(g.out) / "ber.csv";
  std::ofstream(ber, std::ios::trunc).close();
  for (auto kind : {ChannelKind::kAwgn, ChannelKind::kRayleigh})
    write_ber_csv(ber, kind, run_ber_sweep(cfg, d, kind));
  std::cout << "wrote " << ber.string() << "\n";
  return 0;
}

int cmd_complexity(const Globals& g) {
  const auto cfg = load_config(g);
  const Dataset d = make_dataset(cfg.corpus);
  const ArchConfig arch = resolve_arch(cfg, d);
  const RecognizerConfig rc = resolve_recognizer(cfg, d);
  const auto rep = estimate_complexity(arch, rc);
  const auto measured_ed = measure_encoder_decoder_ops(arch, cfg.seed);
  const auto measured_rec = measure_recognizer_ops(rc, cfg.seed);

  fs::create_directories(g.out);
  std::ofstream csv(fs::path(g.out) / "complexity.csv", std::ios::binary);
  csv << "component,mults,adds\n";
  std::cout << std::left << std::setw(20) << "component" << std::setw(16) << "mults"
            << "adds\n";
  for (const auto& [name, c] : rep.parts) {
    csv << name << ',' << c.mults << ',' << c.adds << '\n';
    std::cout << std::setw(20) << name << std::setw(16) << c.mults << c.adds << '\n';
  }
  csv << "encoder_decoder," << rep.encoder_decoder.mults << ',' << rep.encoder_decoder.adds << '\n';
  std::cout << std::setw(20) << "encoder_decoder" << std::setw(16) << rep.encoder_decoder.mults
            << rep.encoder_decoder.adds << "\n\n";
  const bool ok = measured_ed == rep.encoder_decoder && measured_rec == rep.recognizer;
  std::cout << "instrumented encoder_decoder: " << measured_ed.mults << " mults, "
            << measured_ed.adds << " adds\n"
            << "instrumented recognizer:      " << measured_rec.mults << " mults, "
            << measured_rec.adds << " adds\n"
            << (ok ? "closed form matches instrumented counts\n"
                   : "MISMATCH between closed form and instrumented counts\n");

  nlohmann::ordered_json j;
  j["seq_len"] = rep.seq_len;
  for (const auto& [name, c] : rep.parts) j["parts"][name] = {{"mults", c.mults}, {"adds", c.adds}};
  j["encoder_decoder"] = {{"mults", rep.encoder_decoder.mults}, {"adds", rep.encoder_decoder.adds}};
  j["recognizer"] = {{"mults", rep.recognizer.mults}, {"adds", rep.recognizer.adds}};
  j["instrumented_match"] = ok;
  j["config"] = cfg.to_map();
  std::ofstream(fs::path(g.out) / "complexity.json", std::ios::binary) << j.dump(2) << '\n';
  return ok ? 0 : 1;
}

int cmd_gradcheck(const Globals& g) {
  constexpr double kTol = 1e-6;
  const std::uint64_t seed = g.seed.value_or(1);
  auto results = check_primitives(seed);
  results.push_back(check_transceiver(seed));
  bool ok = true;
  for (const auto& r : results) {
    const bool pass = r.rel_error < kTol;
    ok = ok && pass;
    std::cout << (pass ? "ok   " : "FAIL ") << std::left << std::setw(18) << r.name
              << " rel " << std::scientific << std::setprecision(3) << r.rel_error << "  ("
              << r.entries << " entries)\n";
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-user semantic communication experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Experiment file (key = value lines)")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Run seed (training, recognizer, channel draws)");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(const Globals&);
  };
  const Sub subs[] = {
      {"gen-corpus", "Write the synthetic corpus, one file per class", cmd_gen_corpus},
      {"train", "Train transmitter, receiver 1 and the recognizer", cmd_train},
      {"transfer", "Train receiver 2 with the transmitter frozen", cmd_transfer},
      {"eval-snr", "BLEU versus SNR for both receivers and the classical chain", cmd_eval_snr},
      {"eval-users", "Average BLEU versus number of users", cmd_eval_users},
      {"baseline-snr", "Classical chain only: BLEU and BER versus SNR", cmd_baseline_snr},
      {"complexity", "Multiply/add counts per forward pass", cmd_complexity},
      {"gradcheck", "Finite-difference check of every differentiable op", cmd_gradcheck},
  };
  int rc = 0;
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    sub->callback([&rc, &g, fn = s.fn] { rc = fn(g); });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return rc;
}
