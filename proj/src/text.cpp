#include "mrsc/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "mrsc/error.hpp"

namespace mrsc {

namespace {

struct Lexicon {
  const char* name;
  std::vector<const char*> subjects;
  std::vector<const char*> verbs;
  std::vector<const char*> objects;
  std::vector<const char*> adjectives;
  std::vector<const char*> adverbs;
};

const std::vector<Lexicon>& sentiment_lexicons() {
  static const std::vector<Lexicon> lex = {
      {"positive",
       {"friends", "children", "neighbours", "guests", "visitors", "students"},
       {"love", "enjoy", "admire", "praise", "celebrate", "welcome"},
       {"gift", "garden", "party", "music", "smile", "holiday"},
       {"wonderful", "lovely", "bright", "happy", "delightful"},
       {"gladly", "warmly", "cheerfully"}},
      {"negative",
       {"critics", "strangers", "tenants", "drivers", "owners", "workers"},
       {"hate", "dread", "blame", "resent", "reject", "fear"},
       {"noise", "delay", "mess", "accident", "failure", "traffic"},
       {"awful", "terrible", "gloomy", "broken", "painful"},
       {"angrily", "sadly", "bitterly"}},
  };
  return lex;
}

const std::vector<Lexicon>& topic_lexicons() {
  static const std::vector<Lexicon> lex = {
      {"sports",
       {"players", "coaches", "fans", "athletes", "referees", "runners"},
       {"win", "train", "cheer", "score", "defend", "race"},
       {"match", "league", "goal", "stadium", "trophy", "season"},
       {"fast", "strong", "final", "olympic", "tough"},
       {"swiftly", "fiercely", "proudly"}},
      {"education",
       {"teachers", "pupils", "professors", "tutors", "scholars", "graduates"},
       {"study", "teach", "review", "grade", "learn", "lecture"},
       {"lesson", "exam", "course", "thesis", "library", "homework"},
       {"academic", "difficult", "written", "weekly", "advanced"},
       {"carefully", "diligently", "patiently"}},
      {"finance",
       {"investors", "bankers", "traders", "lenders", "auditors", "brokers"},
       {"buy", "sell", "invest", "borrow", "audit", "trade"},
       {"stock", "bond", "market", "loan", "budget", "dividend"},
       {"risky", "profitable", "annual", "fiscal", "liquid"},
       {"cautiously", "quarterly", "boldly"}},
      {"games",
       {"gamers", "streamers", "designers", "modders", "testers", "speedrunners"},
       {"play", "stream", "level", "unlock", "craft", "explore"},
       {"console", "quest", "dungeon", "avatar", "controller", "puzzle"},
       {"multiplayer", "retro", "pixelated", "epic", "casual"},
       {"online", "nightly", "endlessly"}},
      {"medicine",
       {"doctors", "nurses", "surgeons", "patients", "pharmacists", "therapists"},
       {"treat", "diagnose", "prescribe", "heal", "operate", "vaccinate"},
       {"fever", "wound", "clinic", "vaccine", "tumor", "dose"},
       {"chronic", "clinical", "sterile", "acute", "medical"},
       {"gently", "urgently", "routinely"}},
      {"politics",
       {"senators", "voters", "ministers", "mayors", "diplomats", "parties"},
       {"vote", "debate", "legislate", "campaign", "veto", "negotiate"},
       {"election", "bill", "parliament", "policy", "reform", "treaty"},
       {"federal", "liberal", "partisan", "electoral", "public"},
       {"publicly", "formally", "narrowly"}},
      {"military",
       {"soldiers", "generals", "pilots", "sailors", "marines", "officers"},
       {"attack", "patrol", "deploy", "command", "guard", "invade"},
       {"base", "border", "fleet", "missile", "convoy", "battalion"},
       {"armed", "tactical", "naval", "strategic", "hostile"},
       {"covertly", "steadily", "relentlessly"}},
  };
  return lex;
}

const std::array<const char*, 2> kDeterminers = {"the", "a"};
const std::array<const char*, 4> kConjunctions = {"and", "but", "while", "because"};
const std::array<const char*, 3> kOpeners = {"today", "yesterday", "again"};

template <typename C>
const char* pick(const C& c, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, c.size() - 1);
  return c[d(rng)];
}

bool coin(std::mt19937_64& rng, double p) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

// [DET] [ADJ] SUBJ [ADV] VERB DET [ADJ] OBJ
void append_clause(const Lexicon& lex, Words& out, std::mt19937_64& rng) {
  if (coin(rng, 0.4)) out.emplace_back(pick(kDeterminers, rng));
  if (coin(rng, 0.3)) out.emplace_back(pick(lex.adjectives, rng));
  out.emplace_back(pick(lex.subjects, rng));
  if (coin(rng, 0.25)) out.emplace_back(pick(lex.adverbs, rng));
  out.emplace_back(pick(lex.verbs, rng));
  out.emplace_back(pick(kDeterminers, rng));
  if (coin(rng, 0.5)) out.emplace_back(pick(lex.adjectives, rng));
  out.emplace_back(pick(lex.objects, rng));
}

Words gen_sentence(const Lexicon& lex, std::mt19937_64& rng) {
  for (;;) {
    Words w;
    if (coin(rng, 0.2)) w.emplace_back(pick(kOpeners, rng));
    append_clause(lex, w, rng);
    if (coin(rng, 0.45)) {
      w.emplace_back(pick(kConjunctions, rng));
      append_clause(lex, w, rng);
    }
    if (w.size() >= kMinWords && w.size() <= kMaxWords) return w;
  }
}

}  // namespace

std::vector<std::string> class_names(CorpusKind kind, int num_classes) {
  const auto& lex = kind == CorpusKind::kSentiment ? sentiment_lexicons() : topic_lexicons();
  if (num_classes < 2 || static_cast<std::size_t>(num_classes) > lex.size())
    throw ConfigError("corpus kind supports 2.." + std::to_string(lex.size()) +
                      " classes, asked for " + std::to_string(num_classes));
  std::vector<std::string> names;
  for (int k = 0; k < num_classes; ++k) names.emplace_back(lex[static_cast<std::size_t>(k)].name);
  return names;
}

Corpus gen_corpus(int num_classes, std::size_t sentences_per_class, std::uint64_t seed) {
  if (num_classes < 2 || num_classes > 7)
    throw ConfigError("number of classes must be in [2,7], got " + std::to_string(num_classes));
  return gen_corpus(num_classes == 2 ? CorpusKind::kSentiment : CorpusKind::kTopic, num_classes,
                    sentences_per_class, seed);
}

Corpus gen_corpus(CorpusKind kind, int num_classes, std::size_t sentences_per_class,
                  std::uint64_t seed) {
  class_names(kind, num_classes);  // validates the range
  if (sentences_per_class < 1) throw ConfigError("need at least one sentence per class");
  const auto& lex = kind == CorpusKind::kSentiment ? sentiment_lexicons() : topic_lexicons();
  std::mt19937_64 rng(seed);
  Corpus corpus;
  corpus.reserve(sentences_per_class * static_cast<std::size_t>(num_classes));
  // interleave classes so any prefix is roughly balanced
  for (std::size_t i = 0; i < sentences_per_class; ++i)
    for (int k = 0; k < num_classes; ++k)
      corpus.push_back({gen_sentence(lex[static_cast<std::size_t>(k)], rng), k});
  return corpus;
}

Words tokenize(const std::string& text) {
  Words out;
  std::istringstream in(text);
  std::string w;
  while (in >> w) {
    std::transform(w.begin(), w.end(), w.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out.push_back(std::move(w));
  }
  return out;
}

std::string join(const Words& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (const char* w : {"<pad>", "<start>", "<end>", "<unk>", "<sep>"}) add(w);
}

std::int32_t Vocabulary::id(const std::string& word) const {
  auto it = ids_.find(word);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::word(std::int32_t id) const {
  require(id >= 0 && static_cast<std::size_t>(id) < words_.size(),
          "token id " + std::to_string(id) + " outside vocabulary of " +
              std::to_string(words_.size()));
  return words_[static_cast<std::size_t>(id)];
}

std::vector<std::int32_t> Vocabulary::encode(const Words& words) const {
  std::vector<std::int32_t> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(id(w));
  return ids;
}

std::int32_t Vocabulary::add(const std::string& word) {
  auto it = ids_.find(word);
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<std::int32_t>(words_.size());
  words_.push_back(word);
  ids_.emplace(word, id);
  return id;
}

Vocabulary build_vocab(const Corpus& corpus) {
  if (corpus.empty()) throw ConfigError("cannot build a vocabulary from an empty corpus");
  std::set<std::string> words;
  for (const auto& s : corpus) words.insert(s.words.begin(), s.words.end());
  Vocabulary v;
  for (const auto& w : words) v.add(w);
  return v;
}

std::vector<std::int32_t> frame_slot(const Words& words, const Vocabulary& vocab,
                                     std::size_t slot_len, bool insert_sep) {
  const std::size_t framing = insert_sep ? 3 : 2;
  require(words.size() + framing <= slot_len,
          "sentence of " + std::to_string(words.size()) + " words does not fit slot length " +
              std::to_string(slot_len));
  std::vector<std::int32_t> slot(slot_len, kPad);
  slot[0] = kStart;
  for (std::size_t i = 0; i < words.size(); ++i) slot[i + 1] = vocab.id(words[i]);
  slot[words.size() + 1] = kEnd;
  if (insert_sep) slot[words.size() + 2] = kSep;
  return slot;
}

std::vector<MergedBatch> make_batches(const Corpus& corpus, const Vocabulary& vocab, int users,
                                      const BatchOptions& opts, std::uint64_t seed) {
  require(users >= 1, "make_batches: need at least one user");
  require(opts.batch_size >= 1, "make_batches: batch size must be positive");
  require(opts.slot_len >= kMaxWords + 2, "make_batches: slot length below 17");
  const auto k = static_cast<std::size_t>(users);
  std::vector<std::vector<const LabeledSentence*>> by_class(k);
  for (const auto& s : corpus) {
    require(s.label >= 0 && s.label < users,
            "make_batches: label " + std::to_string(s.label) + " outside [0," +
                std::to_string(users) + ")");
    by_class[static_cast<std::size_t>(s.label)].push_back(&s);
  }
  std::mt19937_64 rng(seed);
  std::size_t n_rows = std::numeric_limits<std::size_t>::max();
  for (auto& c : by_class) {
    std::shuffle(c.begin(), c.end(), rng);
    n_rows = std::min(n_rows, c.size());
  }
  require(n_rows >= opts.batch_size, "make_batches: fewer sentences per class than batch size");

  std::vector<MergedBatch> batches;
  const std::size_t width = k * opts.slot_len;
  std::vector<std::size_t> order(k);
  for (std::size_t start = 0; start < n_rows; start += opts.batch_size) {
    const std::size_t rows = std::min(opts.batch_size, n_rows - start);
    MergedBatch b;
    b.rows = rows;
    b.users = k;
    b.slot_len = opts.slot_len;
    b.ids.reserve(rows * width);
    for (std::size_t r = 0; r < rows; ++r) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t s = 0; s < k; ++s) {
        const auto* sent = by_class[order[s]][start + r];
        auto slot = frame_slot(sent->words, vocab, opts.slot_len, opts.insert_sep);
        b.ids.insert(b.ids.end(), slot.begin(), slot.end());
        b.labels.push_back(sent->label);
        b.references.push_back(sent->words);
      }
    }
    b.pad_mask.resize(b.ids.size());
    for (std::size_t i = 0; i < b.ids.size(); ++i) b.pad_mask[i] = b.ids[i] != kPad;
    batches.push_back(std::move(b));
  }
  return batches;
}

Words detokenize(std::span<const std::int32_t> ids, const Vocabulary& vocab) {
  Words out;
  for (auto id : ids) {
    const auto& w = vocab.word(id);  // validates the id
    if (id == kEnd) break;
    if (id == kStart || id == kPad || id == kSep) continue;
    out.push_back(w);
  }
  return out;
}

CorpusSplit split_corpus(const Corpus& corpus, double test_fraction, std::uint64_t seed) {
  require(test_fraction >= 0.0 && test_fraction < 1.0, "split_corpus: fraction in [0,1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < corpus.size(); ++i) by_class[corpus[i].label].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> is_test(corpus.size(), 0);
  for (auto& [_, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_test = static_cast<std::size_t>(test_fraction * static_cast<double>(idx.size()));
    for (std::size_t i = 0; i < n_test; ++i) is_test[idx[i]] = 1;
  }
  CorpusSplit split;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    (is_test[i] ? split.test : split.train).push_back(corpus[i]);
  return split;
}

int count_classes(const Corpus& corpus) {
  int k = 0;
  for (const auto& s : corpus) k = std::max(k, s.label + 1);
  return k;
}

Corpus read_corpus_dir(const std::filesystem::path& dir, std::vector<std::string>* class_order) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ConfigError("corpus directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no .txt class files in " + dir.string());
  Corpus corpus;
  if (class_order) class_order->clear();
  for (std::size_t c = 0; c < files.size(); ++c) {
    if (class_order) class_order->push_back(files[c].stem().string());
    std::ifstream in(files[c]);
    std::string line;
    while (std::getline(in, line)) {
      auto words = tokenize(line);
      // sentences outside the 4..15 word range are skipped
      if (words.size() < kMinWords || words.size() > kMaxWords) continue;
      corpus.push_back({std::move(words), static_cast<int>(c)});
    }
  }
  return corpus;
}

void write_corpus_dir(const Corpus& corpus, const std::vector<std::string>& names,
                      const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::ofstream> outs;
  for (std::size_t c = 0; c < names.size(); ++c) {
    // index prefix keeps the sorted-stem label order equal to the class order
    auto path = dir / ("c" + std::to_string(c) + "_" + names[c] + ".txt");
    outs.emplace_back(path);
    if (!outs.back()) throw std::runtime_error("cannot write " + path.string());
  }
  for (const auto& s : corpus) {
    require(s.label >= 0 && static_cast<std::size_t>(s.label) < names.size(),
            "write_corpus_dir: label without a class name");
    outs[static_cast<std::size_t>(s.label)] << join(s.words) << '\n';
  }
}

}  // namespace mrsc
