#include "mrsc/baseline/huffman.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <tuple>

#include "mrsc/error.hpp"

namespace mrsc::baseline {

namespace {

// Code lengths from the usual two-smallest merge. Ties break on the smallest
// symbol contained in a subtree so the result is deterministic.
std::map<unsigned char, std::size_t> code_lengths(
    const std::map<unsigned char, std::uint64_t>& freq) {
  struct Item {
    std::uint64_t weight;
    int min_symbol;
    std::vector<unsigned char> symbols;
  };
  auto cmp = [](const Item& a, const Item& b) {
    return std::tie(a.weight, a.min_symbol) > std::tie(b.weight, b.min_symbol);
  };
  std::priority_queue<Item, std::vector<Item>, decltype(cmp)> pq(cmp);
  std::map<unsigned char, std::size_t> len;
  for (const auto& [c, w] : freq) {
    pq.push({w, c, {c}});
    len[c] = 0;
  }
  if (pq.size() == 1) {
    len.begin()->second = 1;
    return len;
  }
  while (pq.size() > 1) {
    Item a = pq.top();
    pq.pop();
    Item b = pq.top();
    pq.pop();
    for (auto c : a.symbols) ++len[c];
    for (auto c : b.symbols) ++len[c];
    a.symbols.insert(a.symbols.end(), b.symbols.begin(), b.symbols.end());
    pq.push({a.weight + b.weight, std::min(a.min_symbol, b.min_symbol), std::move(a.symbols)});
  }
  return len;
}

}  // namespace

HuffmanCodebook HuffmanCodebook::build(const std::map<unsigned char, std::uint64_t>& freq) {
  if (freq.empty()) throw ConfigError("huffman: empty alphabet");
  const auto lengths = code_lengths(freq);
  std::vector<std::pair<std::size_t, unsigned char>> order;
  for (const auto& [c, l] : lengths) order.emplace_back(l, c);
  std::sort(order.begin(), order.end());

  HuffmanCodebook cb;
  std::uint64_t code = 0;
  std::size_t prev_len = order.front().first;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto [l, c] = order[i];
    if (i > 0) {
      ++code;
      code <<= (l - prev_len);
    }
    prev_len = l;
    Bits bits(l);
    for (std::size_t b = 0; b < l; ++b) bits[b] = static_cast<std::uint8_t>((code >> (l - 1 - b)) & 1U);
    cb.codes_[c] = std::move(bits);
  }
  cb.build_trie();
  return cb;
}

HuffmanCodebook HuffmanCodebook::from_texts(const std::vector<std::string>& texts, bool with_eom) {
  std::map<unsigned char, std::uint64_t> freq;
  for (const auto& t : texts) {
    for (unsigned char c : t) ++freq[c];
    if (with_eom) ++freq[kEom];
  }
  return build(freq);
}

void HuffmanCodebook::build_trie() {
  trie_.assign(1, TrieNode{});
  for (const auto& [c, bits] : codes_) {
    int node = 0;
    for (auto b : bits) {
      if (trie_[static_cast<std::size_t>(node)].child[b] < 0) {
        trie_[static_cast<std::size_t>(node)].child[b] = static_cast<int>(trie_.size());
        trie_.emplace_back();
      }
      node = trie_[static_cast<std::size_t>(node)].child[b];
    }
    trie_[static_cast<std::size_t>(node)].symbol = c;
  }
}

const Bits& HuffmanCodebook::code(unsigned char c) const {
  auto it = codes_.find(c);
  if (it == codes_.end())
    throw EncodingError("huffman: character code " + std::to_string(c) + " not in alphabet");
  return it->second;
}

Bits HuffmanCodebook::encode(std::string_view text) const {
  Bits out;
  for (unsigned char c : text) {
    const auto& b = code(c);
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

template <typename Stop>
std::string HuffmanCodebook::walk(std::span<const std::uint8_t> bits, Stop&& stop,
                                  bool* hit_stop) const {
  std::string out;
  int node = 0;
  if (hit_stop) *hit_stop = false;
  for (auto b : bits) {
    node = trie_[static_cast<std::size_t>(node)].child[b & 1U];
    if (node < 0) {
      // only possible for a single-symbol code fed its unused bit value
      node = 0;
      continue;
    }
    const int sym = trie_[static_cast<std::size_t>(node)].symbol;
    if (sym >= 0) {
      if (stop(static_cast<unsigned char>(sym))) {
        if (hit_stop) *hit_stop = true;
        return out;
      }
      out.push_back(static_cast<char>(sym));
      node = 0;
    }
  }
  return out;
}

std::string HuffmanCodebook::decode(std::span<const std::uint8_t> bits) const {
  return walk(bits, [](unsigned char) { return false; }, nullptr);
}

Bits HuffmanCodebook::encode_message(std::string_view text) const {
  Bits out = encode(text);
  const auto& eom = code(kEom);
  out.insert(out.end(), eom.begin(), eom.end());
  return out;
}

std::string HuffmanCodebook::decode_message(std::span<const std::uint8_t> bits,
                                            bool* complete) const {
  return walk(bits, [](unsigned char c) { return c == kEom; }, complete);
}

double HuffmanCodebook::average_length(const std::map<unsigned char, std::uint64_t>& freq) const {
  double total = 0.0, weighted = 0.0;
  for (const auto& [c, w] : freq) {
    total += static_cast<double>(w);
    weighted += static_cast<double>(w) * static_cast<double>(code(c).size());
  }
  return total > 0 ? weighted / total : 0.0;
}

double entropy_bits(const std::map<unsigned char, std::uint64_t>& freq) {
  double total = 0.0;
  for (const auto& [_, w] : freq) total += static_cast<double>(w);
  double h = 0.0;
  for (const auto& [_, w] : freq) {
    if (w == 0) continue;
    const double p = static_cast<double>(w) / total;
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace mrsc::baseline
