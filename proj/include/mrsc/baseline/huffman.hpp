#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mrsc::baseline {

using Bits = std::vector<std::uint8_t>;

// Canonical Huffman code over bytes. Codes are assigned in (length, symbol)
// order, so two codebooks built from the same frequencies are identical.
class HuffmanCodebook {
 public:
  static HuffmanCodebook build(const std::map<unsigned char, std::uint64_t>& freq);
  // Character frequencies of `texts`; when `eom` is set it is added once per
  // text so messages can carry an end marker.
  static HuffmanCodebook from_texts(const std::vector<std::string>& texts,
                                    bool with_eom = true);

  static constexpr unsigned char kEom = '\n';

  bool has(unsigned char c) const { return codes_.count(c) != 0; }
  const Bits& code(unsigned char c) const;
  std::size_t alphabet_size() const { return codes_.size(); }

  // Throws EncodingError on characters outside the alphabet.
  Bits encode(std::string_view text) const;
  // Decodes whole codewords; a trailing incomplete codeword is dropped.
  std::string decode(std::span<const std::uint8_t> bits) const;

  // encode(text) followed by the end marker.
  Bits encode_message(std::string_view text) const;
  // Decodes up to the end marker; without one, everything decodable is
  // returned and `complete` is set to false.
  std::string decode_message(std::span<const std::uint8_t> bits, bool* complete = nullptr) const;

  // Expected code length in bits/symbol under `freq`.
  double average_length(const std::map<unsigned char, std::uint64_t>& freq) const;

 private:
  std::map<unsigned char, Bits> codes_;
  // Binary trie: node i has children child_[i][0/1]; leaves store the symbol.
  struct TrieNode {
    int child[2] = {-1, -1};
    int symbol = -1;
  };
  std::vector<TrieNode> trie_;

  void build_trie();
  template <typename Stop>
  std::string walk(std::span<const std::uint8_t> bits, Stop&& stop, bool* hit_stop) const;
};

double entropy_bits(const std::map<unsigned char, std::uint64_t>& freq);

}  // namespace mrsc::baseline
