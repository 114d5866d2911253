#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <boost/dynamic_bitset.hpp>

#include "ura/random.hpp"

namespace ura {

/// A W-bit message. Bit k is the k-th message bit; bit 0 is transmitted first
/// and is the most significant bit of the first chunk.
using Bits = boost::dynamic_bitset<std::uint64_t>;

/// Outer tree code layout: a W-bit message is cut into S chunks of J bits.
/// Chunk s carries profile[s] data bits followed by J - profile[s] parity bits.
struct TreeCodeSpec {
  int w = 0;
  int s = 0;
  int j = 0;
  std::vector<int> profile;
  std::uint64_t parity_seed = 0;

  int data_bits(int section) const { return profile.at(static_cast<std::size_t>(section)); }
  int parity_bits(int section) const { return j - data_bits(section); }
  /// Number of message bits in sections before `section`.
  int prefix_bits(int section) const;

  /// Throws InvalidSpec on any inconsistency.
  void validate() const;

  /// Fills w and s from the profile.
  static TreeCodeSpec from_profile(int j, std::vector<int> profile, std::uint64_t parity_seed);
};

/// G_s for one section: `rows` parity equations over the first `cols`
/// message bits. Each row is stored as a length-W mask whose bits past
/// `cols` are zero.
struct ParityMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<Bits> row_masks;

  bool bit(int r, int c) const { return row_masks.at(static_cast<std::size_t>(r)).test(static_cast<std::size_t>(c)); }
};

struct ParityRules {
  std::vector<ParityMatrix> g;  ///< one per section; section 0 is always 0 x 0
};

/// Chunk index per section, each in [0, 2^J).
using ChunkSequence = std::vector<std::uint32_t>;

/// Per-section candidate chunk lists. Duplicates are collapsed on construction.
class SlotLists {
 public:
  SlotLists() = default;
  explicit SlotLists(std::vector<std::vector<std::uint32_t>> lists);

  std::size_t sections() const noexcept { return lists_.size(); }
  const std::vector<std::uint32_t>& operator[](std::size_t s) const { return lists_.at(s); }
  std::vector<std::size_t> sizes() const;

  /// Lists holding exactly the chunks of the given encoded messages.
  static SlotLists from_sequences(std::span<const ChunkSequence> sequences, int sections);

 private:
  std::vector<std::vector<std::uint32_t>> lists_;
};

inline constexpr std::size_t kDefaultMaxPaths = 100000;

/// Draws every G_s entry i.i.d. uniform from the parity seed, sections in
/// order, rows in order, columns in order, one engine output bit each.
ParityRules build_rules(const TreeCodeSpec& spec);

/// Parity bits for section `s` given the message: G_s times the message
/// prefix, MSB-first.
std::uint32_t parity_value(const ParityRules& rules, int section, const Bits& message);

ChunkSequence encode(const Bits& message, const ParityRules& rules, const TreeCodeSpec& spec);

/// All messages whose every chunk appears in its section list, found by
/// breadth-wise expansion with parity pruning at each stage. The result is
/// sorted and duplicate-free. Throws DecoderOverflow when a stage keeps more
/// than `max_paths` partial paths.
std::vector<Bits> decode(const SlotLists& lists, const ParityRules& rules, const TreeCodeSpec& spec,
                         std::size_t max_paths = kDefaultMaxPaths);

/// Heuristic count of spurious surviving paths:
/// prod |L_s| * 2^(-sum_{s>=2} V_s).
double expected_false_paths(const TreeCodeSpec& spec, std::span<const std::size_t> list_sizes);

Bits random_message(int w, Rng& rng);

/// Message as hex, MSB-first, left-padded with zero bits to a multiple of 4.
std::string to_hex(const Bits& message);
Bits from_hex(const std::string& hex, int w);

}  // namespace ura
