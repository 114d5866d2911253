#include "ura/tree_code.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iterator>
#include <numeric>
#include <utility>

#include "ura/errors.hpp"

namespace ura {

int TreeCodeSpec::prefix_bits(int section) const {
  return std::accumulate(profile.begin(), profile.begin() + section, 0);
}

void TreeCodeSpec::validate() const {
  if (j < 1 || j > 30) throw InvalidSpec("tree code chunk size J must lie in [1, 30]");
  if (s < 1) throw InvalidSpec("tree code needs at least one section");
  if (static_cast<int>(profile.size()) != s)
    throw InvalidSpec("profile length " + std::to_string(profile.size()) + " differs from S = " +
                      std::to_string(s));
  if (profile.front() != j) throw InvalidSpec("the first section must carry J data bits");
  for (int ws : profile)
    if (ws < 0 || ws > j) throw InvalidSpec("every profile entry must lie in [0, J]");
  const int total = std::accumulate(profile.begin(), profile.end(), 0);
  if (total != w)
    throw InvalidSpec("profile sums to " + std::to_string(total) + " bits, W = " +
                      std::to_string(w));
}

TreeCodeSpec TreeCodeSpec::from_profile(int j, std::vector<int> profile,
                                        std::uint64_t parity_seed) {
  TreeCodeSpec spec;
  spec.j = j;
  spec.s = static_cast<int>(profile.size());
  spec.w = std::accumulate(profile.begin(), profile.end(), 0);
  spec.profile = std::move(profile);
  spec.parity_seed = parity_seed;
  spec.validate();
  return spec;
}

SlotLists::SlotLists(std::vector<std::vector<std::uint32_t>> lists) : lists_(std::move(lists)) {
  for (auto& l : lists_) {
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
  }
}

std::vector<std::size_t> SlotLists::sizes() const {
  std::vector<std::size_t> out;
  out.reserve(lists_.size());
  for (const auto& l : lists_) out.push_back(l.size());
  return out;
}

SlotLists SlotLists::from_sequences(std::span<const ChunkSequence> sequences, int sections) {
  std::vector<std::vector<std::uint32_t>> lists(static_cast<std::size_t>(sections));
  for (const auto& seq : sequences) {
    if (static_cast<int>(seq.size()) != sections)
      throw InvalidParameter("chunk sequence length differs from the section count");
    for (int s = 0; s < sections; ++s) lists[static_cast<std::size_t>(s)].push_back(seq[static_cast<std::size_t>(s)]);
  }
  return SlotLists(std::move(lists));
}

ParityRules build_rules(const TreeCodeSpec& spec) {
  spec.validate();
  Rng rng = make_rng(spec.parity_seed);
  ParityRules rules;
  rules.g.resize(static_cast<std::size_t>(spec.s));
  for (int s = 1; s < spec.s; ++s) {
    auto& g = rules.g[static_cast<std::size_t>(s)];
    g.rows = spec.parity_bits(s);
    g.cols = spec.prefix_bits(s);
    g.row_masks.assign(static_cast<std::size_t>(g.rows), Bits(static_cast<std::size_t>(spec.w)));
    for (auto& row : g.row_masks)
      for (int c = 0; c < g.cols; ++c) row[static_cast<std::size_t>(c)] = (rng() >> 63) != 0;
  }
  return rules;
}

namespace {

using Block = std::uint64_t;

/// Flat block storage of partial messages, `stride` blocks per path.
struct PathSet {
  std::size_t stride = 0;
  std::vector<Block> blocks;

  std::size_t size() const { return stride == 0 ? 0 : blocks.size() / stride; }
  const Block* path(std::size_t i) const { return blocks.data() + i * stride; }
};

std::vector<std::vector<Block>> row_blocks(const ParityMatrix& g) {
  std::vector<std::vector<Block>> out;
  out.reserve(g.row_masks.size());
  for (const auto& row : g.row_masks) {
    std::vector<Block> b;
    boost::to_block_range(row, std::back_inserter(b));
    out.push_back(std::move(b));
  }
  return out;
}

std::uint32_t parity_of(const std::vector<std::vector<Block>>& rows, const Block* data) {
  std::uint32_t p = 0;
  for (const auto& row : rows) {
    int ones = 0;
    for (std::size_t b = 0; b < row.size(); ++b) ones += std::popcount(row[b] & data[b]);
    p = (p << 1) | static_cast<std::uint32_t>(ones & 1);
  }
  return p;
}

/// Writes the data field of `chunk` (its leading `width` of `j` bits) into
/// message bits [offset, offset + width).
void scatter_data(Block* data, std::uint32_t chunk, int j, int width, int offset) {
  for (int t = 0; t < width; ++t) {
    if ((chunk >> (j - 1 - t)) & 1U) {
      const int k = offset + t;
      data[k / 64] |= Block{1} << (k % 64);
    }
  }
}

}  // namespace

std::uint32_t parity_value(const ParityRules& rules, int section, const Bits& message) {
  const auto& g = rules.g.at(static_cast<std::size_t>(section));
  std::uint32_t p = 0;
  for (const auto& row : g.row_masks) {
    const bool bit = ((row & message).count() & 1U) != 0;
    p = (p << 1) | static_cast<std::uint32_t>(bit);
  }
  return p;
}

ChunkSequence encode(const Bits& message, const ParityRules& rules, const TreeCodeSpec& spec) {
  if (static_cast<int>(message.size()) != spec.w)
    throw InvalidParameter("message has " + std::to_string(message.size()) + " bits, W = " +
                           std::to_string(spec.w));
  ChunkSequence chunks(static_cast<std::size_t>(spec.s));
  int offset = 0;
  for (int s = 0; s < spec.s; ++s) {
    const int ws = spec.data_bits(s);
    std::uint32_t data = 0;
    for (int t = 0; t < ws; ++t)
      data = (data << 1) | static_cast<std::uint32_t>(message[static_cast<std::size_t>(offset + t)]);
    offset += ws;
    const std::uint32_t parity = s == 0 ? 0 : parity_value(rules, s, message);
    chunks[static_cast<std::size_t>(s)] = (data << spec.parity_bits(s)) | parity;
  }
  return chunks;
}

std::vector<Bits> decode(const SlotLists& lists, const ParityRules& rules, const TreeCodeSpec& spec,
                         std::size_t max_paths) {
  if (static_cast<int>(lists.sections()) != spec.s)
    throw InvalidParameter("expected " + std::to_string(spec.s) + " slot lists, got " +
                           std::to_string(lists.sections()));
  if (static_cast<int>(rules.g.size()) != spec.s)
    throw InvalidParameter("parity rules do not match the tree code spec");
  const std::uint32_t limit = std::uint32_t{1} << spec.j;
  for (std::size_t s = 0; s < lists.sections(); ++s)
    for (auto c : lists[s])
      if (c >= limit) throw InvalidParameter("chunk index out of range for J = " + std::to_string(spec.j));

  PathSet frontier;
  frontier.stride = (static_cast<std::size_t>(spec.w) + 63) / 64;

  const auto& roots = lists[0];
  if (roots.size() > max_paths) throw DecoderOverflow(0, roots.size());
  frontier.blocks.assign(roots.size() * frontier.stride, 0);
  for (std::size_t i = 0; i < roots.size(); ++i)
    scatter_data(frontier.blocks.data() + i * frontier.stride, roots[i], spec.j, spec.data_bits(0), 0);

  for (int s = 1; s < spec.s && frontier.size() > 0; ++s) {
    const int vs = spec.parity_bits(s);
    const int ws = spec.data_bits(s);
    const int offset = spec.prefix_bits(s);
    const std::uint32_t mask = vs == 0 ? 0U : (std::uint32_t{1} << vs) - 1U;

    // Candidates bucketed by their parity field.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> by_parity;
    by_parity.reserve(lists[static_cast<std::size_t>(s)].size());
    for (auto c : lists[static_cast<std::size_t>(s)]) by_parity.emplace_back(c & mask, c);
    std::sort(by_parity.begin(), by_parity.end());

    const auto rows = row_blocks(rules.g[static_cast<std::size_t>(s)]);
    PathSet next;
    next.stride = frontier.stride;
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      const Block* data = frontier.path(i);
      const std::uint32_t p = parity_of(rows, data);
      auto [lo, hi] = std::equal_range(
          by_parity.begin(), by_parity.end(), std::pair{p, std::uint32_t{0}},
          [](const auto& a, const auto& b) { return a.first < b.first; });
      for (auto it = lo; it != hi; ++it) {
        const std::size_t base = next.blocks.size();
        next.blocks.insert(next.blocks.end(), data, data + frontier.stride);
        scatter_data(next.blocks.data() + base, it->second, spec.j, ws, offset);
      }
      if (next.size() > max_paths) throw DecoderOverflow(s, next.size());
    }
    frontier = std::move(next);
  }

  std::vector<Bits> out;
  out.reserve(frontier.size());
  for (std::size_t i = 0; i < frontier.size(); ++i) {
    Bits m(frontier.path(i), frontier.path(i) + frontier.stride);
    m.resize(static_cast<std::size_t>(spec.w));
    out.push_back(std::move(m));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double expected_false_paths(const TreeCodeSpec& spec, std::span<const std::size_t> list_sizes) {
  if (static_cast<int>(list_sizes.size()) != spec.s)
    throw InvalidParameter("need one list size per section");
  double log2_paths = 0.0;
  for (auto n : list_sizes) {
    if (n == 0) return 0.0;
    log2_paths += std::log2(static_cast<double>(n));
  }
  int parity = 0;
  for (int s = 1; s < spec.s; ++s) parity += spec.parity_bits(s);
  return std::exp2(log2_paths - parity);
}

Bits random_message(int w, Rng& rng) {
  Bits m(static_cast<std::size_t>(w));
  for (int k = 0; k < w; ++k) m[static_cast<std::size_t>(k)] = (rng() >> 63) != 0;
  return m;
}

std::string to_hex(const Bits& message) {
  static constexpr char kDigits[] = "0123456789abcdef";
  const std::size_t w = message.size();
  const std::size_t pad = (4 - w % 4) % 4;
  std::string out;
  out.reserve((w + pad) / 4);
  unsigned nibble = 0;
  for (std::size_t k = 0; k < w + pad; ++k) {
    const bool bit = k >= pad && message[k - pad];
    nibble = (nibble << 1) | static_cast<unsigned>(bit);
    if (k % 4 == 3) {
      out.push_back(kDigits[nibble]);
      nibble = 0;
    }
  }
  return out;
}

Bits from_hex(const std::string& hex, int w) {
  const std::size_t width = static_cast<std::size_t>(w);
  const std::size_t pad = (4 - width % 4) % 4;
  if (hex.size() * 4 != width + pad)
    throw InvalidParameter("hex message '" + hex + "' does not hold " + std::to_string(w) + " bits");
  Bits m(width);
  for (std::size_t i = 0; i < hex.size(); ++i) {
    const char ch = hex[i];
    unsigned v = 0;
    if (ch >= '0' && ch <= '9') v = static_cast<unsigned>(ch - '0');
    else if (ch >= 'a' && ch <= 'f') v = static_cast<unsigned>(ch - 'a' + 10);
    else if (ch >= 'A' && ch <= 'F') v = static_cast<unsigned>(ch - 'A' + 10);
    else throw InvalidParameter("bad hex digit in '" + hex + "'");
    for (int b = 0; b < 4; ++b) {
      const std::size_t k = i * 4 + static_cast<std::size_t>(b);
      const bool bit = ((v >> (3 - b)) & 1U) != 0;
      if (k < pad) {
        if (bit) throw InvalidParameter("hex message '" + hex + "' sets padding bits");
      } else {
        m[k - pad] = bit;
      }
    }
  }
  return m;
}

}  // namespace ura
