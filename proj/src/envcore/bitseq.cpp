#include "gfn/envcore/bitseq.hpp"

#include <algorithm>
#include <bit>
#include <random>
#include <sstream>

#include "gfn/error.hpp"

namespace gfn {

BitSequence::BitSequence(const BitSequenceConfig& config) : config_(config) {
  if (config.length < 1) throw ConfigError("bitseq: length must be >= 1");
  if (config.bits_per_token < 1 || config.bits_per_token > 16)
    throw ConfigError("bitseq: bits_per_token must be in [1, 16]");
  if (config.length % config.bits_per_token != 0)
    throw ConfigError("bitseq: bits_per_token must divide length");
  if (config.num_modes < 1) throw ConfigError("bitseq: need at least one mode");
  if (!(config.beta > 0)) throw ConfigError("bitseq: beta must be positive");
  if (config.length < 63 && static_cast<std::uint64_t>(config.num_modes) > (std::uint64_t{1} << config.length))
    throw ConfigError("bitseq: more modes than distinct sequences");

  tokens_ = static_cast<std::size_t>(config.length / config.bits_per_token);
  vocabulary_ = std::size_t{1} << config.bits_per_token;
  words_ = (static_cast<std::size_t>(config.length) + 63) / 64;

  std::mt19937_64 rng(config.mode_seed);
  const int tail = config.length % 64;
  const std::uint64_t tail_mask = tail == 0 ? ~std::uint64_t{0} : ((std::uint64_t{1} << tail) - 1);
  while (modes_.size() < static_cast<std::size_t>(config.num_modes)) {
    Bits m(words_);
    for (auto& w : m) w = rng();
    m.back() &= tail_mask;
    if (std::find(modes_.begin(), modes_.end(), m) == modes_.end()) modes_.push_back(std::move(m));
  }
}

std::string BitSequence::signature() const {
  std::ostringstream out;
  out << "bitseq(n=" << config_.length << ",k=" << config_.bits_per_token << ",M=" << config_.num_modes
      << ",seed=" << config_.mode_seed << ")";
  return out.str();
}

void BitSequence::check_state(const State& s) const {
  if (s.cells.size() > tokens_)
    throw ContractViolation("bitseq: state " + to_string(s) + " is longer than the sequence length");
  if (s.terminal != (s.cells.size() == tokens_))
    throw ContractViolation("bitseq: state " + to_string(s) + " has an inconsistent terminal flag");
  for (int t : s.cells) {
    if (t < 0 || static_cast<std::size_t>(t) >= vocabulary_)
      throw ContractViolation("bitseq: token out of vocabulary in " + to_string(s));
  }
}

BitSequence::Bits BitSequence::to_bits(const State& x) const {
  check_state(x);
  if (!x.terminal) throw ContractViolation("bitseq: to_bits needs a full-length sequence");
  Bits bits(words_, 0);
  const int k = config_.bits_per_token;
  for (std::size_t i = 0; i < x.cells.size(); ++i) {
    for (int b = 0; b < k; ++b) {
      if ((x.cells[i] >> (k - 1 - b)) & 1) {
        const std::size_t p = i * static_cast<std::size_t>(k) + static_cast<std::size_t>(b);
        bits[p / 64] |= std::uint64_t{1} << (p % 64);
      }
    }
  }
  return bits;
}

State BitSequence::from_bits(const Bits& bits) const {
  if (bits.size() != words_) throw ShapeError("bitseq: bit vector has wrong word count");
  State x{std::vector<int>(tokens_, 0), true};
  const int k = config_.bits_per_token;
  for (std::size_t i = 0; i < tokens_; ++i) {
    int token = 0;
    for (int b = 0; b < k; ++b) {
      const std::size_t p = i * static_cast<std::size_t>(k) + static_cast<std::size_t>(b);
      token = (token << 1) | static_cast<int>((bits[p / 64] >> (p % 64)) & 1);
    }
    x.cells[i] = token;
  }
  return x;
}

int BitSequence::hamming(const Bits& a, const Bits& b) const {
  int d = 0;
  for (std::size_t w = 0; w < words_; ++w) d += std::popcount(a[w] ^ b[w]);
  return d;
}

int BitSequence::distance_to_modes(const Bits& x) const {
  int best = config_.length;
  for (const auto& m : modes_) best = std::min(best, hamming(x, m));
  return best;
}

std::vector<std::size_t> BitSequence::forward_actions(const State& s) const {
  check_state(s);
  if (s.terminal) throw ContractViolation("bitseq: terminal state " + to_string(s) + " has no children");
  std::vector<std::size_t> out(vocabulary_);
  for (std::size_t a = 0; a < vocabulary_; ++a) out[a] = a;
  return out;
}

std::vector<std::size_t> BitSequence::backward_actions(const State& t) const {
  check_state(t);
  if (t.cells.empty()) throw ContractViolation("bitseq: initial state has no parents");
  return {static_cast<std::size_t>(t.cells.back())};
}

State BitSequence::apply(const State& s, std::size_t action) const {
  check_state(s);
  if (s.terminal) throw ContractViolation("bitseq: cannot act from terminal state " + to_string(s));
  if (action >= vocabulary_) throw ContractViolation("bitseq: token " + std::to_string(action) + " out of vocabulary");
  State t = s;
  t.cells.push_back(static_cast<int>(action));
  t.terminal = t.cells.size() == tokens_;
  return t;
}

State BitSequence::undo(const State& t, std::size_t backward_action) const {
  check_state(t);
  if (t.cells.empty()) throw ContractViolation("bitseq: initial state has no parents");
  if (static_cast<std::size_t>(t.cells.back()) != backward_action)
    throw ContractViolation("bitseq: backward action must remove the last token");
  State s = t;
  s.cells.pop_back();
  s.terminal = false;
  return s;
}

double BitSequence::log_reward(const State& x) const {
  if (!x.terminal) throw ContractViolation("bitseq: reward of non-terminal state " + to_string(x));
  return -config_.beta * static_cast<double>(distance_to_modes(to_bits(x)));
}

std::size_t BitSequence::feature_width() const { return tokens_ * vocabulary_ + 1; }

void BitSequence::encode(const State& s, std::span<double> out) const {
  if (out.size() != feature_width()) throw ShapeError("bitseq: encode buffer has wrong width");
  check_state(s);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < s.cells.size(); ++i) {
    out[i * vocabulary_ + static_cast<std::size_t>(s.cells[i])] = 1.0;
  }
  out.back() = static_cast<double>(s.cells.size()) / static_cast<double>(tokens_);
}

bool BitSequence::enumerable() const {
  return config_.length < 63 && (std::uint64_t{1} << config_.length) <= config_.enumeration_budget;
}

std::size_t BitSequence::state_count() const {
  if (!enumerable()) throw EnumerationRefused("bitseq: " + signature() + " exceeds the enumeration budget");
  std::size_t total = 0;
  std::size_t level = 1;
  for (std::size_t l = 0; l <= tokens_; ++l) {
    total += level;
    level *= vocabulary_;
  }
  return total;
}

std::size_t BitSequence::state_index(const State& s) const {
  check_state(s);
  if (!enumerable()) throw EnumerationRefused("bitseq: " + signature() + " exceeds the enumeration budget");
  std::size_t offset = 0;
  std::size_t level = 1;
  for (std::size_t l = 0; l < s.cells.size(); ++l) {
    offset += level;
    level *= vocabulary_;
  }
  std::size_t value = 0;
  for (int t : s.cells) value = value * vocabulary_ + static_cast<std::size_t>(t);
  return offset + value;
}

std::vector<State> BitSequence::enumerate_states() const {
  std::vector<State> out;
  out.reserve(state_count());
  out.push_back(initial_state());
  std::size_t begin = 0;
  for (std::size_t l = 0; l < tokens_; ++l) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t a = 0; a < vocabulary_; ++a) out.push_back(apply(out[i], a));
    }
    begin = end;
  }
  return out;
}

std::vector<State> BitSequence::enumerate_terminal_states() const {
  auto all = enumerate_states();
  std::vector<State> out;
  for (auto& s : all) {
    if (s.terminal) out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::size_t> BitSequence::modes_of(const State& x) const {
  if (!x.terminal) return {};
  const Bits bits = to_bits(x);
  std::vector<std::size_t> out;
  for (std::size_t m = 0; m < modes_.size(); ++m) {
    if (hamming(bits, modes_[m]) <= mode_radius()) out.push_back(m);
  }
  return out;
}

std::unique_ptr<Environment> make_bit_sequence(const BitSequenceConfig& config) {
  return std::make_unique<BitSequence>(config);
}

}  // namespace gfn
