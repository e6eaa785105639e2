#include "gfn/envcore/state.hpp"

#include <sstream>

namespace gfn {

std::size_t StateHash::operator()(const State& s) const noexcept {
  // FNV-1a over the cells, terminal flag folded in last.
  std::size_t h = 1469598103934665603ull;
  for (int c : s.cells) {
    h ^= static_cast<std::size_t>(static_cast<unsigned>(c));
    h *= 1099511628211ull;
  }
  h ^= s.terminal ? 0x9e3779b97f4a7c15ull : 0ull;
  h *= 1099511628211ull;
  return h;
}

std::string to_string(const State& s) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < s.cells.size(); ++i) {
    if (i) out << ',';
    out << s.cells[i];
  }
  out << ')';
  if (s.terminal) out << '*';
  return out.str();
}

}  // namespace gfn
