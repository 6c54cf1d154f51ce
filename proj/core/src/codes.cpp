#include "tagcode/codes.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "tagcode/error.hpp"

namespace tagcode {
namespace {

void check_tag_count(int n) {
  if (n < 1 || n > kMaxTags)
    throw InvalidArgument("tag count must be in [1, " + std::to_string(kMaxTags) + "]");
}

}  // namespace

Codeword::Codeword(std::uint32_t bits, int tag_count) : bits_(bits), n_(tag_count) {
  check_tag_count(tag_count);
  if (tag_count < 32 && (bits >> tag_count) != 0)
    throw InvalidArgument("codeword bits exceed tag count");
}

Codeword Codeword::from_states(const std::vector<bool>& states) {
  std::uint32_t bits = 0;
  for (std::size_t n = 0; n < states.size(); ++n)
    if (states[n]) bits |= (1U << n);
  return Codeword(bits, static_cast<int>(states.size()));
}

Code::Code(int tag_count, std::vector<Codeword> columns)
    : n_(tag_count), columns_(std::move(columns)) {
  check_tag_count(tag_count);
  if (columns_.empty()) throw InvalidArgument("code needs at least one column");
  for (const auto& c : columns_)
    if (c.tag_count() != n_) throw InvalidArgument("codeword length does not match code");
}

Code Code::permuted(const std::vector<std::size_t>& order) const {
  if (order.size() != columns_.size()) throw InvalidArgument("permutation has wrong length");
  std::vector<Codeword> cols;
  cols.reserve(order.size());
  for (const std::size_t t : order) cols.push_back(columns_.at(t));
  return Code(n_, std::move(cols));
}

ProportionVector::ProportionVector(std::vector<double> weights) : w_(std::move(weights)) {
  if (w_.empty()) throw InvalidArgument("proportion vector is empty");
  double sum = 0.0;
  for (const double w : w_) {
    if (!(w >= 0.0)) throw InvalidArgument("proportion weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw InvalidArgument("proportion weights must sum to 1");
}

ProportionVector ProportionVector::uniform(std::size_t m) {
  return ProportionVector(std::vector<double>(m, 1.0 / static_cast<double>(m)));
}

ProportionVector ProportionVector::indicator(std::size_t m, std::size_t index) {
  std::vector<double> w(m, 0.0);
  w.at(index) = 1.0;
  return ProportionVector(std::move(w));
}

std::size_t codeword_count(int tag_count) {
  check_tag_count(tag_count);
  return std::size_t{1} << tag_count;
}

std::vector<Codeword> enumerate_codewords(int tag_count) {
  const std::size_t m = codeword_count(tag_count);
  std::vector<Codeword> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) out.emplace_back(static_cast<std::uint32_t>(i), tag_count);
  return out;
}

ProportionVector proportions_of(const Code& code) {
  std::vector<double> counts(codeword_count(code.tag_count()), 0.0);
  for (const auto& c : code.columns()) counts[c.index()] += 1.0;
  const double t = static_cast<double>(code.length());
  for (auto& w : counts) w /= t;
  return ProportionVector(std::move(counts));
}

std::vector<std::size_t> counts_from_proportions(const ProportionVector& pi, std::size_t length) {
  if (length == 0) throw InvalidArgument("code length must be positive");
  const std::size_t m = pi.size();
  std::vector<std::size_t> counts(m);
  std::vector<double> remainder(m);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double exact = pi[i] * static_cast<double>(length);
    // Snap values within rounding noise of an integer so integral T*pi is exact.
    const double nearest = std::round(exact);
    const double v = std::abs(exact - nearest) < 1e-9 ? nearest : exact;
    counts[i] = static_cast<std::size_t>(std::floor(v));
    remainder[i] = v - std::floor(v);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < length; ++k, ++assigned) ++counts[order[k % m]];
  while (assigned > length) {
    // Only reachable through floating error in the snap above.
    auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --assigned;
  }
  return counts;
}

Code code_from_proportions(const ProportionVector& pi, std::size_t length, int tag_count) {
  if (pi.size() != codeword_count(tag_count))
    throw InvalidArgument("proportion vector size does not match 2^N");
  const auto counts = counts_from_proportions(pi, length);
  std::vector<Codeword> cols;
  cols.reserve(length);
  for (std::size_t i = 0; i < counts.size(); ++i)
    for (std::size_t k = 0; k < counts[i]; ++k)
      cols.emplace_back(static_cast<std::uint32_t>(i), tag_count);
  return Code(tag_count, std::move(cols));
}

Code orthogonal_code(int tag_count, std::size_t length) {
  check_tag_count(tag_count);
  const auto n = static_cast<std::size_t>(tag_count);
  if (length == 0 || length % n != 0)
    throw InvalidArgument("orthogonal code length must be a positive multiple of N");
  std::vector<Codeword> cols;
  cols.reserve(length);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < length / n; ++k)
      cols.emplace_back(1U << i, tag_count);
  return Code(tag_count, std::move(cols));
}

Code repetition_code(const Codeword& c, std::size_t length) {
  return Code(c.tag_count(), std::vector<Codeword>(length, c));
}

void write_code(std::ostream& out, const Code& code) {
  for (int n = 0; n < code.tag_count(); ++n) {
    for (std::size_t t = 0; t < code.length(); ++t) {
      if (t > 0) out << ' ';
      out << (code[t].state(n) ? '1' : '0');
    }
    out << '\n';
  }
}

Code read_code(std::istream& in) {
  std::vector<std::vector<bool>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line[line.find_first_not_of(" \t")] == '#') continue;
    std::istringstream ss(line);
    std::string tok;
    std::vector<bool> row;
    while (ss >> tok) {
      if (tok != "0" && tok != "1") throw ConfigError("code entries must be 0 or 1", line_no);
      row.push_back(tok == "1");
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ConfigError("ragged code row", line_no);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("code file is empty", 0);
  const int n = static_cast<int>(rows.size());
  std::vector<Codeword> cols;
  for (std::size_t t = 0; t < rows.front().size(); ++t) {
    std::vector<bool> states(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) states[r] = rows[r][t];
    cols.push_back(Codeword::from_states(states));
  }
  return Code(n, std::move(cols));
}

std::string code_to_string(const Code& code) {
  std::ostringstream ss;
  write_code(ss, code);
  return ss.str();
}

Code code_from_string(const std::string& text) {
  std::istringstream ss(text);
  return read_code(ss);
}

}  // namespace tagcode
