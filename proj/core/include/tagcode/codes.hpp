#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tagcode {

inline constexpr int kMaxTags = 20;

/// States of all N tags in one time slot. Bit n holds the state of tag n+1,
/// so the canonical enumeration index of a codeword is its bit pattern.
class Codeword {
 public:
  Codeword() = default;
  Codeword(std::uint32_t bits, int tag_count);
  static Codeword from_states(const std::vector<bool>& states);

  int tag_count() const noexcept { return n_; }
  std::uint32_t bits() const noexcept { return bits_; }
  std::size_t index() const noexcept { return bits_; }
  bool state(int tag) const { return (bits_ >> tag) & 1U; }

  friend bool operator==(const Codeword&, const Codeword&) = default;

 private:
  std::uint32_t bits_ = 0;
  int n_ = 0;
};

/// N x T binary code; column t is the codeword used in slot t.
class Code {
 public:
  Code(int tag_count, std::vector<Codeword> columns);

  int tag_count() const noexcept { return n_; }
  std::size_t length() const noexcept { return columns_.size(); }
  const Codeword& operator[](std::size_t t) const { return columns_[t]; }
  const std::vector<Codeword>& columns() const noexcept { return columns_; }

  Code permuted(const std::vector<std::size_t>& order) const;

  friend bool operator==(const Code&, const Code&) = default;

 private:
  int n_;
  std::vector<Codeword> columns_;
};

/// Codeword frequencies over the 2^N canonical codewords.
class ProportionVector {
 public:
  explicit ProportionVector(std::vector<double> weights);

  static ProportionVector uniform(std::size_t m);
  static ProportionVector indicator(std::size_t m, std::size_t index);

  std::size_t size() const noexcept { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  const std::vector<double>& weights() const noexcept { return w_; }

 private:
  std::vector<double> w_;
};

// All 2^N codewords in binary-counting order. 1 <= N <= 20.
std::vector<Codeword> enumerate_codewords(int tag_count);

std::size_t codeword_count(int tag_count);

ProportionVector proportions_of(const Code& code);

// Largest-remainder rounding of T * pi; ties go to the lower codeword index.
std::vector<std::size_t> counts_from_proportions(const ProportionVector& pi, std::size_t length);

// Columns emitted in canonical codeword order.
Code code_from_proportions(const ProportionVector& pi, std::size_t length, int tag_count);

Code orthogonal_code(int tag_count, std::size_t length);

Code repetition_code(const Codeword& c, std::size_t length);

// Text form: N rows of T space-separated 0/1 values.
void write_code(std::ostream& out, const Code& code);
Code read_code(std::istream& in);
std::string code_to_string(const Code& code);
Code code_from_string(const std::string& text);

}  // namespace tagcode
