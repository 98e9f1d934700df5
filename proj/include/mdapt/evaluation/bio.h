#pragma once

#include <compare>
#include <span>
#include <string>
#include <vector>

namespace mdapt::evaluation {

struct SpanMention {
  size_t sentence = 0;
  size_t start = 0;
  size_t end = 0;  // exclusive
  std::string label;

  auto operator<=>(const SpanMention&) const = default;
};

enum class BioMode {
  kLenient,  // an I-X without an open X span starts a new span
  kStrict,   // such an I-X is ignored
};

// True for "O", "B-X" and "I-X" with a non-empty X.
bool is_bio_tag(std::string_view tag);

// Throws DataError on a tag outside {O, B-X, I-X}.
std::vector<SpanMention> bio_decode(std::span<const std::string> tags, size_t sentence = 0,
                                    BioMode mode = BioMode::kLenient);

// Tags of length `length` for non-overlapping spans of one sentence.
// Throws std::invalid_argument for overlapping or out-of-range spans.
std::vector<std::string> bio_encode(std::span<const SpanMention> spans, size_t length);

}  // namespace mdapt::evaluation
