#include "mdapt/evaluation/bio.h"

#include <algorithm>
#include <stdexcept>

#include "mdapt/common/error.h"

namespace mdapt::evaluation {

bool is_bio_tag(std::string_view tag) {
  if (tag == "O") return true;
  return tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-';
}

std::vector<SpanMention> bio_decode(std::span<const std::string> tags, size_t sentence,
                                    BioMode mode) {
  std::vector<SpanMention> spans;
  bool open = false;
  SpanMention current;
  auto close = [&](size_t end) {
    if (!open) return;
    current.end = end;
    spans.push_back(current);
    open = false;
  };
  for (size_t i = 0; i < tags.size(); ++i) {
    const std::string& tag = tags[i];
    if (!is_bio_tag(tag)) throw DataError("unknown BIO tag '" + tag + "' at position " + std::to_string(i));
    if (tag == "O") {
      close(i);
      continue;
    }
    const std::string label = tag.substr(2);
    if (tag[0] == 'I' && open && current.label == label) continue;
    close(i);
    if (tag[0] == 'I' && mode == BioMode::kStrict) continue;
    current = {sentence, i, 0, label};
    open = true;
  }
  close(tags.size());
  return spans;
}

std::vector<std::string> bio_encode(std::span<const SpanMention> spans, size_t length) {
  std::vector<std::string> tags(length, "O");
  for (const auto& s : spans) {
    if (s.start >= s.end || s.end > length) throw std::invalid_argument("bio_encode: span out of range");
    for (size_t i = s.start; i < s.end; ++i) {
      if (tags[i] != "O") throw std::invalid_argument("bio_encode: overlapping spans");
      tags[i] = (i == s.start ? "B-" : "I-") + s.label;
    }
  }
  return tags;
}

}  // namespace mdapt::evaluation
