#include "mdapt/cli/fixtures.h"

#include <algorithm>
#include <fstream>
#include <set>

#include "mdapt/common/error.h"
#include "mdapt/common/hash.h"
#include "mdapt/common/rng.h"

namespace mdapt::cli {
namespace fs = std::filesystem;

namespace {

constexpr const char* kLanguageCodes[] = {"en", "de", "fr", "es", "it", "nl", "pt", "sv",
                                          "da", "pl", "cs", "fi"};

class WordFactory {
 public:
  explicit WordFactory(Rng rng) : rng_(std::move(rng)) {}

  std::string make(const std::string& consonants, const std::string& vowels, int min_syl,
                   int max_syl, bool capitalize) {
    for (;;) {
      std::string w;
      const int syl = min_syl + static_cast<int>(rng_.uniform_index(max_syl - min_syl + 1));
      for (int s = 0; s < syl; ++s) {
        w += consonants[rng_.uniform_index(consonants.size())];
        w += vowels[rng_.uniform_index(vowels.size())];
      }
      if (capitalize) w[0] = static_cast<char>(w[0] - 'a' + 'A');
      if (used_.insert(w).second) return w;
    }
  }

 private:
  Rng rng_;
  std::set<std::string> used_;
};

struct Domain {
  std::string name;
  std::vector<std::string> class_names;
  std::vector<std::vector<std::string>> markers;  // [class][marker]
  std::vector<int> trigger_concepts;              // per class
};

struct World {
  std::vector<std::string> languages;
  std::vector<std::vector<std::string>> words;  // [lang][concept]
  std::vector<std::string> anchors;               // [concept], shared by all languages
  std::vector<std::vector<int>> successors;       // [concept], the shared grammar
  int concepts = 0;  // topical concepts; trigger concepts follow them
  int topics = 0;
  Domain target;
  Domain other;
};

World build_world(const SyntheticSpec& spec) {
  World w;
  w.languages = fixture_languages(spec.num_languages);
  w.concepts = spec.words_per_language;
  w.topics = spec.num_topics;
  const int triggers = 2 * spec.entity_classes;
  const Rng root(spec.seed);
  WordFactory factory(root.fork("words"));
  const std::string all_consonants = "bcdfghlmnprstw";
  for (size_t l = 0; l < w.languages.size(); ++l) {
    // A language-specific consonant subset gives each language its own look.
    std::string consonants = all_consonants;
    root.fork("phonology:" + w.languages[l]).shuffle(consonants.begin(), consonants.end());
    consonants.resize(9);
    std::vector<std::string> lexicon;
    for (int c = 0; c < w.concepts + triggers; ++c) {
      lexicon.push_back(factory.make(consonants, "aeiou", 2, 3, false));
    }
    w.words.push_back(std::move(lexicon));
  }
  Rng digits = root.fork("anchors");
  std::set<std::string> used;
  while (static_cast<int>(w.anchors.size()) < w.concepts) {
    const std::string a = std::to_string(1000 + digits.uniform_index(9000));
    if (used.insert(a).second) w.anchors.push_back(a);
  }
  // Each concept prefers a few successors from its own topic. All languages
  // share this grammar, which is what lets a small encoder align them.
  Rng grammar = root.fork("grammar");
  const int per_topic = w.concepts / w.topics;
  for (int c = 0; c < w.concepts; ++c) {
    std::vector<int> next;
    for (int k = 0; k < 3; ++k) {
      next.push_back(c % w.topics + w.topics * static_cast<int>(grammar.uniform_index(per_topic)));
    }
    w.successors.push_back(std::move(next));
  }
  auto make_domain = [&](const std::string& name, const std::string& consonants,
                         std::vector<std::string> class_names, int trigger_offset) {
    Domain d;
    d.name = name;
    d.class_names = std::move(class_names);
    for (int k = 0; k < spec.entity_classes; ++k) {
      std::vector<std::string> row;
      for (int m = 0; m < spec.markers_per_class; ++m) {
        row.push_back(factory.make(consonants, "aeiouy", 2, 3, true));
      }
      d.markers.push_back(std::move(row));
      d.trigger_concepts.push_back(w.concepts + trigger_offset + k);
    }
    return d;
  };
  auto class_names = [&](const std::string& prefix) {
    std::vector<std::string> names;
    for (int k = 0; k < spec.entity_classes; ++k) names.push_back(prefix + std::to_string(k));
    return names;
  };
  w.target = make_domain(kTargetDomain, "kxz", class_names("TGT"), 0);
  w.other = make_domain(kOtherDomain, "qvj", class_names("OTH"), spec.entity_classes);
  return w;
}

int topic_concept(const World& w, int topic, Rng& rng) {
  const int per_topic = w.concepts / w.topics;
  return topic + w.topics * static_cast<int>(rng.uniform_index(per_topic));
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& x : words) {
    if (!out.empty()) out += ' ';
    out += x;
  }
  return out;
}

// 6 to 12 concepts of one topic, mostly following the grammar.
std::vector<int> concept_chain(const World& w, int topic, Rng& rng) {
  const int n = 6 + static_cast<int>(rng.uniform_index(7));
  std::vector<int> out{topic_concept(w, topic, rng)};
  while (static_cast<int>(out.size()) < n) {
    const auto& next = w.successors[out.back()];
    out.push_back(rng.uniform01() < 0.9 ? next[rng.uniform_index(next.size())]
                                        : topic_concept(w, topic, rng));
  }
  return out;
}

// Words of one topic; a concept is followed by its shared anchor with
// probability `anchor_rate`. A negative topic picks one at random.
std::vector<std::string> topical_words(const World& w, size_t lang, Rng& rng,
                                       double anchor_rate, int topic = -1) {
  if (topic < 0) topic = static_cast<int>(rng.uniform_index(w.topics));
  std::vector<std::string> out;
  for (int c : concept_chain(w, topic, rng)) {
    out.push_back(w.words[lang][c]);
    if (rng.uniform01() < anchor_rate) out.push_back(w.anchors[c]);
  }
  return out;
}

// Topics are dealt to entity classes round-robin.
int class_topic(const World& w, int cls, int classes, Rng& rng) {
  const int per_class = std::max(1, w.topics / classes);
  return (cls + classes * static_cast<int>(rng.uniform_index(per_class))) % w.topics;
}

struct Mention {
  size_t start = 0;
  size_t length = 0;
  int cls = 0;
};

// Domain sentence with one or two entity mentions.
//
// Running text (`running`) uses one class per sentence, draws the topic from
// that class's topics and usually puts the class trigger word before each
// mention. Annotated data has neither cue, so a model has to know what the
// marker words mean. `marker_range` restricts which markers may appear.
std::vector<std::string> domain_words(const World& w, const Domain& d, size_t lang, Rng& rng,
                                      bool running, std::pair<size_t, size_t> marker_range,
                                      std::vector<Mention>* mentions, int forced_class = -1) {
  const int classes = static_cast<int>(d.markers.size());
  const int sentence_class =
      forced_class >= 0 ? forced_class : static_cast<int>(rng.uniform_index(classes));
  auto words = running ? topical_words(w, lang, rng, 0.1, class_topic(w, sentence_class, classes, rng))
                       : topical_words(w, lang, rng, 0.0);
  const int count = forced_class >= 0 ? 1 : 1 + static_cast<int>(rng.uniform_index(2));
  for (int m = 0; m < count; ++m) {
    const int cls = running || m == 0 ? sentence_class
                                      : static_cast<int>(rng.uniform_index(classes));
    const bool triggers = running;
    std::vector<std::string> insert;
    if (triggers && rng.uniform01() < 0.8) {
      insert.push_back(w.words[lang][d.trigger_concepts[cls]]);
    }
    const size_t span_start = insert.size();
    const size_t length = rng.uniform01() < 0.7 ? 1 : 2;
    for (size_t i = 0; i < length; ++i) {
      const size_t idx =
          marker_range.first + rng.uniform_index(marker_range.second - marker_range.first);
      insert.push_back(d.markers[cls][idx]);
    }
    // Insert only between existing mentions so spans stay intact.
    size_t lo = 0;
    if (mentions != nullptr && !mentions->empty()) {
      lo = mentions->back().start + mentions->back().length;
    }
    const size_t at = lo + rng.uniform_index(words.size() - lo + 1);
    words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), insert.begin(), insert.end());
    if (mentions != nullptr) mentions->push_back({at + span_start, length, cls});
  }
  return words;
}

void ensure_parent(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p.parent_path(), ec);
  if (ec) throw DataError("cannot create directory " + p.parent_path().string());
}

void write_records(const fs::path& path, const std::vector<ingest::SentenceRecord>& records) {
  ensure_parent(path);
  ingest::write_corpus(path, records);
}

std::vector<ingest::SentenceRecord> make_pool(const std::string& source, const std::string& lang,
                                              int count, const std::function<std::string()>& gen) {
  std::vector<ingest::SentenceRecord> out;
  for (int i = 0; i < count; ++i) {
    const std::string doc = source + "-" + lang + "-" + std::to_string(i / 5);
    out.push_back({gen(), lang, source, doc, static_cast<uint64_t>(i % 5)});
  }
  return out;
}

training::NerSentence ner_sentence(const World& w, size_t lang, Rng& rng,
                                   std::pair<size_t, size_t> range) {
  std::vector<Mention> mentions;
  training::NerSentence s;
  s.words = domain_words(w, w.target, lang, rng, false, range, &mentions);
  s.tags.assign(s.words.size(), "O");
  for (const auto& m : mentions) {
    const auto& name = w.target.class_names[m.cls];
    s.tags[m.start] = "B-" + name;
    for (size_t i = 1; i < m.length; ++i) s.tags[m.start + i] = "I-" + name;
  }
  return s;
}

}  // namespace

void SyntheticSpec::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw UsageError(std::string("synthetic spec: ") + name + " must be positive");
  };
  positive(num_languages, "num_languages");
  positive(words_per_language, "words_per_language");
  positive(num_topics, "num_topics");
  positive(entity_classes, "entity_classes");
  positive(sentences_per_language_domain, "sentences_per_language_domain");
  positive(general_sentences_per_language, "general_sentences_per_language");
  positive(heldout_sentences_per_domain, "heldout_sentences_per_domain");
  positive(ner_train_sentences, "ner_train_sentences");
  positive(ner_eval_sentences, "ner_eval_sentences");
  positive(classification_sentences, "classification_sentences");
  if (parallel_pairs < 0) throw UsageError("synthetic spec: parallel_pairs must be >= 0");
  if (num_languages < 2 || num_languages > static_cast<int>(std::size(kLanguageCodes))) {
    throw UsageError("synthetic spec: num_languages must lie in [2, " +
                     std::to_string(std::size(kLanguageCodes)) + "]");
  }
  if (words_per_language < num_topics) {
    throw UsageError("synthetic spec: need at least one concept per topic");
  }
  if (markers_per_class < 2) throw UsageError("synthetic spec: markers_per_class must be >= 2");
  if (words_per_language > 9000) throw UsageError("synthetic spec: too many concepts");
}

nlohmann::json to_json(const SyntheticSpec& s) {
  return {{"num_languages", s.num_languages},
          {"words_per_language", s.words_per_language},
          {"num_topics", s.num_topics},
          {"entity_classes", s.entity_classes},
          {"markers_per_class", s.markers_per_class},
          {"sentences_per_language_domain", s.sentences_per_language_domain},
          {"general_sentences_per_language", s.general_sentences_per_language},
          {"heldout_sentences_per_domain", s.heldout_sentences_per_domain},
          {"parallel_pairs", s.parallel_pairs},
          {"ner_train_sentences", s.ner_train_sentences},
          {"ner_eval_sentences", s.ner_eval_sentences},
          {"classification_sentences", s.classification_sentences},
          {"seed", s.seed}};
}

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j, SyntheticSpec s) {
  try {
    s.num_languages = j.value("num_languages", s.num_languages);
    s.words_per_language = j.value("words_per_language", s.words_per_language);
    s.num_topics = j.value("num_topics", s.num_topics);
    s.entity_classes = j.value("entity_classes", s.entity_classes);
    s.markers_per_class = j.value("markers_per_class", s.markers_per_class);
    s.sentences_per_language_domain =
        j.value("sentences_per_language_domain", s.sentences_per_language_domain);
    s.general_sentences_per_language =
        j.value("general_sentences_per_language", s.general_sentences_per_language);
    s.heldout_sentences_per_domain =
        j.value("heldout_sentences_per_domain", s.heldout_sentences_per_domain);
    s.parallel_pairs = j.value("parallel_pairs", s.parallel_pairs);
    s.ner_train_sentences = j.value("ner_train_sentences", s.ner_train_sentences);
    s.ner_eval_sentences = j.value("ner_eval_sentences", s.ner_eval_sentences);
    s.classification_sentences = j.value("classification_sentences", s.classification_sentences);
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed synthetic spec: ") + e.what());
  }
  return s;
}

fs::path FixtureLayout::pool(const std::string& domain, const std::string& kind) const {
  return root / "pools" / domain / kind;
}

std::vector<std::string> fixture_languages(int count) {
  return {std::begin(kLanguageCodes), std::begin(kLanguageCodes) + count};
}

FixtureLayout generate_fixtures(const SyntheticSpec& spec, const fs::path& out) {
  spec.validate();
  const World w = build_world(spec);
  const Rng root(spec.seed);
  FixtureLayout layout{out};

  for (size_t l = 0; l < w.languages.size(); ++l) {
    const auto& lang = w.languages[l];
    Rng g = root.fork("general:" + lang);
    write_records(layout.general_pool() / (lang + ".jsonl"),
                  make_pool("synth-general", lang, spec.general_sentences_per_language,
                            [&] { return join(topical_words(w, l, g, 0.3)); }));
    for (const Domain* d : {&w.target, &w.other}) {
      Rng r = root.fork("domain:" + d->name + ":" + lang);
      const auto kind = lang == "en" ? "domain-english" : "domain-multilingual";
      const std::pair<size_t, size_t> all{0, d->markers.front().size()};
      write_records(layout.pool(d->name, kind) / (lang + ".jsonl"),
                    make_pool("synth-" + d->name, lang, spec.sentences_per_language_domain, [&] {
                      return join(domain_words(w, *d, l, r, true, all, nullptr));
                    }));
    }
  }
  for (const Domain* d : {&w.target, &w.other}) {
    Rng r = root.fork("heldout:" + d->name);
    const std::pair<size_t, size_t> all{0, d->markers.front().size()};
    std::vector<ingest::SentenceRecord> held;
    for (int i = 0; i < spec.heldout_sentences_per_domain; ++i) {
      const size_t l = static_cast<size_t>(i) % w.languages.size();
      held.push_back({join(domain_words(w, *d, l, r, true, all, nullptr)), w.languages[l],
                      "synth-heldout-" + d->name, "heldout-" + std::to_string(i), 0});
    }
    write_records(layout.heldout(d->name), held);
  }

  const size_t half = static_cast<size_t>(spec.markers_per_class) / 2;
  const std::pair<size_t, size_t> train_markers{0, half};
  const std::pair<size_t, size_t> eval_markers{half, static_cast<size_t>(spec.markers_per_class)};
  auto ner_split = [&](const std::string& name, int count, std::pair<size_t, size_t> range) {
    Rng r = root.fork("ner:" + name);
    std::vector<training::NerSentence> sentences;
    for (int i = 0; i < count; ++i) {
      sentences.push_back(ner_sentence(w, static_cast<size_t>(i) % w.languages.size(), r, range));
    }
    ensure_parent(layout.ner(name));
    training::write_conll(layout.ner(name), sentences);
  };
  ner_split("train", spec.ner_train_sentences, train_markers);
  ner_split("dev", spec.ner_eval_sentences, eval_markers);
  ner_split("test", spec.ner_eval_sentences, eval_markers);

  {
    Rng r = root.fork("classification");
    const std::pair<size_t, size_t> all{0, static_cast<size_t>(spec.markers_per_class)};
    std::vector<training::LabeledSentence> data;
    for (int i = 0; i < spec.classification_sentences; ++i) {
      const int cls = i % spec.entity_classes;
      const size_t l = static_cast<size_t>(i / spec.entity_classes) % w.languages.size();
      data.push_back(
          {join(domain_words(w, w.target, l, r, false, all, nullptr, cls)),
           w.target.class_names[cls]});
    }
    ensure_parent(layout.classification());
    training::write_labeled_jsonl(layout.classification(), data);
  }

  {
    Rng r = root.fork("retrieval");
    ensure_parent(layout.alignment());
    std::ofstream src(layout.retrieval_sources());
    std::ofstream tgt(layout.retrieval_targets());
    std::ofstream align(layout.alignment());
    for (int i = 0; i < spec.parallel_pairs; ++i) {
      const size_t l = 1 + static_cast<size_t>(i) % (w.languages.size() - 1);
      const int topic = static_cast<int>(r.uniform_index(w.topics));
      std::vector<std::string> a;
      std::vector<std::string> b;
      for (int c : concept_chain(w, topic, r)) {
        a.push_back(w.words[0][c]);
        b.push_back(w.words[l][c]);
      }
      const std::string sid = "en-" + std::to_string(i);
      const std::string tid = w.languages[l] + "-" + std::to_string(i);
      src << nlohmann::json{{"id", sid}, {"lang", "en"}, {"text", join(a)}}.dump() << '\n';
      tgt << nlohmann::json{{"id", tid}, {"lang", w.languages[l]}, {"text", join(b)}}.dump()
          << '\n';
      align << sid << '\t' << tid << '\n';
    }
    if (!src || !tgt || !align) throw DataError("cannot write retrieval fixtures");
  }

  {
    std::ofstream meta(out / "fixture.json");
    meta << nlohmann::json{{"format_version", 1}, {"spec", to_json(spec)},
                           {"languages", w.languages}}
                .dump(2)
         << '\n';
    if (!meta) throw DataError("cannot write " + (out / "fixture.json").string());
  }
  return layout;
}

std::string directory_hash(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), dir));
  }
  std::sort(files.begin(), files.end());
  Sha256 h;
  for (const auto& rel : files) {
    std::ifstream in(dir / rel, std::ios::binary);
    const std::string content((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
    h.update_field(rel.generic_string());
    h.update_field(content);
  }
  return h.hex_digest();
}

std::vector<ingest::SentenceRecord> read_pool_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("pool directory " + dir.string() + " not found");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ingest::SentenceRecord> out;
  for (const auto& f : files) {
    auto result = ingest::read_corpus(f, f.stem().string(), "");
    if (!result.errors.empty()) {
      const auto& e = result.errors.front();
      throw DataError(f.string() + ":" + std::to_string(e.line) + ": " + e.message);
    }
    out.insert(out.end(), result.records.begin(), result.records.end());
  }
  return out;
}

std::vector<RetrievalSentence> read_retrieval_sentences(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<RetrievalSentence> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("id").get<std::string>(), j.at("text").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace mdapt::cli
