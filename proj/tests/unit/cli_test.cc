#include "doctest.h"

#include <fstream>
#include <sstream>

#include "mdapt/cli/commands.h"
#include "mdapt/cli/fixtures.h"
#include "mdapt/cli/pipeline.h"
#include "mdapt/cli/profile.h"
#include "mdapt/common/error.h"
#include "temp_dir.h"

using namespace mdapt;
using namespace mdapt::cli;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "mdapt");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  size_t n = 0;
  while (std::getline(in, line)) n += !line.empty();
  return n;
}

// Small fixture and very short training so a whole pipeline takes seconds.
void write_tiny_config(const fs::path& path) {
  std::ofstream(path) << R"({
    "format_version": 1,
    "fixtures": {"sentences_per_language_domain": 60, "general_sentences_per_language": 80,
                 "heldout_sentences_per_domain": 20, "parallel_pairs": 20,
                 "ner_train_sentences": 30, "ner_eval_sentences": 10,
                 "classification_sentences": 60},
    "composition": {"budget": 200},
    "base_pretrain": {"max_steps": 4},
    "dapt": {"max_steps": 2},
    "dapt_adapter": {"max_steps": 2},
    "ner": {"max_epochs": 1},
    "ner_adapter": {"max_epochs": 1},
    "grid": [{"batch_size": 8, "epochs": 1}]
  })";
}

}  // namespace

TEST_CASE("fixture generation is deterministic") {
  testing::TempDir dir("fx");
  SyntheticSpec spec;
  spec.parallel_pairs = 1000;
  const auto a = generate_fixtures(spec, dir / "a");
  const auto b = generate_fixtures(spec, dir / "b");
  CHECK(directory_hash(a.root) == directory_hash(b.root));
  CHECK(line_count(a.alignment()) == 1000);
  std::vector<std::string> langs;
  for (const auto& r : read_pool_dir(a.general_pool())) {
    if (langs.empty() || langs.back() != r.lang) langs.push_back(r.lang);
  }
  CHECK(langs.size() == 3);
  spec.seed = 1;
  CHECK(directory_hash(generate_fixtures(spec, dir / "c").root) != directory_hash(a.root));
}

TEST_CASE("domain marker vocabularies are disjoint") {
  testing::TempDir dir("fx2");
  const auto fx = generate_fixtures(SyntheticSpec{}, dir.path());
  auto words_of = [](const std::vector<ingest::SentenceRecord>& recs) {
    std::set<std::string> out;
    for (const auto& r : recs) {
      std::istringstream in(r.text);
      std::string w;
      while (in >> w) out.insert(w);
    }
    return out;
  };
  const auto target = words_of(read_pool_dir(fx.pool(kTargetDomain, "domain-multilingual")));
  const auto other = words_of(read_pool_dir(fx.pool(kOtherDomain, "domain-multilingual")));
  size_t target_only = 0, other_only = 0;
  for (const auto& w : target) target_only += !other.count(w);
  for (const auto& w : other) other_only += !target.count(w);
  CHECK(target_only > 0);
  CHECK(other_only > 0);
  SyntheticSpec bad;
  bad.num_languages = 1;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("profiles") {
  const auto paper = paper_profile();
  CHECK(paper.composition.alpha == 0.3);
  CHECK(paper.composition.budget == 10'000'000);
  CHECK(paper.dapt.effective_batch == 2048);
  CHECK(paper.dapt.max_steps == 25'000);
  CHECK(paper.dapt.learning_rate == 5e-5);
  CHECK(paper.ner.learning_rate == 2e-5);
  CHECK(paper.ner.early_stop_patience == 25);
  CHECK(paper.ner.max_epochs == 100);
  CHECK(paper.ner_adapter.max_epochs == 30);
  CHECK(paper.grid.size() == 6);
  CHECK(paper.encoder.hidden_dim == 768);
  CHECK_THROWS_AS(profile_by_name("huge"), UsageError);
  const auto desk = desk_profile();
  CHECK(with_seed(desk, 1).dapt.seed != with_seed(desk, 2).dapt.seed);
  CHECK(with_seed(desk, 1).dapt.seed != with_seed(desk, 1).ner.seed);
  CHECK_THROWS_AS(apply_config(desk, {{"dapt", {}}}), UsageError);
  CHECK_THROWS_AS(apply_config(desk, {{"format_version", 2}}), UsageError);
  CHECK_THROWS_AS(apply_config(desk, {{"format_version", 1}, {"bogus", {}}}), UsageError);
  CHECK(apply_config(desk, {{"format_version", 1}, {"dapt", {{"max_steps", 7}}}}).dapt.max_steps == 7);
}

TEST_CASE("exit codes") {
  testing::TempDir dir("exit");
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"compose"}).code == 2);
  CHECK(run({"--profile", "huge", "fixtures"}).code == 2);
  CHECK(run({"--out", (dir / "m.json").string(), "compose", "--strategy", "xx", "--pool",
             "domain-english=" + (dir / "none").string()})
            .code == 2);
  const auto missing = run({"eval", "--task", "ner", "--gold", (dir / "no.conll").string(),
                            "--pred", (dir / "no.conll").string()});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("no.conll") != std::string::npos);
  std::ofstream(dir / "bad.conll") << "a O\nb\n";
  const auto bad = run({"eval", "--task", "ner", "--gold", (dir / "bad.conll").string(), "--pred",
                        (dir / "bad.conll").string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find(":2") != std::string::npos);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("eval on identical gold and predictions is perfect") {
  testing::TempDir dir("eval");
  std::ofstream(dir / "g.conll") << "Ann B-PER\nwent O\nto O\nRome B-LOC\n\nBob B-PER\n";
  auto r = run({"--out", (dir / "r.json").string(), "eval", "--task", "ner", "--gold",
                (dir / "g.conll").string(), "--pred", (dir / "g.conll").string()});
  CHECK(r.code == 0);
  CHECK(nlohmann::json::parse(r.out).at("span_micro_f1") == 1.0);
  CHECK(fs::exists(dir / "r.json"));
  std::ofstream(dir / "g.jsonl") << "{\"text\":\"a\",\"label\":\"x\"}\n{\"text\":\"b\",\"label\":\"y\"}\n";
  r = run({"eval", "--task", "clf", "--gold", (dir / "g.jsonl").string(), "--pred",
           (dir / "g.jsonl").string()});
  CHECK(nlohmann::json::parse(r.out).at("micro_f1") == 1.0);
}

TEST_CASE("retrieve on identity embeddings is perfect") {
  testing::TempDir dir("ret");
  {
    std::ofstream s(dir / "s.jsonl"), t(dir / "t.jsonl"), a(dir / "a.tsv");
    for (int i = 0; i < 10; ++i) {
      std::vector<double> v(10, 0.0);
      v[i] = 1.0;
      s << nlohmann::json{{"id", "s" + std::to_string(i)}, {"vector", v}}.dump() << '\n';
      t << nlohmann::json{{"id", "t" + std::to_string(i)}, {"vector", v}}.dump() << '\n';
      a << "s" << i << "\tt" << i << '\n';
    }
  }
  const auto r = run({"retrieve", "--vectors", "--source", (dir / "s.jsonl").string(), "--target",
                      (dir / "t.jsonl").string(), "--alignment", (dir / "a.tsv").string()});
  CHECK(r.code == 0);
  CHECK(nlohmann::json::parse(r.out).at("precision_at_k") == 1.0);
}

TEST_CASE("tokstats with the same vocabulary twice reports zero deltas") {
  testing::TempDir dir("tok");
  std::ofstream(dir / "g.jsonl") << "{\"text\":\"alpha beta\",\"lang\":\"en\",\"doc_id\":\"d\"}\n";
  std::ofstream(dir / "s.jsonl") << "{\"text\":\"gamma delta\",\"lang\":\"en\",\"doc_id\":\"d\"}\n";
  REQUIRE(run({"--out", (dir / "v.txt").string(), "vocab", "--input", (dir / "g.jsonl").string(),
               "--size", "40"})
              .code == 0);
  const auto r = run({"tokstats", "--vocab", (dir / "v.txt").string(), "--compare",
                      (dir / "v.txt").string(), "--general", (dir / "g.jsonl").string(),
                      "--specific", (dir / "s.jsonl").string(), "--input",
                      (dir / "s.jsonl").string()});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("gap").at("delta_general") == 0.0);
  CHECK(j.at("gap").at("delta_specific") == 0.0);
  CHECK(j.at("languages").at("en").at("sentences") == 1);
}

TEST_CASE("compose writes a replayable manifest") {
  testing::TempDir dir("compose");
  const auto fx = generate_fixtures(SyntheticSpec{}, dir / "fx");
  auto compose = [&](const std::string& out) {
    return run({"--out", (dir / out).string(), "compose", "--strategy", "md-ed", "--budget", "500",
                "--pool", "domain-multilingual=" + fx.pool(kTargetDomain, "domain-multilingual").string(),
                "--pool", "domain-english=" + fx.pool(kTargetDomain, "domain-english").string()});
  };
  REQUIRE(compose("a.json").code == 0);
  REQUIRE(compose("b.json").code == 0);
  std::ifstream a(dir / "a.json"), b(dir / "b.json");
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(run({"compose", "--strategy", "ed", "--pool", "nonsense=x"}).code == 2);
}

TEST_CASE("pipeline runs end to end, is reproducible and reports failing stages") {
  testing::TempDir dir("pipe");
  write_tiny_config(dir / "c.json");
  auto pipeline = [&](const std::string& out, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"--config", (dir / "c.json").string(), "--seed", "4", "--out",
                                  (dir / out).string(), "pipeline"};
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args);
  };
  const auto a = pipeline("a");
  REQUIRE(a.code == 0);
  CHECK(a.out.find("+M_D+M_WIKI") != std::string::npos);
  CHECK(a.out.find("ner") != std::string::npos);
  for (const auto* f : {"metrics.json", "timings.json", "summary.txt", "vocab.txt",
                        "manifest-md-mwiki.json", "checkpoints/base.ckpt",
                        "checkpoints/dapt-ed.ckpt", "checkpoints/ner-md-ed.ckpt"}) {
    CHECK_MESSAGE(fs::exists(dir / "a" / f), f);
  }
  REQUIRE(pipeline("b").code == 0);
  std::ifstream ma(dir / "a" / "metrics.json"), mb(dir / "b" / "metrics.json");
  std::stringstream sa, sb;
  sa << ma.rdbuf();
  sb << mb.rdbuf();
  CHECK(sa.str() == sb.str());

  CHECK(pipeline("c", {"--strategy", "nope"}).code == 2);
  const auto broken = pipeline("d", {"--base-checkpoint", (dir / "missing.ckpt").string()});
  CHECK(broken.code == 1);
  CHECK(broken.err.find("stage pretrain-base") != std::string::npos);

  const auto one = pipeline("e", {"--strategy", "md-mwiki", "--fixtures", (dir / "a" / "fixtures").string(),
                                  "--adapters"});
  CHECK(one.code == 0);
  const auto metrics = nlohmann::json::parse(std::ifstream(dir / "e" / "metrics.json"));
  CHECK(metrics.at("columns").size() == 2);
}

TEST_CASE("summary table marks missing cells") {
  const nlohmann::json m = {{"columns", {{"base", {{"ner_test_f1", 0.5}}}}}};
  const auto t = summary_table(m);
  CHECK(t.find("0.5000") != std::string::npos);
  CHECK(t.find("-") != std::string::npos);
}

TEST_CASE("numeric failures exit with code 3") {
  testing::TempDir dir("num");
  write_tiny_config(dir / "c.json");
  auto cfg = nlohmann::json::parse(std::ifstream(dir / "c.json"));
  cfg["base_pretrain"]["learning_rate"] = 1e30;
  cfg["base_pretrain"]["max_steps"] = 30;
  std::ofstream(dir / "c.json") << cfg.dump();
  const auto r = run({"--config", (dir / "c.json").string(), "--out", (dir / "run").string(),
                      "pipeline", "--strategy", "ed"});
  CHECK(r.code == 3);
  CHECK(r.err.find("stage pretrain-base") != std::string::npos);
}
