#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>

#include "helpers.hpp"
#include "morphdis/analyzer.hpp"
#include "morphdis/corpus.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = MORPHDIS_CLI;
const fs::path kFixtures = MORPHDIS_FIXTURES;

int run(const std::string& args) {
  const std::string cmd = "'" + kCli + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(run("--help") == 0);
  CHECK(run("") == 1);
  CHECK(run("no-such-command") == 1);
  CHECK(run("corpus validate") == 1);
  CHECK(run("tagger train --kind sideways --train x --out y") == 1);
}

TEST_CASE("data errors exit with 2") {
  const fs::path dir = testutil::temp_dir("cli-data");
  morphdis::write_file(dir / "bad.jsonl", "{not json\n");
  CHECK(run("--schema " + (kFixtures / "toy_schema.json").string() + " corpus validate --in " + (dir / "bad.jsonl").string()) == 2);
  CHECK(run("corpus validate --in " + (dir / "missing.jsonl").string()) == 2);
  CHECK(run("--schema nowhere corpus validate --in " + (kFixtures / "bridge_corpus.jsonl").string()) == 2);
}

TEST_CASE("a small pipeline runs end to end") {
  const fs::path dir = testutil::temp_dir("cli-pipeline");
  const std::string schema = "--schema " + (kFixtures / "toy_schema.json").string();
  const std::string corpus = (kFixtures / "bridge_corpus.jsonl").string();
  CHECK(run(schema + " corpus validate --in " + corpus) == 0);
  CHECK(run(schema + " analyzer compile --train " + corpus + " --out " + (dir / "a.db").string()) == 0);
  CHECK(fs::exists(dir / "a.db"));
  CHECK(run(schema + " tagger train --train " + corpus + " --epochs 2 --out " + (dir / "m.json").string()) == 0);
  CHECK(run(schema + " tagger predict --model " + (dir / "m.json").string() + " --in " + corpus + " --out " +
            (dir / "d.jsonl").string()) == 0);
  CHECK(run(schema + " disambiguate --in " + corpus + " --distributions " + (dir / "d.jsonl").string() +
            " --analyzer " + (dir / "a.db").string() + " --train-ref " + corpus + " --out " +
            (dir / "p.jsonl").string()) == 0);
  CHECK(run(schema + " disambiguate --in " + corpus + " --distributions " + (dir / "d.jsonl").string() +
            " --analyzer " + (dir / "a.db").string() + " --train-ref " + corpus + " --tie-break classifier --out " +
            (dir / "q.jsonl").string()) == 0);
  CHECK(run(schema + " disambiguate --in " + corpus + " --distributions " + (dir / "d.jsonl").string() +
            " --tie-break coin --out " + (dir / "r.jsonl").string()) == 1);
  CHECK(run(schema + " eval accuracy --pred " + (dir / "p.jsonl").string() + " --gold " + corpus) == 0);
  CHECK(run("eval significance -b 0 -c 30") == 0);
}
