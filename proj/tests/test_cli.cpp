#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mixsel/criteria.hpp"
#include "mixsel/format.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string cli_path() {
  if (const char* p = std::getenv("MIXSEL_CLI_PATH")) return p;
#ifdef MIXSEL_CLI_PATH
  return MIXSEL_CLI_PATH;
#else
  FAIL("MIXSEL_CLI_PATH must point at the mixsel binary");
  return "";
#endif
}

std::string schema_dir() {
  if (const char* p = std::getenv("MIXSEL_SCHEMA_DIR")) return p;
#ifdef MIXSEL_SCHEMA_DIR
  return MIXSEL_SCHEMA_DIR;
#else
  FAIL("MIXSEL_SCHEMA_DIR must point at schemas/");
  return "";
#endif
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("mixsel-cli-test-" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CmdResult run_cli(const std::string& args) {
  const fs::path errfile = scratch_dir() / "stderr.txt";
  const std::string cmd = cli_path() + " " + args + " 2>" + errfile.string();
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CmdResult res;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) res.out.append(buf, got);
  const int status = pclose(pipe);
  res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  res.err = read_file(errfile);
  return res;
}

// minimal structural validation against the draft-07 subset the schemas use:
// type / required / properties / items / enum / $ref into #/definitions
void check_schema(const json& root, const json& schema, const json& value,
                  const std::string& where, std::vector<std::string>& errors) {
  if (schema.contains("$ref")) {
    const std::string ref = schema["$ref"];
    const std::string prefix = "#/definitions/";
    REQUIRE(ref.rfind(prefix, 0) == 0);
    check_schema(root, root["definitions"][ref.substr(prefix.size())], value, where, errors);
    return;
  }
  if (schema.contains("type")) {
    const std::string type = schema["type"];
    const bool ok = (type == "object" && value.is_object()) ||
                    (type == "array" && value.is_array()) ||
                    (type == "string" && value.is_string()) ||
                    (type == "integer" && value.is_number_integer()) ||
                    (type == "number" && value.is_number()) ||
                    (type == "boolean" && value.is_boolean());
    if (!ok) {
      errors.push_back(where + ": expected " + type + ", got " + std::string(value.type_name()));
      return;
    }
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& v : schema["enum"])
      if (v == value) found = true;
    if (!found) errors.push_back(where + ": value not in enum");
  }
  if (value.is_object()) {
    if (schema.contains("required"))
      for (const auto& key : schema["required"])
        if (!value.contains(key.get<std::string>()))
          errors.push_back(where + ": missing required key " + key.get<std::string>());
    if (schema.contains("properties"))
      for (const auto& [key, sub] : schema["properties"].items())
        if (value.contains(key)) check_schema(root, sub, value[key], where + "." + key, errors);
  }
  if (value.is_array() && schema.contains("items")) {
    int i = 0;
    for (const auto& item : value)
      check_schema(root, schema["items"], item, where + "[" + std::to_string(i++) + "]", errors);
  }
}

void require_schema(const std::string& schema_file, const json& value) {
  const json schema = json::parse(read_file(fs::path(schema_dir()) / schema_file));
  std::vector<std::string> errors;
  check_schema(schema, schema, value, "$", errors);
  for (const auto& e : errors) MESSAGE(e);
  CHECK(errors.empty());
}

fs::path laplace_csv() {
  const fs::path p = scratch_dir() / "laplace.csv";
  write_file(p, "x\n0\n1\n3\n");
  return p;
}

fs::path bimodal_csv() {
  static fs::path p;
  if (p.empty()) {
    p = scratch_dir() / "bimodal.csv";
    std::ostringstream data;
    data << "x\n";
    // two tight clusters; enough for k up to 3
    std::uint64_t s = 99;
    auto next = [&s] {
      s = s * 6364136223846793005ull + 1442695040888963407ull;
      return static_cast<double>(s >> 11) * 0x1p-53;
    };
    for (int i = 0; i < 200; ++i) {
      const double center = i % 2 == 0 ? 0.0 : 6.0;
      data << mixsel::format_double(center + 2.0 * next() - 1.0) << "\n";
    }
    write_file(p, data.str());
  }
  return p;
}

}  // namespace

TEST_CASE("help exits zero, missing subcommand exits two") {
  CHECK(run_cli("--help").code == 0);
  CHECK(run_cli("fit --help").code == 0);
  CHECK(run_cli("").code == 2);
  CHECK(run_cli("frobnicate").code == 2);
}

TEST_CASE("fit on the tiny laplace dataset hits the closed form") {
  const auto res = run_cli("fit --input " + laplace_csv().string() +
                           " --family laplace --k 1 --seed 7");
  REQUIRE(res.code == 0);
  const json out = json::parse(res.out);
  require_schema("fit_output.json", out);
  CHECK(out["command"] == "fit");
  CHECK(out["family"] == "laplace");
  CHECK(out["k"] == 1);
  CHECK(out["n"] == 3);
  CHECK(out["seed"] == 7);
  const auto& comp = out["fit"]["params"]["components"][0];
  CHECK(comp["location"].get<double>() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(comp["rate"].get<double>() == doctest::Approx(1.0).epsilon(1e-10));
  require_schema("mixture.json", out["fit"]["params"]);
}

TEST_CASE("fit output is byte-identical across runs with one seed") {
  const std::string args =
      "fit --input " + bimodal_csv().string() + " --family gaussian --k 2 --seed 11 --restarts 3";
  const auto a = run_cli(args);
  const auto b = run_cli(args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  const auto c = run_cli(args + " --init greedy-seed");
  REQUIRE(c.code == 0);  // different strategy still succeeds
}

TEST_CASE("usage errors exit with code two") {
  CHECK(run_cli("fit --input /nonexistent.csv --family laplace --k 1").code == 2);
  CHECK(run_cli("fit --input " + laplace_csv().string() + " --family klingon --k 1").code == 2);
  CHECK(run_cli("fit --input " + laplace_csv().string() + " --family laplace --k 0").code == 2);
  const std::string sel = "select --input " + bimodal_csv().string() + " --family gaussian ";
  CHECK(run_cli(sel + "--kmax 2 --criterion eps-bic").code == 2);   // --eps missing
  CHECK(run_cli(sel + "--kmax 2 --criterion nu-bic").code == 2);    // --nu missing
  CHECK(run_cli(sel + "--kmax 2 --criterion bic --nu 3").code == 2);  // stray --nu
  CHECK(run_cli(sel + "--kmax 2 --criterion gic").code == 2);
  const auto err = run_cli(sel + "--kmax 2 --criterion eps-bic");
  CHECK(err.err.find("error") != std::string::npos);
}

TEST_CASE("malformed csv input names the offending line") {
  const fs::path bad = scratch_dir() / "bad.csv";
  write_file(bad, "x\n1.0\npotato\n2.0\n");
  const auto res = run_cli("fit --input " + bad.string() + " --family laplace --k 1");
  CHECK(res.code == 2);
  CHECK(res.err.find("line 3") != std::string::npos);

  const fs::path nan = scratch_dir() / "nan.csv";
  write_file(nan, "x\n1.0\nnan\n");
  const auto rn = run_cli("fit --input " + nan.string() + " --family laplace --k 1");
  CHECK(rn.code == 2);
  CHECK(rn.err.find("NaN") != std::string::npos);

  const fs::path wide = scratch_dir() / "wide.csv";
  write_file(wide, "x,y\n1.0,2.0\n");
  CHECK(run_cli("fit --input " + wide.string() + " --family laplace --k 1").code == 2);

  const fs::path ragged = scratch_dir() / "ragged.csv";
  write_file(ragged, "x\n1.0\n2.0,3.0\n");
  CHECK(run_cli("fit --input " + ragged.string() + " --family laplace --k 1").code == 2);
}

TEST_CASE("select with kmax one and a schema-valid report") {
  const auto res = run_cli("select --input " + bimodal_csv().string() +
                           " --family gaussian --kmax 1 --criterion bic");
  REQUIRE(res.code == 0);
  const json out = json::parse(res.out);
  require_schema("selection_report.json", out);
  CHECK(out["selected_k"] == 1);
  CHECK(out["command"] == "select");
  CHECK(out["mode"] == "joint");
}

TEST_CASE("select reports agree between bic and nu-bic and are deterministic") {
  const std::string base = "select --input " + bimodal_csv().string() +
                           " --family gaussian --kmax 3 --criterion ";
  const std::string opts = " --seed 5 --restarts 3 --init greedy-seed";
  const auto rb = run_cli(base + "bic" + opts);
  const auto rn = run_cli(base + "nu-bic --nu 3" + opts);
  REQUIRE(rb.code == 0);
  REQUIRE(rn.code == 0);
  json jb = json::parse(rb.out);
  json jn = json::parse(rn.out);
  CHECK(jb["selected_k"] == jn["selected_k"]);
  REQUIRE(jb["path"].size() == jn["path"].size());
  for (std::size_t i = 0; i < jb["path"].size(); ++i) {
    CHECK(jb["path"][i]["risk"] == jn["path"][i]["risk"]);
    CHECK(jb["path"][i]["penalty"] == jn["path"][i]["penalty"]);
  }
  // byte-determinism holds once the wall clock is erased
  const auto rb2 = run_cli(base + "bic" + opts);
  json jb2 = json::parse(rb2.out);
  jb.erase("wall_time_seconds");
  jb2.erase("wall_time_seconds");
  CHECK(jb.dump() == jb2.dump());
}

TEST_CASE("select writes the criterion path csv") {
  const fs::path csv = scratch_dir() / "path.csv";
  const auto res = run_cli("select --input " + bimodal_csv().string() +
                           " --family gaussian --kmax 2 --criterion bic --path-csv " +
                           csv.string());
  REQUIRE(res.code == 0);
  const std::string content = read_file(csv);
  CHECK(content.rfind("k,risk,penalty,value\r\n", 0) == 0);
  CHECK(std::count(content.begin(), content.end(), '\n') == 3);
}

TEST_CASE("regression select uses the conditional mode") {
  const fs::path p = scratch_dir() / "lines.csv";
  std::ostringstream data;
  data << "u,y\n";
  std::uint64_t s = 4;
  auto next = [&s] {
    s = s * 6364136223846793005ull + 1442695040888963407ull;
    return static_cast<double>(s >> 11) * 0x1p-53;
  };
  for (int i = 0; i < 300; ++i) {
    const double u = 2.0 * next() - 1.0;
    const double slope = i % 2 == 0 ? 2.0 : -2.0;
    const double y = slope * u + 0.1 * (next() - 0.5);
    data << mixsel::format_double(u) << "," << mixsel::format_double(y) << "\n";
  }
  write_file(p, data.str());
  const auto res = run_cli("select --input " + p.string() +
                           " --family regression --response y --kmax 3 --criterion bic "
                           "--restarts 6 --seed 3");
  REQUIRE(res.code == 0);
  const json out = json::parse(res.out);
  require_schema("selection_report.json", out);
  CHECK(out["mode"] == "conditional");
  CHECK(out["selected_k"] == 2);

  // --response on a non-regression family is refused
  CHECK(run_cli("fit --input " + p.string() + " --family gaussian --k 1 --response y").code == 2);
  // --conditional with a non-regression family is refused
  CHECK(run_cli("select --input " + bimodal_csv().string() +
                " --family gaussian --kmax 2 --criterion bic --conditional")
            .code == 2);
}

TEST_CASE("fit accepts a regression design without intercept") {
  const fs::path p = scratch_dir() / "origin.csv";
  write_file(p, "u,y\n1,2.2\n2,4.1\n3,6.3\n4,7.9\n");
  const auto res = run_cli("fit --input " + p.string() +
                           " --family regression --response y --no-intercept --k 1");
  REQUIRE(res.code == 0);
  const json out = json::parse(res.out);
  CHECK(out["fit"]["params"]["components"][0]["coefficients"].size() == 1);
  CHECK(out["fit"]["params"]["components"][0]["coefficients"][0].get<double>() ==
        doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("penalty-table emits the documented grid") {
  const std::string args =
      "penalty-table --k 1..5 --n 100,1000 --criterion bic --seed 42";
  const auto res = run_cli(args);
  REQUIRE(res.code == 0);
  std::istringstream in(res.out);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "criterion,k,m,n,penalty,seed\r");
  std::vector<std::string> rows;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(line);
  REQUIRE(rows.size() == 10);  // 5 orders x 2 sample sizes, m defaulting to 2

  // spot check: every row matches an independent penalty computation, exactly
  const auto spec = mixsel::CriterionSpec::bic();
  for (auto row : rows) {
    if (row.back() == '\r') row.pop_back();
    std::istringstream fields(row);
    std::string crit, k_s, m_s, n_s, pen_s, seed_s;
    std::getline(fields, crit, ',');
    std::getline(fields, k_s, ',');
    std::getline(fields, m_s, ',');
    std::getline(fields, n_s, ',');
    std::getline(fields, pen_s, ',');
    std::getline(fields, seed_s, ',');
    CHECK(crit == "bic");
    CHECK(m_s == "2");
    CHECK(seed_s == "42");
    const double expect =
        mixsel::penalty(spec, std::stoi(k_s), std::stoi(m_s), std::stod(n_s));
    CHECK(mixsel::parse_double(pen_s) == expect);
  }

  // byte-identical on a second run
  const auto res2 = run_cli(args);
  CHECK(res.out == res2.out);
}

TEST_CASE("penalty-table validates its lists") {
  CHECK(run_cli("penalty-table --k 5..1 --n 100 --criterion bic").code == 2);
  CHECK(run_cli("penalty-table --k 0 --n 100 --criterion bic").code == 2);
  CHECK(run_cli("penalty-table --k potato --n 100 --criterion bic").code == 2);
  CHECK(run_cli("penalty-table --k 1..3 --n 100 --criterion eps-bic").code == 2);
}

TEST_CASE("thresholds reports the frozen landmark values") {
  const auto res = run_cli("thresholds --nu 3 --eps 0.02 --seed 1");
  REQUIRE(res.code == 0);
  const json out = json::parse(res.out);
  require_schema("thresholds.json", out);
  CHECK(out["seed"] == 1);
  CHECK(out["nu"]["at_1"]["value"].get<double>() ==
        doctest::Approx(3814279.104760214).epsilon(1e-12));
  CHECK(out["nu"]["at_1_1"]["value"].get<double>() ==
        doctest::Approx(574716993.9238869).epsilon(1e-12));
  CHECK(out["eps"]["at_1_1"]["log_value"].get<double>() ==
        doctest::Approx(117.39085287969579).epsilon(1e-13));
  CHECK(run_cli("thresholds").code == 2);  // neither --nu nor --eps
}

TEST_CASE("simulate smoke run is deterministic and schema-valid") {
  const fs::path csv = scratch_dir() / "table.csv";
  const std::string args = "simulate --scenario gaussian-2comp --replicates 2 --n-grid 300 "
                           "--seed 9 --out " + csv.string();
  const auto a = run_cli(args);
  REQUIRE(a.code == 0);
  const json out = json::parse(a.out);
  require_schema("simulation_summary.json", out);
  CHECK(out["command"] == "simulate");
  CHECK(out["scenario"] == "gaussian-2comp");
  CHECK(out["seed"] == 9);
  CHECK(out["k0"] == 2);
  CHECK(out["table"]["rows"].size() == 4);
  const std::string table = read_file(csv);
  CHECK(table.rfind("criterion,n,", 0) == 0);

  const auto b = run_cli(args);
  CHECK(a.out == b.out);

  CHECK(run_cli("simulate --scenario nonesuch").code == 2);
}

TEST_CASE("a config file feeds flags and rejects unknown keys") {
  const fs::path cfg = scratch_dir() / "fit.cfg";
  write_file(cfg, "restarts=2\nseed=21\n");
  const auto res = run_cli("fit --input " + laplace_csv().string() +
                           " --family laplace --k 1 --config " + cfg.string());
  REQUIRE(res.code == 0);
  const json out = json::parse(res.out);
  CHECK(out["seed"] == 21);
  CHECK(out["config"]["restarts"] == 2);

  const fs::path bad = scratch_dir() / "bad.cfg";
  write_file(bad, "restarts=2\nwarp_speed=9\n");
  CHECK(run_cli("fit --input " + laplace_csv().string() +
                " --family laplace --k 1 --config " + bad.string())
            .code == 2);
}

TEST_CASE("threads flag is accepted and does not change output") {
  const std::string base = "fit --input " + bimodal_csv().string() +
                           " --family gaussian --k 2 --seed 13";
  const auto a = run_cli(base);
  const auto b = run_cli(base + " --threads 4");
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(a.out == b.out);
}
