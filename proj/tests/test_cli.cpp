#include <expat.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using sturmian::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

long totient(long n) {
  long count = 0;
  for (long k = 1; k <= n; ++k) count += std::gcd(k, n) == 1;
  return count;
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("sturmian_cli_" + std::to_string(::getpid()))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path file(const std::string& name) const { return path_ / name; }
  std::size_t entries() const { return static_cast<std::size_t>(std::distance(fs::directory_iterator(path_), {})); }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Counts <line> elements per enclosing <g class="rational"> group, and the
// colours of highlighted lines per (p/q, class).
struct SvgStats {
  bool well_formed = false;
  std::map<std::string, int> lines_per_rational;
  std::map<std::string, std::vector<std::string>> highlight_classes;
  std::map<std::string, std::vector<std::string>> highlight_strokes;
  std::vector<std::string> group_stack;
};

void XMLCALL on_start(void* data, const XML_Char* name, const XML_Char** attrs) {
  auto* s = static_cast<SvgStats*>(data);
  std::map<std::string, std::string> a;
  for (int i = 0; attrs[i] != nullptr; i += 2) a[attrs[i]] = attrs[i + 1];
  const std::string tag = name;
  if (tag == "g") {
    std::string key;
    if (a["class"] == "rational") key = "r:" + a["data-p"] + "/" + a["data-q"];
    if (a["class"] == "convergent") key = "c:" + a["data-p"] + "/" + a["data-q"];
    s->group_stack.push_back(key);
  } else if (tag == "line" && !s->group_stack.empty()) {
    const std::string& key = s->group_stack.back();
    if (key.rfind("r:", 0) == 0) s->lines_per_rational[key.substr(2)]++;
    if (key.rfind("c:", 0) == 0) {
      s->highlight_classes[key.substr(2)].push_back(a["class"]);
      s->highlight_strokes[key.substr(2)].push_back(a["stroke"]);
    }
  }
}

void XMLCALL on_end(void* data, const XML_Char* name) {
  auto* s = static_cast<SvgStats*>(data);
  if (std::string(name) == "g") s->group_stack.pop_back();
}

SvgStats parse_svg(const std::string& text) {
  SvgStats stats;
  XML_Parser parser = XML_ParserCreate(nullptr);
  XML_SetUserData(parser, &stats);
  XML_SetElementHandler(parser, on_start, on_end);
  stats.well_formed = XML_Parse(parser, text.data(), static_cast<int>(text.size()), 1) == XML_STATUS_OK;
  XML_ParserFree(parser);
  return stats;
}

}  // namespace

TEST_CASE("bands: row counts and exact values") {
  Result r = invoke({"bands", "--pq", "1/2", "--V", "2"});
  REQUIRE(r.code == 0);
  auto rows = lines(r.out);
  CHECK(rows.front() == "p,q,V,index,lower,upper");
  CHECK(rows.size() == 1 + 2);

  r = invoke({"bands", "--pq", "0/1", "--V", "7"});
  REQUIRE(r.code == 0);
  rows = lines(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1] == "0,1,7,0,-2,2");

  r = invoke({"bands", "--cf", "golden", "--level", "6", "--V", "2"});
  REQUIRE(r.code == 0);
  CHECK(lines(r.out).size() == 1 + 13);
}

TEST_CASE("bands: invalid input exits 2") {
  CHECK(invoke({"bands", "--pq", "2/4", "--V", "1"}).code == 2);
  CHECK(invoke({"bands", "--pq", "1/2"}).code == 2);
  CHECK(invoke({"bands", "--pq", "1/2", "--V", "1", "--prec", "20"}).code == 2);
  CHECK(invoke({"bands", "--pq", "1/2", "--V", "1", "--format", "svg"}).code == 2);
  CHECK(invoke({"bands", "--cf", "golden", "--V", "1"}).code == 2);
  CHECK(invoke({"bands", "--pq", "1/2", "--cf", "golden", "--level", "2", "--V", "1"}).code == 2);
  CHECK(invoke({"nonsense"}).code == 2);
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("butterfly: CSV rows") {
  Result r = invoke({"butterfly", "--qmax", "2", "--V", "2"});
  REQUIRE(r.code == 0);
  auto rows = lines(r.out);
  CHECK(rows.front() == "p,q,band_index,lower,upper");
  CHECK(rows.size() == 1 + 3);

  r = invoke({"butterfly", "--qmax", "1", "--V", "2"});
  REQUIRE(r.code == 0);
  rows = lines(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].rfind("1,1,0,", 0) == 0);

  r = invoke({"butterfly", "--qmax", "30", "--V", "2"});
  REQUIRE(r.code == 0);
  long want = 0;
  for (long q = 1; q <= 30; ++q) want += q * totient(q);
  CHECK(static_cast<long>(lines(r.out).size()) == 1 + want);

  CHECK(invoke({"butterfly", "--V", "2"}).code == 2);
  CHECK(invoke({"butterfly", "--qmax", "0", "--V", "2"}).code == 2);
}

TEST_CASE("butterfly: SVG is well-formed with q segments per rational and typed highlights") {
  const Result r = invoke(
      {"butterfly", "--qmax", "12", "--V", "2", "--format", "svg", "--highlight-cf", "golden", "--depth", "5"});
  REQUIRE(r.code == 0);
  const SvgStats s = parse_svg(r.out);
  REQUIRE(s.well_formed);
  long rationals = 0;
  for (long q = 1; q <= 12; ++q) rationals += totient(q);
  CHECK(static_cast<long>(s.lines_per_rational.size()) == rationals);
  for (const auto& [pq, count] : s.lines_per_rational) {
    CAPTURE(pq);
    CHECK(count == std::stoi(pq.substr(pq.find('/') + 1)));
  }
  // Golden chain 0/1, 1/1, 1/2, 2/3, 3/5, 5/8 with A blue and B red.
  for (const char* pq : {"0/1", "1/1", "1/2", "2/3", "3/5", "5/8"}) {
    CAPTURE(pq);
    REQUIRE(s.highlight_classes.count(pq) == 1);
    const auto& classes = s.highlight_classes.at(pq);
    const auto& strokes = s.highlight_strokes.at(pq);
    CHECK(classes.size() == static_cast<std::size_t>(std::stoi(std::string(pq).substr(std::string(pq).find('/') + 1))));
    for (std::size_t i = 0; i < classes.size(); ++i) {
      CHECK((classes[i] == "A" || classes[i] == "B"));
      CHECK(strokes[i] == (classes[i] == "A" ? "blue" : "red"));
    }
  }
  CHECK(s.highlight_classes.at("0/1") == std::vector<std::string>{"A"});
  CHECK(s.highlight_classes.at("1/1") == std::vector<std::string>{"B"});
  CHECK(s.highlight_classes.at("1/2") == std::vector<std::string>{"B", "A"});
}

TEST_CASE("tree: node counts, formats and depth validation") {
  Result r = invoke({"tree", "--cf", "0,1,2,4", "--V", "2", "--depth", "3"});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["nodes"].size() == 1 + 1 + 1 + 3 + 13);

  r = invoke({"tree", "--cf", "golden", "--V", "2", "--depth", "2"});
  REQUIRE(r.code == 0);
  std::map<int, int> per_level;
  const auto golden_doc = nlohmann::json::parse(r.out);
  for (const auto& n : golden_doc["nodes"]) {
    if (!n["level"].is_null() && n["level"].get<int>() >= 0) per_level[n["level"].get<int>()]++;
  }
  CHECK(per_level == std::map<int, int>{{0, 1}, {1, 1}, {2, 2}});

  r = invoke({"tree", "--cf", "golden", "--V", "2", "--depth", "4", "--format", "dot"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("digraph", 0) == 0);

  CHECK(invoke({"tree", "--cf", "golden", "--V", "2", "--depth", "1"}).code == 2);
  CHECK(invoke({"tree", "--cf", "golden", "--V", "0", "--depth", "4"}).code == 2);
}

TEST_CASE("gaps: certificates, summary and exit status") {
  Result r = invoke({"gaps", "--cf", "golden", "--V", "6", "--n-range", "-5..5", "--depth", "10"});
  CHECK(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  REQUIRE(doc["certificates"].size() == 10);
  for (const auto& c : doc["certificates"]) CHECK(c["status"] == "certified");
  CHECK(r.err.find("certified 10/10") != std::string::npos);

  // Negative coupling goes through the mirror transfer.
  r = invoke({"gaps", "--cf", "golden", "--V", "-6", "--n-range", "1..3", "--depth", "8"});
  CHECK(r.code == 0);
  const auto mirrored = nlohmann::json::parse(r.out);
  for (const auto& c : mirrored["certificates"]) {
    CHECK(c["V"] == "-6");
    CHECK(c["status"] == "certified");
  }

  // Depth too shallow to certify anything exits 1.
  r = invoke({"gaps", "--cf", "golden", "--V", "0.5", "--n-range", "1..2", "--depth", "4"});
  CHECK(r.code == 1);

  CHECK(invoke({"gaps", "--cf", "golden", "--V", "0", "--n-range", "1..2", "--depth", "6"}).code == 2);
  CHECK(invoke({"gaps", "--cf", "golden", "--V", "2", "--n-range", "1-2", "--depth", "6"}).code == 2);
}

TEST_CASE("verify: suites and exit codes") {
  Result r = invoke({"verify", "--suite", "spectrum"});
  CHECK(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["passed"] == true);
  CHECK(invoke({"verify", "--suite", "bogus"}).code == 2);
}

TEST_CASE("outputs are deterministic and written atomically") {
  TempDir dir;
  const fs::path a = dir.file("a.csv");
  const fs::path b = dir.file("b.csv");
  REQUIRE(invoke({"butterfly", "--qmax", "15", "--V", "2", "--out", a.string()}).code == 0);
  REQUIRE(invoke({"butterfly", "--qmax", "15", "--V", "2", "--out", b.string()}).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(!slurp(a).empty());

  const fs::path ja = dir.file("a.json");
  const fs::path jb = dir.file("b.json");
  REQUIRE(invoke({"gaps", "--cf", "golden", "--V", "6", "--n-range", "-2..2", "--depth", "8", "--out", ja.string()})
              .code == 0);
  REQUIRE(invoke({"gaps", "--cf", "golden", "--V", "6", "--n-range", "-2..2", "--depth", "8", "--out", jb.string()})
              .code == 0);
  CHECK(slurp(ja) == slurp(jb));

  // A failing run leaves an existing file untouched and creates no new file.
  const std::string before = slurp(a);
  CHECK(invoke({"bands", "--pq", "2/4", "--V", "1", "--out", a.string()}).code == 2);
  CHECK(slurp(a) == before);
  const fs::path c = dir.file("c.csv");
  CHECK(invoke({"bands", "--pq", "2/4", "--V", "1", "--out", c.string()}).code == 2);
  CHECK_FALSE(fs::exists(c));
  CHECK(dir.entries() == 4);
}
