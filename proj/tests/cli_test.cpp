#include <gtest/gtest.h>
#include <sys/wait.h>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "robustcounter/cone.hpp"
#include "robustcounter/robustify.hpp"
#include "robustcounter/text_format.hpp"

namespace fs = std::filesystem;
using namespace robustcounter;

namespace {

const std::string kCli = RC_CLI_PATH;
const std::string kData = RC_DATA_DIR;

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run(const std::string& args, const std::string& env = {}) {
  const std::string cmd = env + (env.empty() ? "" : " ") + kCli + " " + args + " 2>&1";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string data(const std::string& name) { return kData + "/" + name; }

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "rc_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch(name);
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST(CliSolve, DemoLp) {
  const CliResult r = run("solve " + data("demo_lp.txt"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("objective: 12.000000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("x = 4.000000"), std::string::npos) << r.out;
}

TEST(CliSolve, ExitCodes) {
  EXPECT_EQ(run("solve " + data("infeasible.txt")).code, 2);
  const CliResult garbage = run("solve " + data("garbage.txt"));
  EXPECT_EQ(garbage.code, 1);
  EXPECT_NE(garbage.out.find("line 4"), std::string::npos) << garbage.out;
  const fs::path unbounded =
      write_file("unbounded.txt", "#vars\nx continuous 0 inf\n#obj\nmax 1*x\n#cons\n#end\n");
  EXPECT_EQ(run("solve " + unbounded.string()).code, 3);
  // The LP relaxation is fractional, so one node cannot finish the search.
  const fs::path knap = write_file(
      "knap.txt",
      "#vars\na integer 0 5\nb integer 0 5\n#obj\nmax 5*a + 4*b\n#cons\nw: 6*a + 4*b <= 23\n"
      "v: 1*a + 2*b <= 7\n#end\n");
  EXPECT_EQ(run("--node-limit 1 solve " + knap.string()).code, 4);
  EXPECT_EQ(run("solve " + knap.string()).code, 0);
  EXPECT_EQ(run("solve /nonexistent/model.txt").code, 1);
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST(CliSolve, JsonMirror) {
  const CliResult r = run("solve " + data("demo_lp.txt") + " --json");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["status"], "optimal");
  EXPECT_DOUBLE_EQ(j["objective"].get<double>(), 12.0);
  EXPECT_DOUBLE_EQ(j["values"]["x"].get<double>(), 4.0);
}

TEST(CliRobustify, ZeroLevelsDuplicateNominalRows) {
  const CliResult r = run("robustify " + data("demo_milp.txt") + " " + data("demo_milp.ann") +
                    " --mode irc --eps 0 --delta 0");
  ASSERT_EQ(r.code, 0) << r.out;
  const Model m = import_text(r.out);
  for (const char* label : {"weight", "labour"}) {
    const Constraint& nominal = m.constraint(*m.find_constraint(label));
    const Constraint& robust = m.constraint(*m.find_constraint(std::string(label) + "__irc"));
    EXPECT_EQ(robust.rhs, nominal.rhs);
    for (const Term& t : nominal.lhs.terms()) {
      EXPECT_EQ(robust.lhs.coefficient(t.var), t.coef);
    }
    for (const Term& t : robust.lhs.terms()) {
      if (nominal.lhs.coefficient(t.var) == 0.0) {
        EXPECT_EQ(t.coef, 0.0);
      }
    }
  }
}

TEST(CliRobustify, ConeScaleForOmegaTwo) {
  const CliResult r = run("robustify " + data("demo_milp.txt") + " " + data("demo_milp.ann") +
                    " --mode rc --eps 0.1 --kappa 0.1353352832366127");
  ASSERT_EQ(r.code, 0) << r.out;
  const Model m = import_text(r.out);
  const Constraint& row = m.constraint(*m.find_constraint("weight__rc"));
  ASSERT_TRUE(row.cone.has_value());
  EXPECT_NEAR(row.cone->scale, 0.2, 1e-12);
}

TEST(CliRobustify, OutputRoundTripsAndIsIdempotent) {
  const fs::path a = scratch("rob_a.txt"), b = scratch("rob_b.txt");
  const std::string args = "robustify " + data("demo_milp.txt") + " " + data("demo_milp.ann") +
                           " --mode rc --eps 0.1 --delta 0.05 --kappa 0.14 -o ";
  ASSERT_EQ(run(args + a.string()).code, 0);
  ASSERT_EQ(run(args + b.string()).code, 0);
  std::stringstream sa, sb;
  sa << std::ifstream(a).rdbuf();
  sb << std::ifstream(b).rdbuf();
  EXPECT_EQ(sa.str(), sb.str());
  const Model model = read_model_file(data("demo_milp.txt"));
  const UncertainSet set = read_annotation_file(data("demo_milp.ann"), model);
  const Solution in_process =
      solve(symmetric_robust_counterpart(model, set, 0.1, 0.05, 0.14).model);
  const Solution reread = solve(read_model_file(a.string()));
  ASSERT_EQ(in_process.status, SolveStatus::kOptimal);
  EXPECT_NEAR(reread.objective, in_process.objective, 1e-9);
}

TEST(CliRobustify, UnknownLabelNamed) {
  const fs::path ann = write_file("bad.ann", "weight a(bounded)\nnosuchrow b(bounded)\n");
  const CliResult r = run("robustify " + data("demo_milp.txt") + " " + ann.string() + " --mode irc");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("nosuchrow"), std::string::npos) << r.out;
}

TEST(CliSitesel, OneSiteFixture) {
  const CliResult r = run("sitesel " + data("sitesel_one"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("open: site 1"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("E = 30.000000"), std::string::npos) << r.out;
  EXPECT_EQ(run("sitesel " + data("sitesel_one") + " --mode irc --eps 0.1").code, 0);
  EXPECT_EQ(run("sitesel " + data("sitesel_one") + " --mode irc --eps 0.3").code, 2);
  EXPECT_EQ(run("sitesel " + data("sitesel_one") + " --mode rc --eps 0.1 --kappa 0.6").code, 0);
}

TEST(CliSitesel, MissingProbabilityFile) {
  const fs::path dir = scratch("no_prob");
  fs::create_directories(dir);
  for (const char* f : {"units.csv", "sites.csv", "config.txt"}) {
    fs::copy_file(data("sitesel_one") + "/" + f, dir / f, fs::copy_options::overwrite_existing);
  }
  fs::remove(dir / "prob.csv");
  const CliResult r = run("sitesel " + dir.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("prob.csv"), std::string::npos) << r.out;
}

TEST(CliSweep, GridRowsAndStatuses) {
  const CliResult r = run("sweep --instance " + data("sitesel_demo") +
                    " --mode irc --grid 'eps=0:0.05:0.1'");
  ASSERT_EQ(r.code, 0) << r.out;
  std::istringstream in(r.out);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 4);
  EXPECT_EQ(r.out.rfind("epsilon,delta,kappa,status,objective,nominal_objective,relative_gap\n",
                        0),
            0u);

  const CliResult mixed =
      run("sweep --instance " + data("sitesel_one") + " --mode irc --grid 'eps=0,0.3,0.1'");
  ASSERT_EQ(mixed.code, 0) << mixed.out;
  EXPECT_NE(mixed.out.find("\n0.3,0,1,infeasible,,30,\n"), std::string::npos) << mixed.out;
  EXPECT_NE(mixed.out.find("\n0.1,0,1,optimal,30,30,0\n"), std::string::npos) << mixed.out;

  EXPECT_EQ(run("sweep --instance " + data("sitesel_one") + " --grid ''").code, 1);
  EXPECT_EQ(run("sweep --instance " + data("sitesel_one") + " --grid 'eps=1:x:2'").code, 1);
}

TEST(CliSweep, DeterministicAcrossJobsAndModelInput) {
  const std::string base = "sweep --model " + data("demo_milp.txt") + " --annotations " +
                           data("demo_milp.ann") +
                           " --mode rc --grid 'eps=0:0.1:0.3 kappa=1,0.14,0.05'";
  const CliResult a = run(base + " --jobs 1");
  const CliResult b = run(base + " --jobs 4");
  ASSERT_EQ(a.code, 0) << a.out;
  EXPECT_EQ(a.out, b.out);
  const fs::path out = scratch("sweep.csv");
  const CliResult c = run(base + " -o " + out.string());
  ASSERT_EQ(c.code, 0) << c.out;
  std::stringstream file;
  file << std::ifstream(out).rdbuf();
  EXPECT_EQ(file.str(), a.out);
}

TEST(CliValidate, CornerAndMonteCarlo) {
  const std::string base =
      "validate " + data("demo_milp.txt") + " " + data("demo_milp.ann") + " --eps 0.1";
  const CliResult corner = run(base + " --mode irc --check corner");
  ASSERT_EQ(corner.code, 0) << corner.out;
  EXPECT_NE(corner.out.find("corners checked: 32"), std::string::npos) << corner.out;
  EXPECT_NE(corner.out.find("certified: yes"), std::string::npos) << corner.out;
  const CliResult nominal = run(base + " --mode nominal --check corner");
  EXPECT_NE(nominal.out.find("certified: no"), std::string::npos) << nominal.out;

  const CliResult env = run(base + " --mode rc --kappa 0.05 --check mc --samples 2000",
                      "ROBUSTCOUNTER_SEED=5");
  ASSERT_EQ(env.code, 0) << env.out;
  EXPECT_NE(env.out.find("seed 5"), std::string::npos) << env.out;
  const CliResult again = run(base + " --mode rc --kappa 0.05 --check mc --samples 2000 --seed 5");
  EXPECT_EQ(env.out, again.out);
  EXPECT_EQ(run(base + " --check mc --samples 10").code, 1);
}
