#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tsuq/bundle.hpp"
#include "tsuq/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "tsuq");
  std::ostringstream out, err;
  const int code = tsuq::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  return out;
}

/// A small synthetic workspace with a quick configuration.
struct Workspace {
  fs::path root;
  Workspace() {
    root = fs::temp_directory_path() / "tsuq_cli_test";
    fs::remove_all(root);
    fs::create_directories(root);
    std::ofstream(root / "run.cfg") << "# quick settings\n"
                                       "window = 14\nhorizon = 3\n"
                                       "encoder_hidden = 8,4\nprednet_hidden = 8,4\n"
                                       "pretrain_epochs = 2\ntrain_epochs = 3\n"
                                       "mc_iterations = 20\n"
                                       "synth_series = 2\nsynth_length = 400\n";
    REQUIRE(run({"--config", cfg(), "--out-dir", (root / "data").string(), "synth"}).code == 0);
  }
  std::string cfg() const { return (root / "run.cfg").string(); }
  std::string data() const { return (root / "data" / "series.csv").string(); }
  std::vector<std::string> base(const std::string& out) const {
    return {"--config", cfg(), "--data", data(), "--model-dir", (root / "model").string(), "--out-dir",
            (root / out).string()};
  }
  Result cmd(const std::string& out, const std::string& sub, std::vector<std::string> extra = {}) const {
    auto args = base(out);
    args.insert(args.end(), extra.begin(), extra.end());
    args.push_back(sub);
    return run(args);
  }
};

}  // namespace

TEST_CASE("cli usage errors") {
  CHECK(run({}).code == tsuq::cli::kUsage);
  CHECK(run({"frobnicate"}).code == tsuq::cli::kUsage);
  CHECK(run({"--set", "dropout_p=1.5", "synth"}).code == tsuq::cli::kUsage);
  CHECK(run({"--set", "no_such_key=1", "synth"}).code == tsuq::cli::kUsage);
  CHECK(run({"--help"}).code == tsuq::cli::kSuccess);
}

TEST_CASE("pretrain with a missing data file names the path") {
  const auto r = run({"--data", "/nonexistent/trips.csv", "--out-dir", (fs::temp_directory_path() / "tsuq_cli_x").string(),
                      "pretrain"});
  CHECK(r.code == tsuq::cli::kDataError);
  CHECK(r.err.find("/nonexistent/trips.csv") != std::string::npos);
}

TEST_CASE("end-to-end commands on a small synthetic panel") {
  const Workspace ws;
  CHECK(fs::exists(ws.root / "data" / "holidays.txt"));

  SUBCASE("train and infer without a bundle point at pretrain") {
    const auto r = ws.cmd("o", "train");
    CHECK(r.code != 0);
    CHECK(r.err.find("pretrain") != std::string::npos);
  }

  REQUIRE(ws.cmd("pre1", "pretrain").code == 0);
  CHECK(fs::exists(ws.root / "model" / "bundle.bin"));
  CHECK(fs::exists(ws.root / "pre1" / "effective_config.txt"));
  const auto history = slurp(ws.root / "pre1" / "pretrain_history.csv");
  const auto bundle_bytes = slurp(ws.root / "model" / "bundle.bin");
  REQUIRE(ws.cmd("pre2", "pretrain").code == 0);
  CHECK(slurp(ws.root / "pre2" / "pretrain_history.csv") == history);
  CHECK(slurp(ws.root / "model" / "bundle.bin") == bundle_bytes);

  SUBCASE("infer before train asks for train") {
    const auto r = ws.cmd("o", "infer");
    CHECK(r.code == tsuq::cli::kUsage);
    CHECK(r.err.find("train") != std::string::npos);
  }

  const auto train = ws.cmd("tr", "train");
  REQUIRE(train.code == 0);
  const auto bundle = tsuq::load_bundle(ws.root / "model" / "bundle.bin");
  REQUIRE(bundle.noise.has_value());
  CHECK(bundle.noise->eta2 > 0.0);

  SUBCASE("window mismatch is rejected") {
    const auto r = ws.cmd("o", "infer", {"--set", "window=10"});
    CHECK(r.code == tsuq::cli::kUsage);
    CHECK(r.err.find("window") != std::string::npos);
  }

  SUBCASE("infer is deterministic and decomposes eta exactly") {
    REQUIRE(ws.cmd("inf1", "infer").code == 0);
    REQUIRE(ws.cmd("inf2", "infer").code == 0);
    const auto a = slurp(ws.root / "inf1" / "predictions.csv");
    CHECK(a == slurp(ws.root / "inf2" / "predictions.csv"));
    const auto rows = lines(ws.root / "inf1" / "predictions.csv");
    CHECK(rows.front() == "series_id,date,y_hat,eta1,eta2,eta,lower,upper");
    REQUIRE(rows.size() > 10);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto f = split(rows[i]);
      REQUIRE(f.size() == 8);
      const double e1 = std::stod(f[3]), e2 = std::stod(f[4]), e = std::stod(f[5]);
      CHECK(std::abs(e * e - (e1 * e1 + e2 * e2)) <= 4.0 * std::numeric_limits<double>::epsilon() * e * e);
      CHECK(std::stod(f[6]) <= std::stod(f[2]));
      CHECK(std::stod(f[2]) <= std::stod(f[7]));
    }
    const auto metrics = lines(ws.root / "inf1" / "metrics.csv");
    CHECK(metrics.front() == "series_id,model,smape");
    CHECK(metrics.back().rfind("Average,enc_pred,", 0) == 0);
  }

  SUBCASE("p = 0 gives zero eta1") {
    REQUIRE(ws.cmd("p0", "infer", {"--set", "dropout_p=0"}).code == 0);
    const auto rows = lines(ws.root / "p0" / "predictions.csv");
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(split(rows[i])[3] == "0");
  }

  SUBCASE("calibrate emits three coverage columns and an average row") {
    REQUIRE(ws.cmd("cal", "calibrate").code == 0);
    const auto rows = lines(ws.root / "cal" / "coverage.csv");
    CHECK(rows.front() == "series_id,prednet,enc_pred,enc_pred_noise");
    CHECK(rows.size() == 4);
    CHECK(rows.back().rfind("Average,", 0) == 0);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto f = split(rows[i]);
      CHECK(std::stod(f[3]) >= std::stod(f[2]));
    }
  }

  SUBCASE("embed output width") {
    REQUIRE(ws.cmd("emb", "embed").code == 0);
    const auto rows = lines(ws.root / "emb" / "embeddings.csv");
    CHECK(split(rows.front()).size() == 4 + 3 + 2);
    CHECK(split(rows[1]).size() == 9);
  }

  SUBCASE("detect with labels writes an evaluation") {
    const auto labels = (ws.root / "data" / "spikes.csv").string();
    REQUIRE(ws.cmd("det", "detect", {"--set", "labels=" + labels}).code == 0);
    CHECK(lines(ws.root / "det" / "alerts.csv").front() == "series_id,timestamp,observed,lower,upper,is_alert");
    CHECK(lines(ws.root / "det" / "evaluation.csv").front() == "tp,fp,fn,precision,recall");
  }

  SUBCASE("a labels path is only required by detect") {
    const auto missing = (ws.root / "no_labels.csv").string();
    CHECK(ws.cmd("inf2", "infer", {"--set", "labels=" + missing}).code == 0);
    const auto r = ws.cmd("det2", "detect", {"--set", "labels=" + missing});
    CHECK(r.code == tsuq::cli::kDataError);
    CHECK(r.err.find("no_labels.csv") != std::string::npos);
  }
}

TEST_CASE("synth with sigma 0 is periodic after removing trend and yearly terms") {
  const auto out = fs::temp_directory_path() / "tsuq_cli_synth";
  fs::remove_all(out);
  REQUIRE(run({"--out-dir", out.string(), "--set", "synth_noise=0", "--set", "synth_yearly=0", "--set",
               "synth_trend=0", "--set", "synth_holiday_lift=0", "--set", "synth_series=1", "--set",
               "synth_length=60", "synth"})
              .code == 0);
  const auto rows = lines(out / "series.csv");
  REQUIRE(rows.size() == 61);
  for (std::size_t i = 8; i < rows.size(); ++i) CHECK(split(rows[i])[2] == split(rows[i - 7])[2]);
}
