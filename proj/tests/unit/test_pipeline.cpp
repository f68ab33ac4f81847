#include "ssal/pipeline.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ssal;
namespace fs = std::filesystem;

namespace {

const fs::path data_dir = SSAL_TEST_DATA_DIR;

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CliResult cli(const std::string& args)
{
    const fs::path tmp = fs::temp_directory_path();
    const fs::path out = tmp / "ssal_cli_stdout.txt", err = tmp / "ssal_cli_stderr.txt";
    const std::string cmd = std::string("'") + SSAL_CLI_PATH + "' " + args + " >'" + out.string() + "' 2>'" +
                            err.string() + "'";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string first_line(const fs::path& p)
{
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) { fs::remove_all(path); }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("sample selection is evenly spaced")
{
    CHECK(select_samples(10, 5) == std::vector<Index>{0, 2, 4, 6, 8});
    CHECK(select_samples(7, 3) == std::vector<Index>{0, 2, 4});
    CHECK(select_samples(4, 4) == std::vector<Index>{0, 1, 2, 3});
    CHECK(select_samples(4, 0).empty());
    CHECK_THROWS_AS(select_samples(4, 5), ValidationError);
    CHECK_THROWS_AS(select_samples(4, -1), ValidationError);
}

TEST_CASE("matrix CSV round trip")
{
    TempDir dir("ssal_pipeline_csv");
    fs::create_directories(dir.path);
    Matrix m(2, 2);
    m << 0.125, 1, 0.5, 0.75;
    write_matrix_csv(dir.path / "m.csv", m, {"a", "b"}, 6);
    CHECK(first_line(dir.path / "m.csv") == "a,b");
    CHECK(read_matrix_csv(dir.path / "m.csv") == m);
    CHECK_THROWS_AS(write_matrix_csv(dir.path / "x.csv", m, {"a"}, 6), ValidationError);
}

TEST_CASE("stages refuse to run out of order")
{
    TempDir dir("ssal_pipeline_empty");
    fs::create_directories(dir.path);
    CHECK_THROWS_AS(load_run_config(RunLayout{dir.path}), ValidationError);
    CHECK(cli("evaluate --run '" + dir.path.string() + "'").code == 2);
}

TEST_CASE("full CLI pipeline on the fixture")
{
    TempDir dir("ssal_pipeline_run");
    const std::string run = "'" + dir.path.string() + "'";
    const std::string config = "'" + (data_dir / "fixture.ini").string() + "'";
    const RunLayout layout{dir.path};

    const CliResult train = cli("train --config " + config + " --out " + run);
    REQUIRE_MESSAGE(train.code == 0, train.err);
    CHECK(train.out.find("val_rse=") == 0);
    CHECK(fs::exists(layout.checkpoint()));
    CHECK(fs::exists(layout.manifest()));
    CHECK(fs::exists(layout.scaled_csv()));
    CHECK(first_line(layout.loss_history()) == "epoch,train_loss,val_rse,val_corr");
    CHECK(first_line(layout.shared_mask_csv()) == "periodic,noise,target,ar");

    const CliResult eval = cli("evaluate --run " + run);
    REQUIRE_MESSAGE(eval.code == 0, eval.err);
    CHECK(eval.out.find("rse=") == 0);
    CHECK(eval.out.find("excluded_features=0") != std::string::npos);
    CHECK(first_line(layout.metrics()) == "split,rse,corr,excluded_features,rse_unscaled,corr_unscaled");

    const CliResult interp = cli("interpret --run " + run + " --samples 5 --jobs 2");
    REQUIRE_MESSAGE(interp.code == 0, interp.err);
    CHECK(interp.out == "explained=5 failed=0\n");
    const auto ids = saliency_ids(layout);
    REQUIRE(ids.size() == 5);
    for (Index id : ids) {
        CHECK(fs::exists(layout.saliency_csv(id)));
        CHECK(fs::exists(layout.saliency_pgm(id)));
        CHECK(first_line(layout.saliency_trace(id)) == "step,loss");
        const Matrix m = read_matrix_csv(layout.saliency_csv(id));
        CHECK(m.rows() == 16);
        CHECK(m.cols() == 4);
    }

    const CliResult perm = cli("permute --run " + run);
    REQUIRE_MESSAGE(perm.code == 0, perm.err);
    CHECK(first_line(layout.permutation()) == "rank,feature,name,objective");
    const CliResult analyze = cli("analyze --run " + run + " --jobs 2");
    REQUIRE_MESSAGE(analyze.code == 0, analyze.err);
    CHECK(first_line(layout.feature_importance()) == "feature,name,mean_saliency,periodicity_score");
    const CliResult exp = cli("export --run " + run);
    REQUIRE_MESSAGE(exp.code == 0, exp.err);
    CHECK(first_line(layout.export_dir() / "predictions.csv").rfind("row,truth_periodic", 0) == 0);
    CHECK(fs::exists(layout.export_dir() / "shared_mask.pgm"));

    const std::string manifest = slurp(layout.manifest());
    for (const char* stage : {"prepare", "train", "evaluate", "interpret", "permute", "analyze", "export"})
        CHECK_MESSAGE(manifest.find(std::string("\"") + stage + "\"") != std::string::npos, stage);

    SUBCASE("error paths")
    {
        CHECK(cli("interpret --run " + run + " --samples 100000").code == 2);
        CHECK(cli("evaluate --run " + run + " --target-col 9").code == 2);
        CHECK(cli("").code == 2);
        CHECK(cli("train --config /nonexistent.ini --out " + run).code == 2);
        CHECK(cli("defaults").out.find("[permute]") != std::string::npos);
    }
}

TEST_CASE("unknown config keys are reported with exit code 2")
{
    TempDir dir("ssal_pipeline_badcfg");
    fs::create_directories(dir.path);
    std::ofstream(dir.path / "bad.ini") << "[data]\npath = x.csv\nwindw = 3\n[train]\nepoch = 2\n";
    const CliResult r = cli("train --config '" + (dir.path / "bad.ini").string() + "' --out '" +
                            (dir.path / "run").string() + "'");
    CHECK(r.code == 2);
    CHECK(r.err.find("data.windw") != std::string::npos);
    CHECK(r.err.find("train.epoch") != std::string::npos);
}

TEST_CASE("a bad SSAL_LOG value is rejected")
{
    CHECK(cli("defaults").code == 0);
    ::setenv("SSAL_LOG", "loud", 1);
    CHECK(cli("defaults").code == 2);
    ::unsetenv("SSAL_LOG");
}
