#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "cpgrl/rl/config.hpp"

using namespace cpgrl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("cpgrl_cli_" + std::to_string(Catch::rngSeed()) + "_" +
                std::to_string(reinterpret_cast<uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run_cli(const TempDir& td, const std::string& args, const std::string& env_prefix = "") {
    const char* bin = std::getenv("CPGRL_BIN");
    REQUIRE(bin != nullptr);
    const std::string cmd = "cd '" + td.path.string() + "' && " + env_prefix + " '" + bin +
                            "' " + args + " > cli_out.txt 2>&1";
    const int raw = std::system(cmd.c_str());
    return WEXITSTATUS(raw);
}

std::string output_of(const TempDir& td) {
    std::ifstream in(td.path / "cli_out.txt");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

long line_count(const fs::path& p) {
    std::ifstream in(p);
    long n = 0;
    std::string line;
    while (std::getline(in, line)) ++n;
    return n;
}

// Episode summaries carry one wall-clock column; everything else must be
// reproducible bit for bit.
std::string drop_column(const fs::path& p, size_t drop) {
    std::ifstream in(p);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string cell;
        size_t i = 0;
        while (std::getline(ls, cell, ',')) {
            if (i != drop) out << cell << ',';
            ++i;
        }
        out << '\n';
    }
    return out.str();
}

void write_tiny_config(const fs::path& where, const std::string& out_dir) {
    RunConfig c;
    c.seed = 13;
    c.out_dir = out_dir;
    c.env.legs = 2;
    c.env.episode_len = 40;
    c.train.batch = 6;
    c.train.babble_steps = 60;
    c.train.buffer_capacity = 4000;
    c.train.total_steps = 120;
    c.train.eval_every = 50;
    c.train.eval_episodes = 1;
    c.train.checkpoint_every = 0;
    c.net.trunk1 = 12;
    c.net.trunk2 = 10;
    c.net.head_hidden = 8;
    c.net.critic = {12, 12, 8, 8};
    c.save(where.string());
}

}  // namespace

TEST_CASE("cli maps failure classes to exit codes") {
    TempDir td;
    CHECK(run_cli(td, "--help") == 0);
    CHECK(run_cli(td, "") == 2);
    CHECK(run_cli(td, "no-such-command") == 2);
    CHECK(run_cli(td, "deploy") == 2);                                // missing required
    CHECK(run_cli(td, "deploy --checkpoint missing.bin") == 4);      // unreadable file
    CHECK(run_cli(td, "train-modular --routine 2 --steps 10") == 2); // routine needs a source
}

TEST_CASE("init-config writes a loadable config with the requested seed") {
    TempDir td;
    REQUIRE(run_cli(td, "init-config --out cfg.json --seed 42") == 0);
    const RunConfig c = RunConfig::load((td.path / "cfg.json").string());
    CHECK(c.seed == 42);
    CHECK(c.env.legs == 4);
}

TEST_CASE("a rejected config exits with the structural code") {
    TempDir td;
    REQUIRE(run_cli(td, "init-config --out cfg.json") == 0);
    {
        std::ifstream in(td.path / "cfg.json");
        nlohmann::json j;
        in >> j;
        j["train"]["learning_rage"] = 0.01;
        std::ofstream out(td.path / "cfg.json");
        out << j.dump(2);
    }
    CHECK(run_cli(td, "train --config cfg.json --steps 10") == 2);
    CHECK(output_of(td).find("learning_rage") != std::string::npos);
}

TEST_CASE("train, deploy, and the analysis commands produce their artifacts") {
    TempDir td;
    write_tiny_config(td.path / "cfg.json", "run_a");
    REQUIRE(run_cli(td, "train --config cfg.json") == 0);
    CHECK(fs::exists(td.path / "run_a" / "metrics.csv"));
    CHECK(fs::exists(td.path / "run_a" / "evals.csv"));
    REQUIRE(fs::exists(td.path / "run_a" / "final.bin"));

    SECTION("deploy writes an episode summary and deterministic trajectories") {
        REQUIRE(run_cli(td,
                        "deploy --checkpoint run_a/final.bin --episodes 2 --seed 7 "
                        "--out dep_a --trajectory") == 0);
        CHECK(line_count(td.path / "dep_a" / "episodes.csv") == 3);
        REQUIRE(fs::exists(td.path / "dep_a" / "trajectory_0.csv"));
        REQUIRE(fs::exists(td.path / "dep_a" / "trajectory_1.csv"));
        CHECK(first_line(td.path / "dep_a" / "trajectory_0.csv").substr(0, 9) == "step,x,y,");

        REQUIRE(run_cli(td,
                        "deploy --checkpoint run_a/final.bin --episodes 2 --seed 7 "
                        "--out dep_b --trajectory") == 0);
        CHECK(slurp(td.path / "dep_a" / "trajectory_0.csv") ==
              slurp(td.path / "dep_b" / "trajectory_0.csv"));
        CHECK(drop_column(td.path / "dep_a" / "episodes.csv", 6) ==
              drop_column(td.path / "dep_b" / "episodes.csv", 6));
    }

    SECTION("deploy accepts an injected fault") {
        REQUIRE(run_cli(td,
                        "deploy --checkpoint run_a/final.bin --episodes 1 --seed 3 "
                        "--out dep_f --fault 0,1") == 0);
        CHECK(line_count(td.path / "dep_f" / "episodes.csv") == 2);
    }

    SECTION("ablate sweeps a named parameter into a csv") {
        REQUIRE(run_cli(td,
                        "ablate --checkpoint run_a/final.bin --param tau_c "
                        "--values 1,5 --episodes 1 --out ab") == 0);
        const fs::path csv = td.path / "ab" / "ablate_tau_c.csv";
        REQUIRE(fs::exists(csv));
        CHECK(first_line(csv) == "value,mean_return,std_return,min_return,max_return,episodes");
        CHECK(line_count(csv) >= 3);
    }

    SECTION("energy compares two checkpoints over matched seeds") {
        REQUIRE(run_cli(td,
                        "energy --checkpoint-a run_a/final.bin --checkpoint-b run_a/final.bin "
                        "--episodes 1 --out en") == 0);
        const fs::path csv = td.path / "en" / "energy.csv";
        REQUIRE(fs::exists(csv));
        CHECK(first_line(csv) ==
              "label,episode,seed,work_J,ms_per_iter,completion_s,distance");
        CHECK(line_count(csv) == 3);
    }

    SECTION("resume extends a run to the same artifacts as one unbroken run") {
        write_tiny_config(td.path / "cfg_full.json", "run_full");
        REQUIRE(run_cli(td, "train --config cfg_full.json --steps 200") == 0);

        write_tiny_config(td.path / "cfg_part.json", "run_part");
        REQUIRE(run_cli(td, "train --config cfg_part.json --steps 100") == 0);
        REQUIRE(run_cli(td, "train --resume run_part/final.bin --steps 200") == 0);
        CHECK(slurp(td.path / "run_full" / "metrics.csv") ==
              slurp(td.path / "run_part" / "metrics.csv"));
    }
}

TEST_CASE("gradcheck's decoupled recurrences pass standalone") {
    TempDir td;
    CHECK(run_cli(td, "gradcheck --direct-only --direct-cases 5") == 0);
}

TEST_CASE("perturb traces a single oscillator against its smoothness bound") {
    TempDir td;
    REQUIRE(run_cli(td, "perturb --mode parameter --steps 300 --at 100 --out pp") == 0);
    const fs::path csv = td.path / "pp" / "perturb_parameter.csv";
    REQUIRE(fs::exists(csv));
    CHECK(first_line(csv) == "step,output,bound,perturbed");
    CHECK(line_count(csv) == 302);
    const std::string report = output_of(td);
    CHECK(report.find("max_jump_over_bound") != std::string::npos);
}

TEST_CASE("relative outputs honour the out-root override") {
    TempDir td;
    REQUIRE(run_cli(td, "init-config --out sub/cfg.json", "CPGRL_OUT_ROOT=rooted") == 0);
    CHECK(fs::exists(td.path / "rooted" / "sub" / "cfg.json"));
    CHECK_FALSE(fs::exists(td.path / "sub" / "cfg.json"));
}
