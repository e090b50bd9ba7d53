#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cpgrl/io/checkpoint.hpp"
#include "cpgrl/io/csv.hpp"
#include "cpgrl/rl/config.hpp"
#include "cpgrl/rl/trainer.hpp"

using namespace cpgrl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("cpgrl_io_" + std::to_string(Catch::rngSeed()) + "_" +
                std::to_string(reinterpret_cast<uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig tiny_config(const std::string& out_dir) {
    RunConfig c;
    c.seed = 5;
    c.out_dir = out_dir;
    c.env.legs = 2;
    c.env.episode_len = 50;
    c.train.batch = 4;
    c.train.babble_steps = 40;
    c.train.buffer_capacity = 2000;
    c.train.total_steps = 200;
    c.net.trunk1 = 12;
    c.net.trunk2 = 10;
    c.net.head_hidden = 8;
    c.net.critic = {12, 12, 8, 8};
    return c;
}

}  // namespace

TEST_CASE("config survives a json round trip") {
    RunConfig c = tiny_config("somewhere");
    c.env.goal.mode = GoalMode::goto_goal;
    c.env.goal.waypoints = {{1.0, 2.0}, {-3.0, 0.5}};
    c.env.fault_joints = {1, 3};
    c.train.algo = "ddpg";
    c.net.actor = "ff";
    c.cpg.alpha_phi = 2.5;
    const RunConfig back = RunConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK(back.env.goal.waypoints.size() == 2);
    CHECK(back.env.fault_joints == std::vector<int>{1, 3});
    CHECK(back.cpg.alpha_phi == 2.5);
}

TEST_CASE("config default file round trip is stable") {
    TempDir td;
    RunConfig def;
    def.save(td.file("a.json"));
    const RunConfig back = RunConfig::load(td.file("a.json"));
    back.save(td.file("b.json"));
    CHECK(slurp(td.file("a.json")) == slurp(td.file("b.json")));
}

TEST_CASE("unknown config keys are rejected") {
    nlohmann::json j = RunConfig{}.to_json();
    j["train"]["learning_rate"] = 0.1;
    CHECK_THROWS_AS(RunConfig::from_json(j), config_error);
    nlohmann::json j2 = RunConfig{}.to_json();
    j2["typo_section"] = nlohmann::json::object();
    CHECK_THROWS_AS(RunConfig::from_json(j2), config_error);
}

TEST_CASE("invalid config values are rejected with diagnostics") {
    nlohmann::json j = RunConfig{}.to_json();
    j["train"]["algo"] = "sac";
    CHECK_THROWS_WITH(RunConfig::from_json(j), Catch::Matchers::ContainsSubstring("algo"));
    nlohmann::json j2 = RunConfig{}.to_json();
    j2["env"]["goal_mode"] = "moon";
    CHECK_THROWS_AS(RunConfig::from_json(j2), config_error);
}

TEST_CASE("binary primitives round trip bit-exactly") {
    std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
    BinWriter w{ss};
    w.f64(0.1);
    w.f64(-1.0 / 3.0);
    w.i64(-42);
    w.u8(7);
    w.str("hello");
    Vec v{{1.5, -2.25, 1e-300}};
    w.vec(v);
    Mat m(2, 3);
    m << 1, 2, 3, 4, 5, 6;
    w.mat(m);

    BinReader r{ss};
    CHECK(r.f64() == 0.1);
    CHECK(r.f64() == -1.0 / 3.0);
    CHECK(r.i64() == -42);
    CHECK(r.u8() == 7);
    CHECK(r.str() == "hello");
    CHECK((r.vec() - v).norm() == 0.0);
    CHECK((r.mat() - m).norm() == 0.0);
}

TEST_CASE("truncated checkpoint data raises io_error") {
    std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
    BinWriter w{ss};
    w.u64(100);  // promises a 100-entry vector, delivers none
    BinReader r{ss};
    CHECK_THROWS_AS(r.vec(), io_error);
}

TEST_CASE("header rejects foreign files and versions") {
    {
        std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
        ss.write("NOPE", 4);
        BinReader r{ss};
        CHECK_THROWS_AS(read_header(r), io_error);
    }
    {
        std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
        ss.write(kCkptMagic, 4);
        const char bad_version = 99;
        ss.write(&bad_version, 1);
        BinReader r{ss};
        CHECK_THROWS_AS(read_header(r), io_error);
    }
}

TEST_CASE("rng state round trips through text exactly") {
    Rng a(12345);
    for (int i = 0; i < 100; ++i) (void)a();
    std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
    BinWriter w{ss};
    write_rng(w, a);
    Rng b;
    BinReader r{ss};
    read_rng(r, b);
    for (int i = 0; i < 100; ++i) CHECK(a() == b());
}

TEST_CASE("trainer checkpoint load-then-save is byte-identical") {
    TempDir td;
    Trainer t(tiny_config(""));
    t.run(120);
    t.save(td.file("a.bin"), true);
    auto t2 = Trainer::load(td.file("a.bin"));
    t2->save(td.file("b.bin"), true);
    CHECK(slurp(td.file("a.bin")) == slurp(td.file("b.bin")));

    SECTION("also without the replay buffer") {
        t.save(td.file("c.bin"), false);
        auto t3 = Trainer::load(td.file("c.bin"));
        t3->save(td.file("d.bin"), false);
        CHECK(slurp(td.file("c.bin")) == slurp(td.file("d.bin")));
        CHECK(fs::file_size(td.file("c.bin")) < fs::file_size(td.file("a.bin")));
    }
}

TEST_CASE("checkpoint restores the exact training stream") {
    TempDir td;
    RunConfig cfg = tiny_config("");
    Trainer a(cfg);
    a.run(80);
    a.save(td.file("mid.bin"), true);
    a.run(80);

    auto b = Trainer::load(td.file("mid.bin"));
    b->run(80);
    REQUIRE(b->env_steps() == a.env_steps());
    const Vec x = Vec::LinSpaced(a.module_nets(0).actor_in, -0.2, 0.7);
    const Vec pa = pack_params(a.module_nets(0).actor.act(x));
    const Vec pb = pack_params(b->module_nets(0).actor.act(x));
    CHECK((pa - pb).norm() == 0.0);
    CHECK(a.update_calls() == b->update_calls());
    CHECK(a.last_episode_return() == b->last_episode_return());
}

TEST_CASE("corrupt checkpoint config is an io_error") {
    TempDir td;
    {
        std::ofstream os(td.file("bad.bin"), std::ios::binary);
        BinWriter w{os};
        write_header(w, "{not json");
        w.u8(0);
    }
    CHECK_THROWS_AS(Trainer::load(td.file("bad.bin")), io_error);
}

TEST_CASE("csv writes a header and full-precision rows") {
    TempDir td;
    {
        CsvWriter w(td.file("t.csv"), {"a", "b"});
        w.row(std::vector<double>{0.1, 1.0 / 3.0});
        w.row({std::string("x"), std::string("y")});
    }
    std::ifstream in(td.file("t.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "a,b");
    std::getline(in, line);
    const auto comma = line.find(',');
    CHECK(std::stod(line.substr(0, comma)) == 0.1);
    CHECK(std::stod(line.substr(comma + 1)) == 1.0 / 3.0);
    std::getline(in, line);
    CHECK(line == "x,y");
}

TEST_CASE("csv rejects ragged rows") {
    TempDir td;
    CsvWriter w(td.file("r.csv"), {"a", "b", "c"});
    CHECK_THROWS_AS(w.row(std::vector<double>{1.0}), structural_error);
}

TEST_CASE("csv append continues without repeating the header") {
    TempDir td;
    {
        CsvWriter w(td.file("a.csv"), {"a", "b"});
        w.row(std::vector<double>{1, 2});
    }
    {
        CsvWriter w(td.file("a.csv"), {"a", "b"}, true);
        w.row(std::vector<double>{3, 4});
    }
    std::ifstream in(td.file("a.csv"));
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(all == "a,b\n1,2\n3,4\n");
}
