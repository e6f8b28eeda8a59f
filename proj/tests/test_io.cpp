#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "vpstab/io.hpp"

using namespace vpstab;

TEST_CASE("VPDF round trip is bit exact") {
    PhaseGridSpec spec;
    spec.nr = 16;
    spec.nu = 16;
    spec.nEll = 16;
    spec.rMax = 2.0;
    spec.uMax = 1.5;
    spec.ellMax = 0.4;
    PhaseDF df = makePhaseGrid(spec);
    Rng rng(9);
    for (auto& sl : df.slices)
        for (auto& v : sl.f) v = rng.uniform();
    const char* path = "io_roundtrip_test.vpdf";
    writeSnapshot(path, df);
    PhaseDF back = readSnapshot(path);
    REQUIRE(back.slices.size() == df.slices.size());
    for (std::size_t s = 0; s < df.slices.size(); ++s) {
        CHECK(back.slices[s].ell == df.slices[s].ell);
        CHECK(back.slices[s].weight == df.slices[s].weight);
        CHECK(back.slices[s].rEdges == df.slices[s].rEdges);
        CHECK(back.slices[s].uEdges == df.slices[s].uEdges);
        CHECK(back.slices[s].f == df.slices[s].f);
        // measures are recomputed from the same closed form
        CHECK(back.slices[s].measure == df.slices[s].measure);
    }
    std::remove(path);
}

TEST_CASE("VPDF error paths: magic, version, truncation") {
    const char* path = "io_bad_test.vpdf";
    {
        std::string junk = "XAAA";
        writeTextFile(path, junk + std::string(16, '\0'));
        CHECK_THROWS_WITH_AS(readSnapshot(path), "VPDF: bad magic", std::runtime_error);
    }
    {
        std::string header = "VPDF";
        header += std::string(1, '\x02');
        header += std::string(7, '\0');
        writeTextFile(path, header);
        CHECK_THROWS_AS(readSnapshot(path), std::runtime_error);
    }
    {
        PhaseGridSpec spec;
        spec.nr = 4;
        spec.nu = 4;
        spec.nEll = 2;
        PhaseDF df = makePhaseGrid(spec);
        writeSnapshot(path, df);
        // truncate the payload
        std::ifstream in(path, std::ios::binary);
        std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        writeTextFile(path, buf.substr(0, buf.size() - 9));
        CHECK_THROWS_AS(readSnapshot(path), std::runtime_error);
    }
    std::remove(path);
}

TEST_CASE("JSON writer: ordering, escaping, finiteness guard") {
    Json rep = Json::object();
    rep.set("zeta", Json::number(1.0 / 3.0));
    rep.set("alpha", Json::integer(42));
    rep.set("name", Json::text("he said \"hi\""));
    Json arr = Json::array();
    arr.push(Json::number(1.5));
    arr.push(Json::boolean(true));
    rep.set("items", std::move(arr));
    std::string out = rep.dump();
    // insertion order preserved, 17 significant digits
    CHECK(out.find("zeta") < out.find("alpha"));
    CHECK(out.find("0.33333333333333331") != std::string::npos);
    CHECK(out.find("\\\"hi\\\"") != std::string::npos);
    CHECK(rep.allFinite());
    rep.set("bad", Json::number(std::nan("")));
    CHECK_FALSE(rep.allFinite());
}

TEST_CASE("config: sections, overrides, echo") {
    const char* path = "io_config_test.cfg";
    writeTextFile(path, "# comment\ntop=1\n[model]\nkind=king\ne0 = -0.5\n[grid]\nnodes=121\n");
    RunConfig cfg = RunConfig::fromFile(path);
    CHECK(cfg.get("top") == "1");
    CHECK(cfg.get("model.kind") == "king");
    CHECK(cfg.getDouble("model.e0", 0.0) == -0.5);
    CHECK(cfg.getLong("grid.nodes", 0) == 121);
    cfg.setOverride("model.kind", "polytrope");
    CHECK(cfg.get("model.kind") == "polytrope");
    std::string echo = Json::object().set("config", cfg.echo()).dump();
    CHECK(echo.find("polytrope") != std::string::npos);
    std::remove(path);
}

TEST_CASE("time series CSV header and layout") {
    std::vector<TimeSeriesRow> rows(2);
    rows[1].t = 0.25;
    rows[1].mass = 1.0;
    const char* path = "io_series_test.csv";
    writeTimeSeriesCsv(path, rows);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,mass,kinetic,field,hamiltonian,dL1_to_Q,dKin_to_Q,dGradPhi_to_Q");
    std::string line1, line2;
    std::getline(in, line1);
    std::getline(in, line2);
    CHECK(line2.substr(0, 5) == "0.25,");
    in.close();
    std::remove(path);
}
