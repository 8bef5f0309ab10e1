// External-interface tests: config parsing, checkpoint container, CSV shape
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "giorom/config.hpp"
#include "giorom/operator_model.hpp"
#include "giorom/params.hpp"
#include "giorom/rng.hpp"

using namespace giorom;

TEST_CASE("config parsing: comments, whitespace, typed getters") {
    Config cfg = Config::from_string(
        "# a comment\n"
        "train.lr0 = 2e-4\n"
        "train.steps=1000   # trailing comment\n"
        "train.fraction_fluid = 0.2, 0.25\n"
        "model.io_hidden = 32,64\n"
        "name = fluid run\n");
    CHECK(cfg.get_double("train.lr0", 0) == doctest::Approx(2e-4));
    CHECK(cfg.get_int("train.steps", 0) == 1000);
    auto [lo, hi] = cfg.get_range("train.fraction_fluid", {0, 0});
    CHECK(lo == doctest::Approx(0.2));
    CHECK(hi == doctest::Approx(0.25));
    auto list = cfg.get_list("model.io_hidden");
    REQUIRE(list.size() == 2);
    CHECK(list[0] == doctest::Approx(32));
    CHECK(cfg.get_string("name", "") == "fluid run");
    CHECK(cfg.get_double("missing", 7.0) == doctest::Approx(7.0));
    CHECK_THROWS_AS(Config::from_string("novalue\n"), UsageError);
}

TEST_CASE("model config json round trip") {
    ModelConfig cfg;
    cfg.latent = 24;
    cfg.modes = 5;
    cfg.grid_res = 12;
    cfg.io_hidden = {8, 16};
    cfg.gno_radius = 0.125;
    ModelConfig back = model_config_from_json(model_config_to_json(cfg));
    CHECK(back.latent == 24);
    CHECK(back.modes == 5);
    CHECK(back.grid_res == 12);
    CHECK(back.io_hidden == std::vector<int>{8, 16});
    CHECK(back.gno_radius == doctest::Approx(0.125));
}

TEST_CASE("checkpoint container: versioned, self-describing, corruption detected") {
    ParamStore store;
    Rng rng(1);
    Tensor t({3, 2});
    for (int64_t i = 0; i < 6; ++i) t.mut_data()[i] = rng.normal();
    store.add("layer.W", t);
    const std::string path = "/tmp/giorom_test_ckpt.bin";
    save_checkpoint(path, "{\"kind\":\"test\"}", store);

    ParamStore loaded;
    const std::string meta = load_checkpoint(path, loaded);
    CHECK(meta == "{\"kind\":\"test\"}");
    for (int64_t i = 0; i < 6; ++i) CHECK(loaded.at("layer.W").flat(i) == t.flat(i));

    // corrupt the magic
    {
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(0);
        f.write("XXXX", 4);
    }
    ParamStore bad;
    CHECK_THROWS_AS(load_checkpoint(path, bad), DataError);
    std::remove(path.c_str());
}
