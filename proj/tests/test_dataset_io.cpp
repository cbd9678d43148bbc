#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "hiercrop/dataset_io.hpp"
#include "json.hpp"
#include "test_util.hpp"

using namespace hiercrop;
namespace fs = std::filesystem;

TEST_SUITE("dataset_io") {
  TEST_CASE("dataset round trip") {
    const auto cfg = hiercrop::testing::small_synth();
    Dataset ds;
    ds.tree = cfg.tree;
    ds.samples = generate_dataset(cfg, 3);
    ds.meta.dims = cfg.dims;
    ds.meta.level_sizes = cfg.tree.level_sizes();
    ds.meta.config_hash = "abc";
    for (const auto& s : ds.samples) ds.meta.ids.push_back(s.id);
    const fs::path root = fs::temp_directory_path() / "hiercrop_io_test";
    fs::remove_all(root);
    write_dataset(root, ds);
    CHECK(fs::file_size(root / "samples" / ds.samples[0].id / "hsi.bin") == 6 * 16 * 4);
    CHECK(fs::file_size(root / "samples" / ds.samples[0].id / "labels.bin") == 4 * 144 * 2);
    const Dataset back = read_dataset(root);
    CHECK(back.tree == ds.tree);
    CHECK(back.meta.ids == ds.meta.ids);
    CHECK(back.meta.dims == ds.meta.dims);
    REQUIRE(back.samples.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(back.samples[i] == ds.samples[i]);
    CHECK(&back.get(ds.samples[1].id) == &back.samples[1]);
    CHECK_THROWS(back.get("nope"));
    std::ifstream in(root / "meta.json");
    const auto meta = nlohmann::json::parse(in);
    CHECK(meta.contains("schema_version"));
    fs::remove_all(root);
  }

  TEST_CASE("prediction dump") {
    const fs::path root = fs::temp_directory_path() / "hiercrop_pred_test";
    fs::remove_all(root);
    LabelStack p(2, 3);
    for (std::size_t i = 0; i < p.data.size(); ++i) p.data[i] = static_cast<ClassId>(i % 5);
    write_prediction(root, "s1", p);
    CHECK(read_prediction(root, "s1", 2, 3) == p);
    fs::remove_all(root);
  }

  TEST_CASE("float32 file round trip") {
    const fs::path f = fs::temp_directory_path() / "hiercrop_f32.bin";
    const Tensor t({2, 2}, std::vector<double>{0.5, -1.25, 3.0, 0.0});
    write_f32(f, t);
    CHECK(read_f32(f, {2, 2}) == t);
    CHECK_THROWS(read_f32(f, {3, 2}));
    fs::remove(f);
  }
}
